//! Free-space propagators, branch conventions and the radial quadrature used
//! for every isotropic momentum integral.
//!
//! Units: c = ħ = ε₀ = 1, lengths in a user-chosen unit `L₀`, and the spectral
//! variable is the wavenumber `k = ω/c`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::quadrature::{self, Tolerance};

pub type C64 = Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A positive wavenumber in units of `1/L₀`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Wavenumber(f64);

impl Wavenumber {
    pub fn new(k: f64) -> Result<Self> {
        if k > 0.0 && k.is_finite() {
            Ok(Self(k))
        } else {
            domain(format!("wavenumber must be positive and finite, got {k}"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Angular frequency in internal units (equal to `k` since c = 1).
    pub fn omega(self) -> f64 {
        self.0
    }

    /// From an SI angular frequency (rad/s) with length unit `l0` metres.
    pub fn from_si_angular_frequency(omega_si: f64, l0: f64) -> Result<Self> {
        Self::new(omega_si / SPEED_OF_LIGHT * l0)
    }

    /// SI angular frequency (rad/s) for length unit `l0` metres.
    pub fn to_si_angular_frequency(self, l0: f64) -> f64 {
        self.0 / l0 * SPEED_OF_LIGHT
    }

    /// The retarded spectral point `k(1 + iη)`.
    pub fn retarded(self, eta: f64) -> C64 {
        C64::new(self.0, self.0 * eta)
    }
}

/// A permittivity together with its refractive index on the passive branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPermittivitySqrt {
    pub eps: C64,
    pub sqrt_eps: C64,
    /// The principal root was negated to land on the passive branch.
    pub flipped: bool,
    /// ε sits on the negative real axis (purely imaginary index).
    pub on_cut: bool,
}

impl ComplexPermittivitySqrt {
    pub fn new(eps: C64) -> Self {
        let mut s = eps.sqrt();
        // Im ε < 0 (gain) has no root with both parts non-negative; Im ≥ 0 wins.
        let mut flipped = false;
        if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
            s = -s;
            flipped = true;
        }
        Self {
            eps,
            sqrt_eps: s,
            flipped,
            on_cut: eps.im == 0.0 && eps.re < 0.0,
        }
    }

    /// Real refractive index n.
    pub fn n(&self) -> f64 {
        self.sqrt_eps.re
    }

    /// Extinction coefficient κ.
    pub fn kappa(&self) -> f64 {
        self.sqrt_eps.im
    }
}

/// Controls for every momentum-space radial integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// UV cutoff in `1/L₀`; `f64::INFINITY` integrates the full half-line.
    pub q_max: f64,
    /// Pole shift as a fraction of k.
    pub eta: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Two-point Richardson extrapolation of the η → 0 limit.
    pub richardson: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            q_max: f64::INFINITY,
            eta: 1e-6,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
            richardson: true,
        }
    }
}

impl QuadratureSpec {
    pub fn with_q_max(mut self, q_max: f64) -> Self {
        self.q_max = q_max;
        self
    }

    pub fn validate(&self, k: Wavenumber) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return domain(format!("rel_tol must lie in (0, 1e-2], got {}", self.rel_tol));
        }
        if !(self.q_max > k.get()) {
            return domain(format!("q_max = {} must exceed k = {}", self.q_max, k.get()));
        }
        if !(self.eta >= 0.0) {
            return domain("eta must be non-negative");
        }
        if self.max_subdivisions == 0 {
            return domain("max_subdivisions must be positive");
        }
        Ok(())
    }

    pub(crate) fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: 1e-300,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Free transverse propagator `1/(k² − q²)` at the spectral point `kc`
/// (pass [`Wavenumber::retarded`] for the iη prescription).
pub fn g0_perp(q: f64, kc: C64) -> Result<C64> {
    let d = kc * kc - q * q;
    if d == C64::new(0.0, 0.0) {
        return domain(format!("transverse pole hit at q = {q} with no pole shift"));
    }
    Ok(d.inv())
}

/// Free longitudinal propagator `1/k²`.
pub fn g0_par(kc: C64) -> C64 {
    (kc * kc).inv()
}

/// A 3×3 complex dyadic, row-major.
pub type Dyadic = [[C64; 3]; 3];

pub fn dyadic_zero() -> Dyadic {
    [[C64::new(0.0, 0.0); 3]; 3]
}

/// Transverse and longitudinal (with respect to r̂) amplitudes of the free
/// real-space propagator, `G = A (𝕀 − r̂r̂) + B r̂r̂`.
pub fn g0_realspace_amplitudes(r: f64, k: f64) -> (C64, C64) {
    let kr = k * r;
    let pre = -(I * kr).exp() / (4.0 * PI * r);
    let inv = 1.0 / kr;
    let a = pre * (c(1.0) + I * inv - c(inv * inv));
    let b = pre * (-2.0 * I * inv + c(2.0 * inv * inv));
    (a, b)
}

/// Static plus radiative free propagator for separation `r` along unit vector `dir`.
pub fn g0_realspace(r: f64, k: Wavenumber, dir: [f64; 3]) -> Result<Dyadic> {
    if !(r > 0.0) {
        return domain(format!("separation must be positive, got {r}"));
    }
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if !(norm > 0.0) {
        return domain("direction must be non-zero");
    }
    let u = [dir[0] / norm, dir[1] / norm, dir[2] / norm];
    let (a, b) = g0_realspace_amplitudes(r, k.get());
    Ok(dyadic_from_amplitudes(a, b, u))
}

pub(crate) fn dyadic_from_amplitudes(a: C64, b: C64, u: [f64; 3]) -> Dyadic {
    let mut g = dyadic_zero();
    let d = b - a;
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = d * (u[i] * u[j]);
        }
        g[i][i] += a;
    }
    g
}

/// Free transverse self-energy `φ⊥⁽⁰⁾ = −ik/4π` (off-resonant regularization).
pub fn phi0_perp(k: C64) -> C64 {
    -I * k / (4.0 * PI)
}

/// Two-level-atom regularization: `Re{2φ⊥⁽⁰⁾} = −3/(k₀²α₀)`.
pub fn phi0_perp_lorentzian(k: C64, k0: f64, alpha0: f64) -> Result<C64> {
    if alpha0 == 0.0 {
        return domain("alpha0 must be non-zero");
    }
    Ok(c(-3.0 / (2.0 * k0 * k0 * alpha0)) + phi0_perp(k))
}

/// Longitudinal self-energy of a sphere of radius `a`, `1/((4π/3)a³k²)`.
pub fn phi0_par(a: f64, k: Wavenumber) -> Result<C64> {
    if !(a > 0.0) {
        return domain(format!("radius must be positive, got {a}"));
    }
    let k = k.get();
    if k * a > 0.3 {
        log::warn!("phi0_par: ka = {} is not small", k * a);
    }
    Ok(c(1.0 / (4.0 / 3.0 * PI * a.powi(3) * k * k)))
}

/// Provenance of a radial integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialRecord {
    pub q_max: f64,
    pub eta: f64,
    pub richardson: bool,
    pub error: f64,
    pub evaluations: usize,
}

/// `∫d³q/(2π)³ f(|q|) = (1/2π²)∫₀^{q_max} q² f(q) dq`.
///
/// `f(q, kc)` receives the shifted spectral point `kc = k(1 + iη)`. `poles` are
/// real positions of near-axis poles; their neighborhoods are graded.
pub fn radial_integral<F>(f: F, spec: &QuadratureSpec, k: Wavenumber, poles: &[f64]) -> Result<(C64, RadialRecord)>
where
    F: Fn(f64, C64) -> C64,
{
    spec.validate(k)?;
    let breaks = graded_breakpoints(spec.q_max, k.get(), poles);
    let run = |eta: f64| -> Result<quadrature::Integral> {
        let kc = k.retarded(eta);
        let g = |q: f64| f(q, kc) * (q * q);
        if spec.q_max.is_infinite() {
            check_decay(&g, breaks[breaks.len() - 2])?;
        }
        quadrature::integrate(&g, &breaks, spec.tolerance())
    };
    let norm = 1.0 / (2.0 * PI * PI);
    let base = run(spec.eta)?;
    let (value, error, evals) = if spec.richardson && spec.eta > 0.0 {
        let doubled = run(2.0 * spec.eta)?;
        (
            base.value * 2.0 - doubled.value,
            2.0 * base.error + doubled.error,
            base.evaluations + doubled.evaluations,
        )
    } else {
        (base.value, base.error, base.evaluations)
    };
    Ok((
        value * norm,
        RadialRecord {
            q_max: spec.q_max,
            eta: spec.eta,
            richardson: spec.richardson && spec.eta > 0.0,
            error: error * norm,
            evaluations: evals,
        },
    ))
}

/// [`radial_integral`] at a spectral point `kc` with `Im kc > 0`; poles are off
/// the real axis so no shift or extrapolation is applied.
pub fn radial_integral_at<F>(f: F, spec: &QuadratureSpec, kc: C64, poles: &[f64]) -> Result<(C64, RadialRecord)>
where
    F: Fn(f64, C64) -> C64,
{
    if !(kc.im >= 0.0) || !(kc.re >= 0.0) {
        return domain(format!("spectral point {kc} lies outside the first quadrant"));
    }
    let k = Wavenumber::new(kc.norm())?;
    spec.validate(k)?;
    let breaks = graded_breakpoints(spec.q_max, k.get(), poles);
    let g = |q: f64| f(q, kc) * (q * q);
    if spec.q_max.is_infinite() {
        check_decay(&g, breaks[breaks.len() - 2])?;
    }
    let r = quadrature::integrate(&g, &breaks, spec.tolerance())?;
    let norm = 1.0 / (2.0 * PI * PI);
    Ok((
        r.value * norm,
        RadialRecord {
            q_max: spec.q_max,
            eta: 0.0,
            richardson: false,
            error: r.error * norm,
            evaluations: r.evaluations,
        },
    ))
}

/// Breakpoints for `[0, q_max]`: each pole gets geometric grading on both sides.
pub(crate) fn graded_breakpoints(q_max: f64, k: f64, poles: &[f64]) -> Vec<f64> {
    let mut pts = Vec::new();
    let mut far = k;
    for &p in poles {
        if !(p > 0.0) || !p.is_finite() {
            continue;
        }
        far = far.max(p);
        pts.push(p);
        let mut d = 0.5;
        while d > 1e-9 {
            pts.push(p * (1.0 - d));
            pts.push(p * (1.0 + d));
            d *= 0.1;
        }
    }
    if q_max.is_infinite() {
        let tail = 4.0 * far;
        pts.push(tail);
        let mut v = quadrature::partition(0.0, tail, pts);
        v.push(f64::INFINITY);
        v
    } else {
        quadrature::partition(0.0, q_max, pts)
    }
}

// Reject integrands whose q²f(q) tail falls off no faster than 1/q.
fn check_decay<G: Fn(f64) -> C64>(g: &G, scale: f64) -> Result<()> {
    let q1 = 1e3 * scale;
    let q2 = 1e5 * scale;
    let h1 = g(q1).norm() * q1;
    let h2 = g(q2).norm() * q2;
    if h2 > 1e-300 && h2 > 0.1 * h1 {
        return Err(Error::ModelRegularization(format!(
            "q³|f| = {h1:e} at q = {q1:e} and {h2:e} at q = {q2:e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k1() -> Wavenumber {
        Wavenumber::new(1.0).unwrap()
    }

    #[test]
    fn wavenumber_rejects_non_positive() {
        assert!(Wavenumber::new(0.0).is_err());
        assert!(Wavenumber::new(-1.0).is_err());
        assert!(Wavenumber::new(f64::NAN).is_err());
    }

    #[test]
    fn si_round_trip() {
        let k = Wavenumber::new(2.5).unwrap();
        let w = k.to_si_angular_frequency(1e-6);
        let back = Wavenumber::from_si_angular_frequency(w, 1e-6).unwrap();
        assert!((back.get() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn g0_values() {
        assert_eq!(g0_perp(0.0, c(1.0)).unwrap(), c(1.0));
        assert_eq!(g0_par(c(2.0)), c(0.25));
        assert!(g0_perp(1.0, c(1.0)).is_err());
        assert!(g0_perp(1.0, k1().retarded(1e-6)).is_ok());
    }

    #[test]
    fn passive_branch() {
        for eps in [c(4.0), c(-4.0), C64::new(-3.0, 1e-3), C64::new(2.0, 0.5), C64::new(-1.0, -0.0)] {
            let s = ComplexPermittivitySqrt::new(eps);
            assert!(s.sqrt_eps.im >= 0.0 && s.sqrt_eps.re >= 0.0, "{eps}");
            assert!((s.sqrt_eps * s.sqrt_eps - eps).norm() <= 1e-14 * eps.norm());
        }
        assert!(ComplexPermittivitySqrt::new(c(-4.0)).on_cut);
    }

    #[test]
    fn phi0_examples() {
        let p = phi0_perp(c(2.0 * PI));
        assert!((p - C64::new(0.0, -0.5)).norm() < 1e-15);
        let l = phi0_perp_lorentzian(c(1.0), 1.0, 3.0).unwrap();
        assert_eq!(l.re, -0.5);
        assert!(phi0_perp_lorentzian(c(1.0), 1.0, 0.0).is_err());
        let a = phi0_par(1.0, k1()).unwrap();
        assert!((a.re - 0.238_732_414_637_843).abs() < 1e-12);
        let a2 = phi0_par(2.0, k1()).unwrap();
        assert!((a2.re - a.re / 8.0).abs() < 1e-16);
        let k2 = phi0_par(1.0, Wavenumber::new(2.0).unwrap()).unwrap();
        assert!((k2.re - a.re / 4.0).abs() < 1e-16);
        assert!(phi0_par(0.0, k1()).is_err());
    }

    #[test]
    fn realspace_reciprocity_and_far_field() {
        let k = Wavenumber::new(1.3).unwrap();
        let d = [0.3, -0.4, 0.866];
        let g = g0_realspace(2.0, k, d).unwrap();
        let gm = g0_realspace(2.0, k, [-d[0], -d[1], -d[2]]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g[i][j], gm[j][i]);
            }
        }
        // far field: r̂·G·v shrinks like 1/(kr) relative to the transverse amplitude
        let r = 1e4;
        let (a, b) = g0_realspace_amplitudes(r, 1.0);
        assert!(b.norm() / a.norm() < 3.0 / r);
        let lead = -(I * r).exp() / (4.0 * PI * r);
        assert!((a - lead).norm() / lead.norm() < 2.0 / r);
    }

    #[test]
    fn realspace_static_limit() {
        // k → 0: k²G → ∇∇(−1/4πr) = (𝕀 − 3r̂r̂)/(4πr³)
        let k = 1e-5;
        let r = 0.7;
        let (a, b) = g0_realspace_amplitudes(r, k);
        let s = 1.0 / (4.0 * PI * r.powi(3));
        assert!(((a * k * k).re - s).abs() < 1e-8 * s);
        assert!(((b * k * k).re + 2.0 * s).abs() < 1e-8 * s);
    }

    #[test]
    fn radial_pole_prescription() {
        let spec = QuadratureSpec::default();
        for eps in [1.0, 4.0, 2.25] {
            let n: f64 = (eps as f64).sqrt();
            let (v, _) = radial_integral(|q, kc| C64::new(0.0, (eps * kc * kc - q * q).inv().im), &spec, k1(), &[n]).unwrap();
            let exact = -n / (4.0 * PI);
            assert!((v.im - exact).abs() < 1e-7 * exact.abs(), "eps {eps}: {} vs {exact}", v.im);
        }
    }

    #[test]
    fn radial_zero_and_linearity() {
        let spec = QuadratureSpec::default().with_q_max(20.0);
        let (z, _) = radial_integral(|_, _| c(0.0), &spec, k1(), &[]).unwrap();
        assert_eq!(z, c(0.0));
        let f = |q: f64, _kc: C64| c((-q).exp());
        let g = |q: f64, _kc: C64| c(1.0 / (1.0 + q * q));
        let (a, _) = radial_integral(f, &spec, k1(), &[]).unwrap();
        let (b, _) = radial_integral(g, &spec, k1(), &[]).unwrap();
        let (ab, _) = radial_integral(|q, kc| f(q, kc) * 2.0 - g(q, kc) * 3.0, &spec, k1(), &[]).unwrap();
        assert!((ab - (a * 2.0 - b * 3.0)).norm() < 1e-9 * ab.norm());
    }

    #[test]
    fn divergent_tail_is_rejected() {
        let spec = QuadratureSpec::default();
        let r = radial_integral(|_, _| c(1.0), &spec, k1(), &[]);
        assert!(matches!(r, Err(Error::ModelRegularization(_))));
    }

    #[test]
    fn spec_validation() {
        let bad = QuadratureSpec { rel_tol: 0.1, ..QuadratureSpec::default() };
        assert!(bad.validate(k1()).is_err());
        let low = QuadratureSpec::default().with_q_max(0.5);
        assert!(low.validate(k1()).is_err());
    }
}
