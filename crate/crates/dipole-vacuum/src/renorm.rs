//! Radiative renormalization of single-dipole polarizabilities.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::medium::{exclusion_matched_cutoff, MaxwellGarnettMedium, MgSusceptibility, Polarizability};
use crate::propagators::{phi_factors, PhiFactors};
use crate::spectral::{c, QuadratureSpec, Wavenumber, C64};

/// `α̃ = α₀ / (1 + (k²/3)α₀[2φ⊥⁽⁰⁾ + 2φ⊥^sc + φ∥^sc])` at the spectral point
/// of `phi`.
pub fn renormalize_alpha(alpha0: C64, phi: &PhiFactors) -> Result<C64> {
    let k = phi.k;
    let d = c(1.0) + k * k * alpha0 * phi.self_energy_sum() / 3.0;
    if d.norm() <= 1e-12 {
        return Err(Error::ResonanceSingularity(d.norm()));
    }
    Ok(alpha0 / d)
}

/// Power drawn from a driving field, split by the optical theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimulatedPower {
    /// `(k/2)|E₀|² Im α̃`
    pub total: f64,
    pub radiated: f64,
    pub absorbed: f64,
}

pub fn stimulated_power(alpha0: C64, phi: &PhiFactors, e0_mag2: f64) -> Result<StimulatedPower> {
    if !(e0_mag2 >= 0.0) {
        return domain("|E0|^2 must be non-negative");
    }
    if alpha0 == c(0.0) {
        return domain("bare polarizability must be non-zero");
    }
    if phi.k.im != 0.0 {
        return domain("stimulated power needs a real spectral point");
    }
    let k = phi.k.re;
    let a = renormalize_alpha(alpha0, phi)?;
    let a2 = a.norm_sqr() * e0_mag2;
    Ok(StimulatedPower {
        total: 0.5 * k * e0_mag2 * a.im,
        radiated: -k.powi(3) / 6.0 * a2 * phi.self_energy_sum().im,
        absorbed: 0.5 * k * a2 * alpha0.im / alpha0.norm_sqr(),
    })
}

/// Renormalized resonance parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormalizedPolarizability {
    /// α̃ at `k0`.
    pub alpha_tilde: C64,
    pub k_res: f64,
    pub gamma: f64,
    pub alpha0_tilde: C64,
    pub k0: f64,
    pub gamma0: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Every root found in the bracket, ascending; `k_res` is the first.
    pub roots: Vec<f64>,
}

impl RenormalizedPolarizability {
    pub fn lorentzian(&self) -> Result<crate::medium::LorentzianPolarizability> {
        crate::medium::LorentzianPolarizability::new(self.alpha0_tilde, self.k_res, self.gamma)
    }
}

/// Free-space width `Γ₀ = α₀k₀⁴/6π`.
pub fn free_space_width(alpha0: f64, k0: f64) -> f64 {
    let k2 = k0 * k0;
    alpha0 * (k2 * k2) / (6.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KresOptions {
    /// Bracket as multiples of `k0`.
    pub bracket: (f64, f64),
    pub scan_points: usize,
    pub tol: f64,
}

impl Default for KresOptions {
    fn default() -> Self {
        Self {
            bracket: (0.5, 2.0),
            scan_points: 64,
            tol: 1e-10,
        }
    }
}

/// Resonance of a bare Lorentzian dipole dressed by its environment:
/// `(k/k₀)² − 1 = (α₀k²/3) Re{2φ⊥^sc + φ∥^sc}`, then
/// `Γ = −(α̃₀k³/3) Im{2φ⊥⁽⁰⁾ + 2φ⊥^sc + φ∥^sc}` and `α̃₀ = α₀(k₀/k_res)²`.
pub fn solve_kres<F>(alpha0: f64, k0: f64, phi_of_k: F, opts: &KresOptions) -> Result<RenormalizedPolarizability>
where
    F: Fn(Wavenumber) -> Result<PhiFactors>,
{
    if !(alpha0 > 0.0) || !(k0 > 0.0) {
        return domain("alpha0 and k0 must be positive");
    }
    let eval = |k: f64| -> Result<(f64, PhiFactors)> {
        let phi = phi_of_k(Wavenumber::new(k)?)?;
        let r = (k / k0).powi(2) - 1.0 - alpha0 * k * k / 3.0 * phi.scattering_sum().re;
        Ok((r, phi))
    };
    let (r0, phi0) = eval(k0)?;
    let mut iterations = 1;
    let (roots, k_res, phi_res, residual) = if r0 == 0.0 {
        (vec![k0], k0, phi0, 0.0)
    } else {
        let (lo, hi) = (opts.bracket.0 * k0, opts.bracket.1 * k0);
        let n = opts.scan_points.max(2);
        let mut grid = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let k = lo * (hi / lo).powf(i as f64 / n as f64);
            grid.push((k, eval(k)?.0));
        }
        iterations += grid.len();
        let mut roots = Vec::new();
        for w in grid.windows(2) {
            let ((a, fa), (b, fb)) = (w[0], w[1]);
            if fa == 0.0 {
                roots.push(a);
            } else if fa * fb < 0.0 {
                let (k, its) = polish(&eval, a, fa, b, fb, opts.tol * k0)?;
                iterations += its;
                roots.push(k);
            }
        }
        if grid[n].1 == 0.0 {
            roots.push(grid[n].0);
        }
        if roots.is_empty() {
            return Err(Error::NoResonance { lo, hi });
        }
        roots.sort_by(f64::total_cmp);
        let k_res = roots[0];
        let (r, phi) = eval(k_res)?;
        (roots, k_res, phi, r.abs())
    };
    let alpha0_tilde = alpha0 * (k0 / k_res).powi(2);
    let gamma = if k_res == k0 && phi_res.scattering_sum() == c(0.0) {
        free_space_width(alpha0, k0)
    } else {
        -alpha0_tilde / 3.0 * k_res.powi(3) * phi_res.self_energy_sum().im
    };
    let lor = crate::medium::LorentzianPolarizability::new(c(alpha0_tilde), k_res, gamma.max(0.0))?;
    Ok(RenormalizedPolarizability {
        alpha_tilde: lor.at(c(k0)),
        k_res,
        gamma,
        alpha0_tilde: c(alpha0_tilde),
        k0,
        gamma0: free_space_width(alpha0, k0),
        iterations,
        residual,
        roots,
    })
}

// Bisection to a tight bracket, then secant/Newton steps kept inside it.
fn polish<E>(eval: &E, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, tol: f64) -> Result<(f64, usize)>
where
    E: Fn(f64) -> Result<(f64, PhiFactors)>,
{
    let mut its = 0;
    while b - a > 1e-4 * b {
        let m = 0.5 * (a + b);
        let fm = eval(m)?.0;
        its += 1;
        if fm == 0.0 {
            return Ok((m, its));
        }
        if fa * fm < 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    let mut k = a - fa * (b - a) / (fb - fa);
    for _ in 0..100 {
        let fk = eval(k)?.0;
        its += 1;
        if fk == 0.0 {
            return Ok((k, its));
        }
        if fa * fk < 0.0 {
            b = k;
            fb = fk;
        } else {
            a = k;
            fa = fk;
        }
        let next = a - fa * (b - a) / (fb - fa);
        let next = if next > a && next < b { next } else { 0.5 * (a + b) };
        if (next - k).abs() <= tol || b - a <= tol {
            let fnext = eval(next)?.0;
            its += 1;
            if fnext.abs() <= 1e-10 {
                return Ok((next, its));
            }
        }
        k = next;
    }
    Err(Error::InternalConsistency(format!("resonance polish stalled in [{a}, {b}]")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfConsistencyOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iterations: usize,
    pub spec: QuadratureSpec,
    /// Window radius; the exclusion-matched radius when `None`.
    pub window: Option<f64>,
}

impl Default for SelfConsistencyOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-10,
            max_iterations: 200,
            spec: QuadratureSpec::default(),
            window: None,
        }
    }
}

/// Converged medium; `medium` is `None` for an empty medium.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfConsistentMedium {
    pub medium: Option<MaxwellGarnettMedium>,
    pub polarizability: RenormalizedPolarizability,
    pub history: Vec<C64>,
}

/// Free-space renormalized polarizability at `k`.
pub fn free_space_alpha(alpha0: C64, k: Wavenumber) -> Result<C64> {
    let kk = c(k.get());
    let d = c(1.0) + kk * kk * alpha0 * crate::spectral::phi0_perp(kk) * (2.0 / 3.0);
    if d.norm() <= 1e-12 {
        return Err(Error::ResonanceSingularity(d.norm()));
    }
    Ok(alpha0 / d)
}

/// Damped fixed point of `α̃ = renormalize(α₀, φ[windowed MG(ρ, α̃, ξ)])` at `k`.
pub fn self_consistent_medium(
    rho: f64,
    alpha0: C64,
    k: Wavenumber,
    xi: f64,
    opts: &SelfConsistencyOptions,
) -> Result<SelfConsistentMedium> {
    let start = free_space_alpha(alpha0, k)?;
    self_consistent_medium_from(rho, alpha0, k, xi, start, opts)
}

/// As [`self_consistent_medium`], iterating from `initial`.
pub fn self_consistent_medium_from(
    rho: f64,
    alpha0: C64,
    k: Wavenumber,
    xi: f64,
    initial: C64,
    opts: &SelfConsistencyOptions,
) -> Result<SelfConsistentMedium> {
    if !(rho >= 0.0) || !(xi > 0.0) {
        return domain("rho must be non-negative and xi positive");
    }
    if (alpha0 * rho).norm() >= 1.0 {
        return domain(format!("|rho*alpha0| = {} is not dilute", (alpha0 * rho).norm()));
    }
    let kk = k.get();
    let finish = |a: C64, medium, iterations, residual, history| {
        let phi_sum = (c(1.0) / a - c(1.0) / alpha0) * 3.0 / (kk * kk);
        SelfConsistentMedium {
            medium,
            polarizability: RenormalizedPolarizability {
                alpha_tilde: a,
                k_res: kk,
                gamma: -alpha0.re / 3.0 * kk.powi(3) * phi_sum.im,
                alpha0_tilde: alpha0,
                k0: kk,
                gamma0: free_space_width(alpha0.re, kk),
                iterations,
                residual,
                roots: vec![kk],
            },
            history,
        }
    };
    if rho == 0.0 {
        let a = free_space_alpha(alpha0, k)?;
        return Ok(finish(a, None, 0, 0.0, vec![a]));
    }
    let q_c = opts.window.unwrap_or_else(|| exclusion_matched_cutoff(xi));
    let mut a = initial;
    let mut history = vec![a];
    let mut last_step = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let medium = MaxwellGarnettMedium::new(rho, a, xi)?;
        let model = MgSusceptibility {
            rho,
            alpha: Polarizability::Fixed(a),
            xi,
            window: Some(q_c),
        };
        let phi = phi_factors(&model, k, &opts.spec)?;
        let target = renormalize_alpha(alpha0, &phi)?;
        let next = a * (1.0 - opts.damping) + target * opts.damping;
        last_step = (next - a).norm();
        history.push(next);
        if !next.is_finite() {
            break;
        }
        if last_step < opts.tol * a.norm() {
            let medium = MaxwellGarnettMedium::new(rho, next, xi).unwrap_or(medium);
            return Ok(finish(next, Some(medium), it, last_step, history));
        }
        a = next;
    }
    Err(Error::FixedPointFailure {
        iterations: opts.max_iterations,
        last_step,
        history: history.iter().map(|z| (z.re, z.im)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::Vacuum;
    use crate::propagators::{PhiPath, PhiProvenance};
    use crate::spectral::phi0_perp;

    fn phis(k: f64, sc_perp: C64, sc_par: C64) -> PhiFactors {
        PhiFactors {
            phi0_perp: phi0_perp(c(k)),
            phi_sc_perp: sc_perp,
            phi_sc_par: sc_par,
            k: c(k),
            provenance: PhiProvenance {
                path: PhiPath::ClosedForm("test"),
                cutoff_sensitive: false,
            },
        }
    }

    #[test]
    fn no_self_energy_leaves_alpha() {
        let mut p = phis(1.0, c(0.0), c(0.0));
        p.phi0_perp = c(0.0);
        assert_eq!(renormalize_alpha(C64::new(0.3, 0.1), &p).unwrap(), C64::new(0.3, 0.1));
    }

    #[test]
    fn free_space_optical_theorem() {
        for (k, a0) in [(1.0, 0.3), (2.5, 1e-3), (0.4, 10.0)] {
            let p = phis(k, c(0.0), c(0.0));
            let a = renormalize_alpha(c(a0), &p).unwrap();
            let rhs = k * k * k / (6.0 * PI) * a.norm_sqr();
            assert!((a.im - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn halving_alpha() {
        let k: f64 = 1.7;
        let a0 = C64::new(0.0, 6.0 * PI / k.powi(3));
        let a = renormalize_alpha(a0, &phis(k, c(0.0), c(0.0))).unwrap();
        assert!((a - a0 / 2.0).norm() < 1e-14 * a0.norm());
    }

    #[test]
    fn resonance_singularity() {
        let p = phis(1.0, c(-1.5), c(0.0));
        let a0 = c(1.0) / (p.self_energy_sum() * (-1.0 / 3.0));
        assert!(matches!(renormalize_alpha(a0, &p), Err(Error::ResonanceSingularity(_))));
    }

    #[test]
    fn power_routes_agree() {
        let p = phis(1.3, C64::new(0.02, -0.01), C64::new(-0.03, -0.004));
        for a0 in [c(0.4), C64::new(0.4, 0.2), C64::new(-1.0, 3.0)] {
            let w = stimulated_power(a0, &p, 2.0).unwrap();
            assert!((w.total - (w.radiated + w.absorbed)).abs() <= 1e-12 * w.total.abs());
        }
        let w = stimulated_power(c(0.4), &p, 2.0).unwrap();
        assert_eq!(w.absorbed, 0.0);
        let z = stimulated_power(C64::new(0.4, 0.1), &p, 0.0).unwrap();
        assert_eq!((z.total, z.radiated, z.absorbed), (0.0, 0.0, 0.0));
    }

    #[test]
    fn free_space_power() {
        let k: f64 = 0.8;
        let p = phis(k, c(0.0), c(0.0));
        let w = stimulated_power(c(0.7), &p, 1.5).unwrap();
        let a = renormalize_alpha(c(0.7), &p).unwrap();
        let expect = 0.5 * k * 1.5 * a.norm_sqr() * k.powi(3) / (6.0 * PI);
        assert!((w.total - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn free_space_resonance() {
        let (a0, k0) = (0.05, 1.3);
        let r = solve_kres(a0, k0, |k| Ok(phis(k.get(), c(0.0), c(0.0))), &KresOptions::default()).unwrap();
        assert_eq!(r.k_res, k0);
        assert_eq!(r.alpha0_tilde, c(a0));
        assert!((r.gamma - r.gamma0).abs() <= 1e-15 * r.gamma0);
        assert!((r.gamma0 - a0 * k0.powi(4) / (6.0 * PI)).abs() < 1e-18);
    }

    #[test]
    fn shifted_resonance_first_order() {
        let (a0, k0, s) = (0.02, 1.0, 0.05);
        let r = solve_kres(a0, k0, |k| Ok(phis(k.get(), c(s / 2.0), c(0.0))), &KresOptions::default()).unwrap();
        let series = k0 * (1.0 + a0 * k0 * k0 * s / 6.0);
        assert!((r.k_res - series).abs() < 1e-6, "{} {}", r.k_res, series);
        // exact root of (k/k0)² − 1 = a0k²s/3
        let exact = k0 / (1.0 - a0 * k0 * k0 * s / 3.0).sqrt();
        assert!((r.k_res - exact).abs() < 1e-10);
        assert!(r.residual < 1e-10);
        let r2 = solve_kres(a0, k0, |k| Ok(phis(k.get(), C64::new(s / 2.0, -0.01), c(0.0))), &KresOptions::default()).unwrap();
        let r4 = solve_kres(a0, k0, |k| Ok(phis(k.get(), C64::new(s / 2.0, -0.02), c(0.0))), &KresOptions::default()).unwrap();
        let base = |r: &RenormalizedPolarizability| r.gamma + r.alpha0_tilde.re / 3.0 * r.k_res.powi(3) * (2.0 * phi0_perp(c(r.k_res)).im);
        assert!((base(&r4) - 2.0 * base(&r2)).abs() < 1e-14);
    }

    #[test]
    fn unit_rescaling_invariance() {
        let (a0, k0) = (0.02, 1.0);
        let phi = |s: f64| move |k: Wavenumber| Ok(phis(k.get(), c(0.3 * k.get() / s), c(-0.1 * k.get() / s)));
        let r1 = solve_kres(a0, k0, phi(1.0), &KresOptions::default()).unwrap();
        // lengths scaled by λ: k → k/λ, α₀ → λ³α₀, φ → φ/λ
        let lam: f64 = 2.0;
        let r2 = solve_kres(a0 * lam.powi(3), k0 / lam, |k| {
            let p = phi(1.0)(Wavenumber::new(k.get() * lam)?)?;
            Ok(PhiFactors {
                phi0_perp: p.phi0_perp / lam,
                phi_sc_perp: p.phi_sc_perp / lam,
                phi_sc_par: p.phi_sc_par / lam,
                k: p.k / lam,
                ..p
            })
        }, &KresOptions::default())
        .unwrap();
        assert!((r1.k_res / k0 - r2.k_res / (k0 / lam)).abs() < 1e-10);
        assert!((r1.gamma / r1.gamma0 - r2.gamma / r2.gamma0).abs() < 1e-10);
    }

    #[test]
    fn no_resonance_in_bracket() {
        let r = solve_kres(0.1, 1.0, |k| Ok(phis(k.get(), c(-100.0), c(0.0))), &KresOptions::default());
        assert!(matches!(r, Err(Error::NoResonance { .. })));
    }

    #[test]
    fn empty_medium_fixed_point() {
        let k = Wavenumber::new(1.0).unwrap();
        let r = self_consistent_medium(0.0, c(0.01), k, 0.2, &SelfConsistencyOptions::default()).unwrap();
        assert!(r.medium.is_none());
        assert_eq!(r.polarizability.alpha_tilde, free_space_alpha(c(0.01), k).unwrap());
        let p = crate::propagators::phi_factors(&Vacuum, k, &QuadratureSpec::default()).unwrap();
        assert!((renormalize_alpha(c(0.01), &p).unwrap() - r.polarizability.alpha_tilde).norm() < 1e-16);
    }

    #[test]
    fn dilute_fixed_point_and_idempotence() {
        let k = Wavenumber::new(1.0).unwrap();
        let opts = SelfConsistencyOptions::default();
        let (rho, a0, xi) = (1.0, c(0.01), 0.2);
        let r = self_consistent_medium(rho, a0, k, xi, &opts).unwrap();
        let free = free_space_alpha(a0, k).unwrap();
        let rel = (r.polarizability.alpha_tilde - free).norm() / free.norm();
        assert!(rel > 0.0 && rel < 10.0 * rho * a0.norm(), "{rel}");
        let again = self_consistent_medium_from(rho, a0, k, xi, r.polarizability.alpha_tilde, &opts).unwrap();
        assert_eq!(again.polarizability.iterations, 1);
    }

    #[test]
    fn dense_input_rejected() {
        let k = Wavenumber::new(1.0).unwrap();
        assert!(self_consistent_medium(100.0, c(0.05), k, 0.2, &SelfConsistencyOptions::default()).is_err());
    }
}
