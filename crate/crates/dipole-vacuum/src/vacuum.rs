//! Vacuum-energy integrals of dipolar media and the Lamb shift of an
//! embedded dipole.
//!
//! Energies are `F = −Im∫₀^{ω_max} dω/2π ∫d³q/(2π)³ (…)` in units of
//! `ħc/L₀⁴` per unit volume (with ħ = c = 1).

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::medium::{LorentzianDielectric, LorentzianPolarizability, QDependence, SusceptibilityModel};
use crate::propagators::PhiFactors;
use crate::quadrature::{partition, tanh_sinh_partitioned};
use crate::spectral::{c, radial_integral, ComplexPermittivitySqrt, QuadratureSpec, Wavenumber, C64};

/// Result of an ω-integral together with its cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaIntegral {
    pub value: f64,
    pub error: f64,
    pub omega_max: f64,
}

/// `(1/6π²)∫₀^{ω_max} ω³[1 − n³(ω)] dω`, `n = Re√ε`.
///
/// Fails with [`Error::CutoffNotDecayed`] (carrying the truncated value) when
/// the integrand has not died out at `omega_max`.
pub fn schwinger_bulk<E>(eps: &E, omega_max: f64, hints: &[f64], rel_tol: f64) -> Result<OmegaIntegral>
where
    E: Fn(f64) -> C64 + ?Sized,
{
    if !(omega_max > 0.0) {
        return domain("omega_max must be positive");
    }
    let one_minus = |w: f64| {
        let e = eps(w);
        let root = ComplexPermittivitySqrt::new(e);
        let n = root.n();
        // n − 1 without cancellation on the principal branch
        let dn = if root.flipped { n - 1.0 } else { ((e - 1.0) / (root.sqrt_eps + 1.0)).re };
        -dn * (1.0 + n + n * n)
    };
    let f = |w: f64| w.powi(3) * one_minus(w) / (6.0 * PI * PI);
    let pts = partition(0.0, omega_max, hints.iter().copied());
    let (value, error) = tanh_sinh_partitioned(&f, &pts, rel_tol)?;
    let residual = one_minus(omega_max).abs();
    let tail = omega_max.powi(4) * residual / (6.0 * PI * PI);
    if residual >= 1e-8 || tail > 1e-8 * value.abs().max(1e-300) {
        return Err(Error::CutoffNotDecayed {
            omega_max,
            residual,
            partial: value,
        });
    }
    Ok(OmegaIntegral {
        value,
        error,
        omega_max,
    })
}

/// Schwinger-bulk density of states `ω²n³/3π²`.
pub fn n_sch_bulk(eps: C64, k: Wavenumber) -> f64 {
    k.get().powi(2) * ComplexPermittivitySqrt::new(eps).n().powi(3) / (3.0 * PI * PI)
}

/// A local-field energy: raw signed integral, its magnitude, and the
/// leading-order closed estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LffEnergy {
    pub numeric: f64,
    pub magnitude: f64,
    pub estimate: f64,
    pub error: f64,
    pub omega_max: f64,
}

impl LffEnergy {
    pub fn relative_deviation(&self) -> f64 {
        (self.magnitude - self.estimate).abs() / self.estimate.abs()
    }
}

/// Breakpoints `c ± sΓ` graded toward each center.
pub fn resonance_points(centers: &[f64], gamma: f64) -> Vec<f64> {
    let mut v = Vec::new();
    for &c0 in centers {
        v.push(c0);
        for s in [5.0, 2.0, 1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01] {
            v.push(c0 - s * gamma);
            v.push(c0 + s * gamma);
        }
    }
    v
}

fn lorentzian_centers(d: &LorentzianDielectric) -> [f64; 3] {
    let w = d.omega_res;
    [w, w * (1.0 + d.f / 3.0).sqrt(), w * (1.0 + d.f).sqrt()]
}

// 3 ln(1 + u/3) − ln(1 + u) and 3 ln(1 + u/3), without cancellation for small u.
fn log_ratio(u: C64) -> C64 {
    if u.norm() < 0.1 {
        let mut sum = c(0.0);
        let mut p = u;
        for n in 2..60 {
            p *= u;
            let coef = 3.0 * 3f64.powi(-n) - 1.0;
            let term = p * (coef / n as f64);
            sum += if n % 2 == 0 { -term } else { term };
        }
        sum
    } else {
        (c(1.0) + u / 3.0).ln() * 3.0 - (c(1.0) + u).ln()
    }
}

fn log_lff3(u: C64) -> C64 {
    let z = u / 3.0;
    if z.norm() < 1e-3 {
        let mut sum = c(0.0);
        let mut p = c(1.0);
        for n in 1..20 {
            p *= z;
            let term = p / n as f64;
            sum += if n % 2 == 0 { -term } else { term };
        }
        sum * 3.0
    } else {
        (c(1.0) + z).ln() * 3.0
    }
}

fn lff_energy<F>(d: &LorentzianDielectric, rho: f64, omega_max: f64, log_term: F, estimate: f64) -> Result<LffEnergy>
where
    F: Fn(C64) -> C64,
{
    if !(rho >= 0.0) {
        return domain("rho must be non-negative");
    }
    if d.f > 0.1 {
        log::warn!("oscillator strength {} is not small", d.f);
    }
    if !(d.gamma < d.omega_res) {
        return domain("line width must be below the resonance frequency");
    }
    if rho == 0.0 {
        return Ok(LffEnergy {
            numeric: 0.0,
            magnitude: 0.0,
            estimate: 0.0,
            error: 0.0,
            omega_max,
        });
    }
    let w2 = d.omega_res * d.omega_res;
    let f = |w: f64| {
        let u = d.f * w2 / (c(w2) - c(w * w) - C64::new(0.0, w * d.gamma));
        log_term(u).im
    };
    let pts = partition(0.0, omega_max, resonance_points(&lorentzian_centers(d), d.gamma));
    let (v, e) = tanh_sinh_partitioned(&f, &pts, 1e-11)?;
    let numeric = -rho * v / (2.0 * PI);
    Ok(LffEnergy {
        numeric,
        magnitude: numeric.abs(),
        estimate,
        error: rho * e / (2.0 * PI),
        omega_max,
    })
}

/// Maxwell-Garnett local-field correction `−ρ∫dω/2π Im ln[L³/ε]`, with
/// estimate `(ρf²/12)(ω_r/2 + Γ/2π)`.
pub fn delta_f_mg(d: &LorentzianDielectric, rho: f64) -> Result<LffEnergy> {
    let est = rho * d.f * d.f / 12.0 * (0.5 * d.omega_res + d.gamma / (2.0 * PI));
    lff_energy(d, rho, 100.0 * d.omega_res, log_ratio, est)
}

/// Isolated local-field contribution `−ρ∫dω/2π Im ln L³`, with estimate
/// `(ρf/2)(ω_r/2 + Γ/2π)`.
pub fn f_lff_mg(d: &LorentzianDielectric, rho: f64) -> Result<LffEnergy> {
    let est = rho * d.f / 2.0 * (0.5 * d.omega_res + d.gamma / (2.0 * PI));
    lff_energy(d, rho, 100.0 * d.omega_res, log_lff3, est)
}

/// Continuous argument of `z(ω)` along `[0, ω_max]`, built on a grid refined
/// until adjacent samples differ by less than π/8.
#[derive(Debug, Clone)]
pub struct PhaseTrack {
    grid: Vec<(f64, f64)>,
    pub max_jump: f64,
}

impl PhaseTrack {
    pub fn build<Z: Fn(f64) -> C64>(z: &Z, points: &[f64]) -> Result<Self> {
        let wrap = |d: f64| d - 2.0 * PI * (d / (2.0 * PI)).round();
        let mut grid = Vec::with_capacity(points.len() * 2);
        let mut max_jump: f64 = 0.0;
        let mut prev_w = points[0];
        let mut prev = z(prev_w).arg();
        grid.push((prev_w, prev));
        for &w in &points[1..] {
            let mut stack = vec![w];
            while let Some(target) = stack.pop() {
                let a = z(target).arg();
                let jump = wrap(a - prev).abs();
                if jump > PI / 8.0 && target - prev_w > 1e-13 * target.max(1e-300) {
                    stack.push(target);
                    stack.push(0.5 * (prev_w + target));
                    continue;
                }
                if jump > PI / 8.0 {
                    return Err(Error::GridRefinement { omega: target, jump });
                }
                max_jump = max_jump.max(jump);
                prev = prev + wrap(a - prev);
                prev_w = target;
                grid.push((prev_w, prev));
            }
        }
        Ok(Self { grid, max_jump })
    }

    /// Unwrapped phase at `w`, from the principal value `principal`.
    pub fn unwrap(&self, w: f64, principal: f64) -> f64 {
        let i = self.grid.partition_point(|(x, _)| *x <= w);
        let (_, reference) = self.grid[i.saturating_sub(1)];
        principal + 2.0 * PI * ((reference - principal) / (2.0 * PI)).round()
    }
}

/// Per-term vacuum energies of a dipolar medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumDecomposition {
    /// `−ρ∫dω/2π 3 Im ln(α′/α̃)`
    pub alpha_term: f64,
    /// `−ρ∫dω/2π Im ln(χ⊥²χ∥G∥)`
    pub lff_term: f64,
    /// `−∫dω/2π∫d³q/(2π)³ Im ln(G⊥²/G⊥⁰²)`
    pub bulk_term: f64,
    pub total: f64,
    pub rho: f64,
    pub omega_max: f64,
    pub q_max: f64,
    pub max_phase_jump: f64,
}

/// Three-term vacuum energy. Momentum integrals of the q-independent
/// logarithms are saturated to the density; the transverse Dyson term is
/// integrated radially up to the finite `spec.q_max`.
pub fn vacuum_energy_decomposition<A>(
    model: &dyn SusceptibilityModel,
    p: &LorentzianPolarizability,
    alpha_prime: A,
    omega_max: f64,
    spec: &QuadratureSpec,
) -> Result<VacuumDecomposition>
where
    A: Fn(f64) -> C64,
{
    if !spec.q_max.is_finite() {
        return domain("vacuum-energy decomposition needs a finite q_max");
    }
    if !(omega_max > 0.0) {
        return domain("omega_max must be positive");
    }
    let wr = p.k_res;
    let rho = {
        let r = model.rho_alpha(c(wr)) / p.at(c(wr));
        for w in [0.3 * wr, 2.0 * wr] {
            let r2 = model.rho_alpha(c(w)) / p.at(c(w));
            if (r2 - r).norm() > 1e-9 * r.norm() {
                return Err(Error::ComparisonInvalid("model and polarizability disagree on the density".into()));
            }
        }
        r.re
    };
    let n_at = |w: f64| ComplexPermittivitySqrt::new(c(1.0) + model.chi_perp(0.0, c(w))).n();
    let hints = resonance_points(&[wr], p.gamma.max(1e-6 * wr));
    let pts = partition(0.0, omega_max, hints.iter().copied());
    let mut grid = pts.clone();
    let n_uniform = 2000;
    grid.extend((1..n_uniform).map(|i| omega_max * i as f64 / n_uniform as f64));
    let grid = partition(0.0, omega_max, grid);
    let n_max = grid.iter().map(|&w| n_at(w)).fold(1.0, f64::max);
    if spec.q_max <= 1.5 * n_max * omega_max {
        return domain(format!(
            "q_max = {} must exceed 1.5 n_max omega_max = {}",
            spec.q_max,
            1.5 * n_max * omega_max
        ));
    }
    if rho == 0.0 {
        return Ok(VacuumDecomposition {
            alpha_term: 0.0,
            lff_term: 0.0,
            bulk_term: 0.0,
            total: 0.0,
            rho,
            omega_max,
            q_max: spec.q_max,
            max_phase_jump: 0.0,
        });
    }

    let ap = |w: f64| alpha_prime(w);
    let at = |w: f64| p.at(c(w));
    let cp = |w: f64| model.chi_perp(0.0, c(w));
    let cl = |w: f64| model.chi_par(0.0, c(w));
    let el = |w: f64| c(1.0) + model.chi_par(0.0, c(w));
    let tracks = [
        PhaseTrack::build(&ap, &grid)?,
        PhaseTrack::build(&at, &grid)?,
        PhaseTrack::build(&cp, &grid)?,
        PhaseTrack::build(&cl, &grid)?,
        PhaseTrack::build(&el, &grid)?,
    ];
    let max_jump = tracks.iter().map(|t| t.max_jump).fold(0.0, f64::max);
    let phase = |i: usize, z: C64, w: f64| tracks[i].unwrap(w, z.arg());

    let alpha_f = |w: f64| 3.0 * (phase(0, ap(w), w) - phase(1, at(w), w));
    let lff_f = |w: f64| 2.0 * phase(2, cp(w), w) + phase(3, cl(w), w) - phase(4, el(w), w);
    let rel = spec.rel_tol.max(1e-10);
    let (a_int, _) = tanh_sinh_partitioned(&alpha_f, &pts, rel)?;
    let (l_int, _) = tanh_sinh_partitioned(&lff_f, &pts, rel)?;

    let bulk_spec = QuadratureSpec {
        rel_tol: 1e-9_f64.max(spec.rel_tol),
        ..*spec
    };
    let q_max = spec.q_max;
    let bulk_f = |w: f64| -> f64 {
        if w < 1e-8 * wr {
            return 0.0;
        }
        let k2 = upper(c(w * w));
        let shells: Vec<(f64, f64, C64)> = match model.q_dependence() {
            QDependence::Constant => vec![(0.0, q_max, c(1.0) + model.chi_perp(0.0, c(w)))],
            QDependence::Window { q_c } if q_c < q_max => vec![
                (0.0, q_c, c(1.0) + model.chi_perp(0.0, c(w))),
                (q_c, q_max, c(1.0) + model.chi_perp(2.0 * q_c, c(w))),
            ],
            QDependence::Window { .. } => vec![(0.0, q_max, c(1.0) + model.chi_perp(0.0, c(w)))],
            QDependence::General => {
                let Ok(k) = Wavenumber::new(w) else { return f64::NAN };
                let poles = [w, n_at(w) * w];
                let g = |q: f64, kc: C64| {
                    let k2 = kc * kc;
                    let eps = c(1.0) + model.chi_perp(q, kc);
                    c(((k2 - q * q).ln() - (eps * k2 - q * q).ln()).im * 2.0)
                };
                return match radial_integral(g, &bulk_spec, k, &poles) {
                    Ok((v, _)) => v.re,
                    Err(_) => f64::NAN,
                };
            }
        };
        let free = log_shell(k2, 0.0, q_max);
        let medium: C64 = shells.iter().map(|&(lo, hi, eps)| log_shell(upper(eps * k2), lo, hi)).sum();
        2.0 * (free - medium).im / (2.0 * PI * PI)
    };
    let (b_int, _) = tanh_sinh_partitioned(&bulk_f, &pts, 1e-7)?;
    if !b_int.is_finite() {
        return Err(Error::QuadratureFailure {
            estimate: f64::NAN,
            error: f64::NAN,
            subdivisions: spec.max_subdivisions,
        });
    }
    let alpha_term = -rho * a_int / (2.0 * PI);
    let lff_term = -rho * l_int / (2.0 * PI);
    let bulk_term = -b_int / (2.0 * PI);
    Ok(VacuumDecomposition {
        alpha_term,
        lff_term,
        bulk_term,
        total: alpha_term + lff_term + bulk_term,
        rho,
        omega_max,
        q_max: spec.q_max,
        max_phase_jump: max_jump,
    })
}

// Passive values sit on the upper lip of the cut.
fn upper(z: C64) -> C64 {
    if z.im > 0.0 {
        z
    } else {
        C64::new(z.re, 0.0)
    }
}

// ∫_lo^hi q² ln(a − q²) dq for Im a ≥ 0, on the branch continuous in q.
fn log_shell(a: C64, lo: f64, hi: f64) -> C64 {
    let s = a.sqrt();
    let anti = |q: f64| {
        (a - q * q).ln() * (q.powi(3) / 3.0) - 2.0 * q.powi(3) / 9.0 - a * (2.0 * q / 3.0)
            + a * s / 3.0 * ((s + q).ln() - (s - q).ln())
    };
    anti(hi) - anti(lo)
}

/// Resonant Lamb shift `(|μ|²/3) Re{k²[2φ⊥^sc + φ∥^sc]}` at `k = k_res + iΓ`.
pub fn lamb_shift_res<P>(phi_fn: P, mu2: f64, k_res: f64, gamma: f64) -> Result<f64>
where
    P: Fn(C64) -> Result<PhiFactors>,
{
    if !(mu2 >= 0.0) || !(k_res > 0.0) || !(gamma >= 0.0) {
        return domain("need mu2 >= 0, k_res > 0 and gamma >= 0");
    }
    let k = C64::new(k_res, gamma);
    let phi = phi_fn(k).map_err(|e| match e {
        Error::QuadratureFailure { .. } | Error::ModelRegularization(_) => Error::AnalyticContinuation {
            re: k.re,
            im: k.im,
            reason: e.to_string(),
        },
        other => other,
    })?;
    Ok(mu2 / 3.0 * (k * k * phi.scattering_sum()).re)
}

/// Off-resonant Lamb shift
/// `−(1/4π)∫₀^{u_max} u² S(iu)[α̃(iu) + α̃(−iu)] du`, with `S` the scattering
/// self-energy sum supplied by `sum_fn` on the imaginary axis.
pub fn lamb_shift_off<S>(sum_fn: S, p: &LorentzianPolarizability, u_max: f64) -> Result<f64>
where
    S: Fn(f64) -> Result<C64>,
{
    if !(u_max > 0.0) {
        return domain("u_max must be positive");
    }
    let integrand = |u: f64| -> Result<f64> {
        let a = p.at(C64::new(0.0, u)) + p.at(C64::new(0.0, -u));
        Ok((sum_fn(u)? * a).re * u * u)
    };
    let failure = std::cell::Cell::new(None);
    let f = |u: f64| match integrand(u) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            0.0
        }
    };
    let n = 64;
    let pts: Vec<f64> = (0..=n).map(|i| u_max * (i as f64 / n as f64).powi(2)).collect();
    let peak = pts.iter().map(|&u| f(u).abs()).fold(0.0, f64::max);
    let (v, _) = tanh_sinh_partitioned(&f, &pts, 1e-9)?;
    if let Some(e) = failure.take() {
        return Err(Error::AnalyticContinuation {
            re: 0.0,
            im: u_max,
            reason: e.to_string(),
        });
    }
    let value = -v / (4.0 * PI);
    let end = f(u_max).abs();
    if peak > 0.0 && end > 1e-10 * peak {
        return Err(Error::CutoffNotDecayed {
            omega_max: u_max,
            residual: end / peak,
            partial: value,
        });
    }
    Ok(value)
}

/// Summary of the vacuum energies of a Lorentzian Maxwell-Garnett medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumEnergyReport {
    /// Truncated value when the bulk integrand has not decayed.
    pub f_sch_bulk: f64,
    pub f_sch_bulk_converged: bool,
    pub delta_f_mg: LffEnergy,
    pub f_lff_mg: LffEnergy,
    pub lamb_res: Option<f64>,
    pub lamb_off: Option<f64>,
    pub omega_max: f64,
}

pub fn vacuum_energy_report(d: &LorentzianDielectric, rho: f64, omega_max: f64) -> Result<VacuumEnergyReport> {
    let eps = |w: f64| d.eps(c(w));
    let hints = resonance_points(&lorentzian_centers(d), d.gamma);
    let (bulk, converged) = if rho == 0.0 {
        (0.0, true)
    } else {
        match schwinger_bulk(&eps, omega_max, &hints, 1e-10) {
            Ok(v) => (v.value, true),
            Err(Error::CutoffNotDecayed { partial, .. }) => (partial, false),
            Err(e) => return Err(e),
        }
    };
    Ok(VacuumEnergyReport {
        f_sch_bulk: bulk,
        f_sch_bulk_converged: converged,
        delta_f_mg: delta_f_mg(d, rho)?,
        f_lff_mg: f_lff_mg(d, rho)?,
        lamb_res: None,
        lamb_off: None,
        omega_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{EffectiveMedium, MgSusceptibility, Polarizability, Vacuum};
    use crate::propagators::phi_factors_at;

    #[test]
    fn bulk_vanishes_in_vacuum() {
        let r = schwinger_bulk(&|_w: f64| c(1.0), 10.0, &[], 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn bulk_decaying_medium_is_negative() {
        // lossless ε = 1 + f e^{−ω²}: closed form by term-wise expansion
        let f = 1e-3;
        let eps = |w: f64| c(1.0 + f * (-w * w).exp());
        let r = schwinger_bulk(&eps, 12.0, &[1.0, 2.0, 4.0], 1e-10).unwrap();
        assert!(r.value < 0.0);
        // 1 − (1+x)^{3/2} = −3x/2 − 3x²/8 + x³/16 …, ∫ω³e^{−mω²} = 1/(2m²)
        let series = -(1.5 * f * 0.5 + 0.375 * f * f * 0.5 / 4.0 - f.powi(3) / 16.0 * 0.5 / 9.0) / (6.0 * PI * PI);
        assert!((r.value - series).abs() < 1e-8 * series.abs(), "{} {}", r.value, series);
    }

    #[test]
    fn lorentzian_bulk_does_not_decay() {
        let d = LorentzianDielectric::new(1e-3, 1.0, 1e-2).unwrap();
        let r = schwinger_bulk(&|w: f64| d.eps(c(w)), 100.0, &resonance_points(&[1.0], 1e-2), 1e-10);
        match r {
            Err(Error::CutoffNotDecayed { partial, .. }) => assert!(partial.is_finite()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sch_bulk_to_light_ratio() {
        let k = Wavenumber::new(1.3).unwrap();
        for n in [1.0, 1.5, 2.0] {
            let light = n * k.get().powi(2) / (PI * PI);
            let r = n_sch_bulk(c(n * n), k) / light;
            assert!((r - n * n / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn estimates() {
        let d = LorentzianDielectric::new(1e-2, 1.0, 1e-2).unwrap();
        let r = f_lff_mg(&d, 1.0).unwrap();
        assert!((r.estimate - 0.002_507_957_747).abs() < 1e-12);
        let d2 = LorentzianDielectric::new(2e-2, 1.0, 1e-2).unwrap();
        assert!((r.estimate / f_lff_mg(&d2, 1.0).unwrap().estimate - 0.5).abs() < 1e-15);
        let z = delta_f_mg(&d, 0.0).unwrap();
        assert_eq!((z.numeric, z.estimate), (0.0, 0.0));
        let df = delta_f_mg(&d, 1.0).unwrap();
        assert!((df.estimate - 1e-4 / 12.0 * (0.5 + 1e-2 / (2.0 * PI))).abs() < 1e-18);
    }

    #[test]
    fn lff_energy_narrow_line_limit() {
        let d = LorentzianDielectric::new(1e-3, 1.0, 1e-3).unwrap();
        let r = f_lff_mg(&d, 1.0).unwrap();
        assert!(r.numeric < 0.0);
        let lead = 1e-3 / 4.0;
        assert!((r.magnitude - lead).abs() < 0.05 * lead, "{}", r.magnitude);
    }

    #[test]
    fn log_series_matches_direct() {
        for u in [C64::new(0.05, 0.03), C64::new(-0.02, 0.09), C64::new(0.099, 0.0)] {
            let direct = (c(1.0) + u / 3.0).ln() * 3.0 - (c(1.0) + u).ln();
            let s = log_ratio(u);
            assert!((s - direct).norm() < 1e-14, "{u} {s} {direct}");
        }
    }

    #[test]
    fn log_shell_matches_quadrature() {
        for a in [C64::new(2.0, 0.3), C64::new(0.5, 0.05), C64::new(-1.0, 0.2)] {
            let f = |q: f64| (a - q * q).ln();
            let (re, _) = crate::quadrature::tanh_sinh_partitioned(&|q: f64| q * q * f(q).re, &[0.0, 1.0, 1.5, 3.0], 1e-12).unwrap();
            let (im, _) = crate::quadrature::tanh_sinh_partitioned(&|q: f64| q * q * f(q).im, &[0.0, 1.0, 1.5, 3.0], 1e-12).unwrap();
            let closed = log_shell(a, 0.0, 3.0);
            assert!((closed - C64::new(re, im)).norm() < 1e-8, "{a}: {closed} vs {re} {im}");
        }
        // real a: the imaginary part is π(Q³ − a^{3/2})/3
        let v = log_shell(c(4.0), 0.0, 5.0);
        assert!((v.im - PI * (125.0 - 8.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn phase_track_unwraps() {
        let z = |w: f64| C64::from_polar(1.0, 3.0 * w);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let t = PhaseTrack::build(&z, &grid).unwrap();
        assert!(t.max_jump < PI / 8.0);
        let w = 7.3;
        assert!((t.unwrap(w, z(w).arg()) - 3.0 * w).abs() < 1e-12);
        let step = |w: f64| if w < 1.0 { c(1.0) } else { c(-1.0) };
        assert!(matches!(PhaseTrack::build(&step, &grid), Err(Error::GridRefinement { .. })));
    }

    #[test]
    fn decomposition_of_empty_medium() {
        let p = LorentzianPolarizability::new(c(0.1), 1.0, 0.01).unwrap();
        let spec = QuadratureSpec::default().with_q_max(100.0);
        let r = vacuum_energy_decomposition(&Vacuum, &p, |w| p.at(c(w)), 20.0, &spec).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn decomposition_bulk_matches_schwinger() {
        let f = 0.05;
        let eps = move |k: C64| c(1.0) + (-(k * k)).exp() * f;
        let m = EffectiveMedium::new(eps);
        // a q-independent medium with ρα̃ = 3(ε−1)/(ε+2) and a nominal Lorentzian α̃
        let p = LorentzianPolarizability::new(c(0.3), 1.0, 0.05).unwrap();
        let model = ScaledDensity { inner: &m, p };
        let spec = QuadratureSpec::default().with_q_max(40.0);
        let r = vacuum_energy_decomposition(&model, &p, |w| p.at(c(w)), 6.0, &spec).unwrap();
        let s = schwinger_bulk(&|w: f64| eps(c(w)), 6.0, &[1.0, 2.0], 1e-12).unwrap();
        assert!((r.bulk_term - s.value).abs() < 1e-4 * s.value.abs(), "{} {}", r.bulk_term, s.value);
        assert!(r.max_phase_jump < PI / 8.0);
        assert_eq!(r.alpha_term, 0.0);
    }

    // Effective medium whose ρα̃ is reported through a fixed Lorentzian α̃, so
    // that the density is well defined.
    struct ScaledDensity<'a> {
        inner: &'a EffectiveMedium,
        p: LorentzianPolarizability,
    }

    impl SusceptibilityModel for ScaledDensity<'_> {
        fn rho_alpha(&self, k: C64) -> C64 {
            self.p.at(k) * 2.0
        }
        fn chi_perp(&self, q: f64, k: C64) -> C64 {
            self.inner.chi_perp(q, k)
        }
        fn chi_par(&self, q: f64, k: C64) -> C64 {
            self.inner.chi_par(q, k)
        }
        fn q_dependence(&self) -> crate::medium::QDependence {
            crate::medium::QDependence::Constant
        }
        fn label(&self) -> String {
            "scaled".into()
        }
    }

    #[test]
    fn rigid_dipole_alpha_term_limit() {
        let p = LorentzianPolarizability::new(c(0.3), 1.0, 0.05).unwrap();
        let m = MgSusceptibility {
            rho: 0.5,
            alpha: Polarizability::Lorentzian(p),
            xi: 0.2,
            window: None,
        };
        let spec = QuadratureSpec::default().with_q_max(200.0);
        let term = |w0: f64| {
            let ap = move |w: f64| c(0.3 / 3.0 * w0 * w0 / (w0 * w0 - w * w));
            vacuum_energy_decomposition(&m, &p, ap, 20.0, &spec).unwrap().alpha_term
        };
        let (a, b) = (term(1e3), term(2e3));
        let rigid = vacuum_energy_decomposition(&m, &p, |_| c(0.1), 20.0, &spec).unwrap().alpha_term;
        assert!(rigid.is_finite());
        // corrections fall off as 1/ω₀²
        let extrapolated = (4.0 * b - a) / 3.0;
        assert!((extrapolated - rigid).abs() < 1e-6 * rigid.abs().max(1e-12), "{a} {b} {rigid}");
    }

    #[test]
    fn lamb_shifts() {
        let vac = |k: C64| phi_factors_at(&Vacuum, k, &QuadratureSpec::default());
        assert_eq!(lamb_shift_res(vac, 0.5, 1.0, 0.01).unwrap(), 0.0);
        let p = LorentzianPolarizability::new(c(0.3), 1.0, 0.05).unwrap();
        assert_eq!(lamb_shift_off(|_| Ok(c(0.0)), &p, 50.0).unwrap(), 0.0);
        let s = C64::new(0.02, -0.01);
        let fake = |k: C64| {
            Ok(PhiFactors {
                phi0_perp: crate::spectral::phi0_perp(k),
                phi_sc_perp: s,
                phi_sc_par: c(0.0),
                k,
                provenance: crate::propagators::PhiProvenance {
                    path: crate::propagators::PhiPath::ClosedForm("test"),
                    cutoff_sensitive: false,
                },
            })
        };
        let e1 = lamb_shift_res(fake, 0.5, 1.2, 0.0).unwrap();
        let e2 = lamb_shift_res(fake, 1.0, 1.2, 0.0).unwrap();
        assert!((e2 - 2.0 * e1).abs() < 1e-16);
        // Γ = 0: equals (k_res² − k₀²)/2k₀ of the resonance equation
        let mu2 = 0.5;
        let k0 = 1.0;
        let a0 = 2.0 * mu2 / k0;
        let k_res = k0 / (1.0 - a0 * k0 * k0 * (2.0 * s.re) / 3.0).sqrt();
        let e = lamb_shift_res(fake, mu2, k_res, 0.0).unwrap();
        let res = lamb_shift_res(fake, mu2, k_res, 0.0).unwrap();
        assert_eq!(e, res);
        let expect = (k_res * k_res - k0 * k0) / (2.0 * k0);
        let lhs = mu2 / 3.0 * k_res * k_res * 2.0 * s.re;
        assert!((lhs - expect).abs() < 1e-14);
        assert!((e - expect).abs() < 1e-14);
    }
}
