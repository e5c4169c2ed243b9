//! Dyson and polarization propagators in momentum space, the stochastic
//! kernel, self-energy φ-factors and dispersion roots.
//!
//! Functions taking a complex spectral point `k` evaluate exactly there; pass
//! [`Wavenumber::retarded`] to apply the iη prescription.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::medium::{lff_ll, MaxwellGarnettMedium, QDependence, SusceptibilityModel};
use crate::quadrature;
use crate::roots::{find_zeros, SearchBox};
use crate::spectral::{
    c, phi0_perp, radial_integral, radial_integral_at, ComplexPermittivitySqrt, QuadratureSpec, RadialRecord,
    Wavenumber, C64, I,
};

/// Transverse Dyson propagator `1/(k²[1 + χ⊥(q)] − q²)`.
pub fn dyson_perp(q: f64, k: C64, model: &dyn SusceptibilityModel) -> Result<C64> {
    let d = k * k * (c(1.0) + model.chi_perp(q, k)) - q * q;
    if d == c(0.0) {
        return domain(format!("transverse normal mode hit at q = {q}"));
    }
    Ok(d.inv())
}

/// Longitudinal Dyson propagator `1/(k²[1 + χ∥(q)])`.
pub fn dyson_par(q: f64, k: C64, model: &dyn SusceptibilityModel) -> Result<C64> {
    let d = k * k * (c(1.0) + model.chi_par(q, k));
    if d == c(0.0) {
        return domain(format!("longitudinal normal mode hit at q = {q}"));
    }
    Ok(d.inv())
}

/// Evaluation route for the polarization propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GvcPath {
    /// `(χ/ρα̃)·G`
    #[default]
    LocalField,
    /// `(1/k²ρα̃)(1 − G/G⁰)`
    DysonRatio,
    /// `−(1/k²ρα̃)·T·G⁰`
    TMatrix,
}

fn rho_alpha_nonzero(model: &dyn SusceptibilityModel, k: C64) -> Result<C64> {
    let x = model.rho_alpha(k);
    if x == c(0.0) {
        return Err(Error::EmptyMedium);
    }
    Ok(x)
}

fn finite_lff(l: C64, q: f64) -> Result<C64> {
    if l.is_finite() {
        Ok(l)
    } else {
        Err(Error::SingularLocalField { q })
    }
}

/// Polarization propagator `(𝒢⊥^VC, 𝒢∥^VC)` via the local-field form.
pub fn gvc(q: f64, k: C64, model: &dyn SusceptibilityModel) -> Result<(C64, C64)> {
    gvc_with(q, k, model, GvcPath::LocalField)
}

pub fn gvc_with(q: f64, k: C64, model: &dyn SusceptibilityModel, path: GvcPath) -> Result<(C64, C64)> {
    let x = rho_alpha_nonzero(model, k)?;
    let k2 = k * k;
    let (cp, cl) = (model.chi_perp(q, k), model.chi_par(q, k));
    match path {
        GvcPath::LocalField => {
            let lp = finite_lff(model.lff_perp(q, k), q)?;
            let ll = finite_lff(model.lff_par(q, k), q)?;
            Ok((lp * dyson_perp(q, k, model)?, ll * dyson_par(q, k, model)?))
        }
        GvcPath::DysonRatio => {
            let ratio_p = (k2 - q * q) / (k2 * (c(1.0) + cp) - q * q);
            let ratio_l = (c(1.0) + cl).inv();
            let pre = (k2 * x).inv();
            Ok((pre * (c(1.0) - ratio_p), pre * (c(1.0) - ratio_l)))
        }
        GvcPath::TMatrix => {
            let g0p = (k2 - q * q).inv();
            let g0l = k2.inv();
            let tp = -k2 * cp / (c(1.0) + k2 * cp * g0p);
            let tl = -k2 * cl / (c(1.0) + cl);
            let pre = -(k2 * x).inv();
            Ok((pre * tp * g0p, pre * tl * g0l))
        }
    }
}

/// Stochastic kernel `Ξ = −(ρα̃/χG⁰)[1 − χ/ρα̃ + k²χG⁰]` for both channels.
pub fn kernel_xi(q: f64, k: C64, model: &dyn SusceptibilityModel) -> Result<(C64, C64)> {
    let x = rho_alpha_nonzero(model, k)?;
    let k2 = k * k;
    let g0p = k2 - q * q;
    if g0p == c(0.0) {
        return domain(format!("free transverse propagator singular at q = {q}"));
    }
    let g0p = g0p.inv();
    let g0l = k2.inv();
    let one = |l: C64, g0: C64| -> C64 { -(c(1.0) - l) / (l * g0) - k2 * x };
    let lp = finite_lff(model.lff_perp(q, k), q)?;
    let ll = finite_lff(model.lff_par(q, k), q)?;
    if lp == c(0.0) || ll == c(0.0) {
        return domain(format!("susceptibility vanishes at q = {q}; kernel undefined"));
    }
    Ok((one(lp, g0p), one(ll, g0l)))
}

/// How a set of φ-factors was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiPath {
    Quadrature {
        perp: RadialRecord,
        /// Upper limit of the longitudinal integral.
        par_upper: f64,
        par_error: f64,
    },
    ClosedForm(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiProvenance {
    pub path: PhiPath,
    /// Real parts depend on an explicit UV cutoff.
    pub cutoff_sensitive: bool,
}

/// Self-energy integrals at one spectral point.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFactors {
    pub phi0_perp: C64,
    pub phi_sc_perp: C64,
    pub phi_sc_par: C64,
    /// Spectral point (real for on-axis evaluation).
    pub k: C64,
    pub provenance: PhiProvenance,
}

impl PhiFactors {
    /// `2φ⊥⁽⁰⁾ + 2φ⊥^sc + φ∥^sc`.
    pub fn self_energy_sum(&self) -> C64 {
        self.phi0_perp * 2.0 + self.phi_sc_perp * 2.0 + self.phi_sc_par
    }

    /// `2φ⊥^sc + φ∥^sc`.
    pub fn scattering_sum(&self) -> C64 {
        self.phi_sc_perp * 2.0 + self.phi_sc_par
    }
}

/// Real positions near which transverse integrands are sharply peaked.
pub(crate) fn transverse_poles(model: &dyn SusceptibilityModel, k: C64) -> Vec<f64> {
    let kr = k.re;
    let mut poles = vec![kr];
    let mut q = ComplexPermittivitySqrt::new(c(1.0) + model.chi_perp(0.0, k)).n() * kr;
    for _ in 0..3 {
        if !(q.is_finite() && q > 0.0) {
            break;
        }
        poles.push(q);
        q = ComplexPermittivitySqrt::new(c(1.0) + model.chi_perp(q, k)).n() * kr;
    }
    if let QDependence::Window { q_c } = model.q_dependence() {
        poles.push(q_c);
    }
    poles
}

// ℓG⊥ − G⊥⁰ as a single fraction: [(1−ℓ)q² + ℓb − a] / ((a − q²)(b − q²)).
fn perp_integrand(model: &dyn SusceptibilityModel, q: f64, kc: C64) -> C64 {
    let b = kc * kc;
    let a = b * (c(1.0) + model.chi_perp(q, kc));
    let l = model.lff_perp(q, kc);
    let q2 = q * q;
    let num = (c(1.0) - l) * q2 + l * b - a;
    if num == c(0.0) {
        return c(0.0);
    }
    num / ((a - q2) * (b - q2))
}

fn par_integrand(model: &dyn SusceptibilityModel, q: f64, k: C64) -> C64 {
    let chi = model.chi_par(q, k);
    let l = model.lff_par(q, k);
    (l - c(1.0) - chi) / (k * k * (c(1.0) + chi))
}

fn check_lff(model: &dyn SusceptibilityModel, k: C64, q_hi: f64) -> Result<()> {
    let upper = if q_hi.is_finite() { q_hi } else { 10.0 * k.re };
    for i in 0..=64 {
        let q = upper * i as f64 / 64.0;
        finite_lff(model.lff_perp(q, k), q)?;
        finite_lff(model.lff_par(q, k), q)?;
    }
    Ok(())
}

fn par_upper(model: &dyn SusceptibilityModel, spec: &QuadratureSpec) -> f64 {
    match model.q_dependence() {
        QDependence::Window { q_c } => q_c.min(spec.q_max),
        _ => spec.q_max,
    }
}

fn par_channel(model: &dyn SusceptibilityModel, k: C64, spec: &QuadratureSpec) -> Result<(C64, f64, f64)> {
    par_integral(model, k, spec, |q| par_integrand(model, q, k))
}

/// `(1/2π²)∫q²f(q)dq` for a longitudinal-channel integrand, over the window
/// when the model has one. Returns value, upper limit and error.
pub(crate) fn par_integral<F: Fn(f64) -> C64>(
    model: &dyn SusceptibilityModel,
    k: C64,
    spec: &QuadratureSpec,
    f: F,
) -> Result<(C64, f64, f64)> {
    let upper = par_upper(model, spec);
    let norm = 1.0 / (2.0 * PI * PI);
    if upper.is_finite() {
        let pts = quadrature::partition(0.0, upper, [k.re]);
        let g = |q: f64| f(q) * (q * q);
        let r = quadrature::integrate(&g, &pts, spec.tolerance())?;
        Ok((r.value * norm, upper, r.error * norm))
    } else {
        let s = QuadratureSpec {
            richardson: false,
            ..*spec
        };
        let h = |q: f64, _kc: C64| f(q);
        let (v, rec) = if k.im == 0.0 {
            radial_integral(h, &s, Wavenumber::new(k.re)?, &[k.re])?
        } else {
            radial_integral_at(h, &s, k, &[k.re])?
        };
        Ok((v, upper, rec.error))
    }
}

/// φ-factors at real `k`: the transverse scattering integral uses the iη
/// prescription with Richardson extrapolation; the longitudinal one has no
/// pole on the axis and is evaluated at `k` itself.
pub fn phi_factors(model: &dyn SusceptibilityModel, k: Wavenumber, spec: &QuadratureSpec) -> Result<PhiFactors> {
    spec.validate(k)?;
    let kr = c(k.get());
    check_lff(model, kr, spec.q_max)?;
    let poles = transverse_poles(model, kr);
    let (perp, rec) = radial_integral(|q, kc| perp_integrand(model, q, kc), spec, k, &poles)?;
    let (par, upper, par_error) = par_channel(model, kr, spec)?;
    Ok(PhiFactors {
        phi0_perp: phi0_perp(kr),
        phi_sc_perp: perp,
        phi_sc_par: par,
        k: kr,
        provenance: provenance(model, spec, rec, upper, par_error),
    })
}

/// φ-factors at a complex spectral point with `Im k > 0`.
pub fn phi_factors_at(model: &dyn SusceptibilityModel, k: C64, spec: &QuadratureSpec) -> Result<PhiFactors> {
    if k.im == 0.0 {
        return phi_factors(model, Wavenumber::new(k.re)?, spec);
    }
    if !(k.im > 0.0) || !(k.re >= 0.0) {
        return Err(Error::AnalyticContinuation {
            re: k.re,
            im: k.im,
            reason: "spectral point must lie in the first quadrant".into(),
        });
    }
    check_lff(model, k, spec.q_max)?;
    let poles = transverse_poles(model, k);
    let (perp, rec) = radial_integral_at(|q, kc| perp_integrand(model, q, kc), spec, k, &poles)?;
    let (par, upper, par_error) = par_channel(model, k, spec)?;
    Ok(PhiFactors {
        phi0_perp: phi0_perp(k),
        phi_sc_perp: perp,
        phi_sc_par: par,
        k,
        provenance: provenance(model, spec, rec, upper, par_error),
    })
}

fn provenance(
    model: &dyn SusceptibilityModel,
    spec: &QuadratureSpec,
    rec: RadialRecord,
    upper: f64,
    par_error: f64,
) -> PhiProvenance {
    let windowed = matches!(model.q_dependence(), QDependence::Window { .. });
    PhiProvenance {
        path: PhiPath::Quadrature {
            perp: rec,
            par_upper: upper,
            par_error,
        },
        cutoff_sensitive: spec.q_max.is_finite() && !windowed,
    }
}

/// Long-wavelength longitudinal scattering factor of a Maxwell-Garnett medium,
/// pole contribution of `2∫L(L − 1)G⊥^eff`: `2L(L − 1)(−i√ε k/4π)`.
pub fn phi_par_mg_longwave(m: &MaxwellGarnettMedium, k: Wavenumber) -> C64 {
    if k.get() * m.xi > 0.3 {
        log::warn!("phi_par_mg_longwave: k*xi = {} is not small", k.get() * m.xi);
    }
    let eps = m.eps();
    let l = lff_ll(eps);
    let n = ComplexPermittivitySqrt::new(eps).sqrt_eps;
    l * (l - 1.0) * 2.0 * (-I * n * k.get() / (4.0 * PI))
}

/// Quadrature of `2∫d³q/(2π)³ L(L − 1)/(εk² − q²)`; the real part needs a
/// finite `q_max`.
pub fn phi_par_mg_longwave_quadrature(
    m: &MaxwellGarnettMedium,
    k: Wavenumber,
    spec: &QuadratureSpec,
) -> Result<(C64, RadialRecord)> {
    let eps = m.eps();
    let l = lff_ll(eps);
    let pre = l * (l - 1.0) * 2.0;
    let n = ComplexPermittivitySqrt::new(eps).n();
    radial_integral(|q, kc| pre / (eps * kc * kc - q * q), spec, k, &[n * k.get()])
}

/// Normal-mode wavenumbers in the complex q-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionRoots {
    pub k_nor_perp: Vec<C64>,
    pub k_nor_par: Vec<C64>,
}

/// Roots of `k²ε⊥(q) − q² = 0` and `ε∥(q) = 0` inside `search_box`, for
/// permittivities analytic in q.
pub fn dispersion_roots_with<P, L>(eps_perp: P, eps_par: L, k: C64, search_box: &SearchBox) -> Result<DispersionRoots>
where
    P: Fn(C64) -> C64,
    L: Fn(C64) -> C64,
{
    let k2 = k * k;
    let tol = 1e-10;
    let ft = |q: C64| (k2 * eps_perp(q) - q * q) / k2;
    let perp = find_zeros(&ft, search_box, tol)?;
    let probe = eps_par(search_box_center(search_box));
    let par = if (0..8).all(|i| {
        let z = C64::new(
            search_box.re.0 + (search_box.re.1 - search_box.re.0) * (i as f64 + 0.5) / 8.0,
            0.5 * (search_box.im.0 + search_box.im.1),
        );
        eps_par(z) == probe
    }) {
        if probe == c(0.0) {
            return domain("longitudinal permittivity vanishes identically");
        }
        Vec::new()
    } else {
        find_zeros(&eps_par, search_box, tol)?
    };
    Ok(DispersionRoots {
        k_nor_perp: perp,
        k_nor_par: par,
    })
}

fn search_box_center(b: &SearchBox) -> C64 {
    C64::new(0.5 * (b.re.0 + b.re.1), 0.5 * (b.im.0 + b.im.1))
}

/// Dispersion roots of a q-independent model.
pub fn dispersion_roots(model: &dyn SusceptibilityModel, k: C64, search_box: &SearchBox) -> Result<DispersionRoots> {
    if model.q_dependence() != QDependence::Constant {
        return domain("root search needs a susceptibility analytic in q; use dispersion_roots_with");
    }
    let ep = c(1.0) + model.chi_perp(0.0, k);
    let el = c(1.0) + model.chi_par(0.0, k);
    dispersion_roots_with(|_| ep, |_| el, k, search_box)
}

/// Complex frequencies where a Lorentzian ε vanishes: zeros of the numerator
/// `ω_r²(1 + f) − ω² − iωΓ` found by contour search.
pub fn longitudinal_frequency_roots(d: &crate::medium::LorentzianDielectric) -> Result<Vec<C64>> {
    let wr2 = d.omega_res * d.omega_res;
    let num = |w: C64| (c(wr2 * (1.0 + d.f)) - w * w - I * w * d.gamma) / wr2;
    let span = 2.0 * d.omega_res * (1.0 + d.f).sqrt() + d.gamma;
    let b = SearchBox::new((-span, span), (-d.gamma - span, 0.5 * span))?;
    find_zeros(&num, &b, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{
        constant_mg_susceptibility, windowed_mg_susceptibility, EffectiveMedium, LorentzianDielectric,
        MgSusceptibility, Uncorrelated, Vacuum,
    };

    fn k1() -> Wavenumber {
        Wavenumber::new(1.0).unwrap()
    }

    #[test]
    fn free_space_collapse() {
        let k = C64::new(1.3, 0.01);
        for q in [0.0, 0.5, 2.0] {
            assert_eq!(dyson_perp(q, k, &Vacuum).unwrap(), (k * k - q * q).inv());
            assert_eq!(dyson_par(q, k, &Vacuum).unwrap(), (k * k).inv());
        }
        assert_eq!(gvc(0.3, k, &Vacuum), Err(Error::EmptyMedium));
        assert_eq!(kernel_xi(0.3, k, &Vacuum), Err(Error::EmptyMedium));
    }

    #[test]
    fn constant_chi_at_origin() {
        let m = Uncorrelated { rho_alpha: C64::new(0.4, 0.1) };
        let k = c(2.0);
        let g = dyson_perp(0.0, k, &m).unwrap();
        assert!((g - (k * k * (c(1.0) + m.rho_alpha)).inv()).norm() < 1e-16);
        let (gp, _) = gvc(0.7, k, &m).unwrap();
        assert_eq!(gp, dyson_perp(0.7, k, &m).unwrap());
    }

    #[test]
    fn mg_lorentz_lorenz_factor() {
        let med = MaxwellGarnettMedium::new(3.0, C64::new(0.1, 0.02), 0.2).unwrap();
        let m = constant_mg_susceptibility(&med);
        let k = c(1.0);
        let (gp, _) = gvc(0.0, k, &m).unwrap();
        let ratio = gp / dyson_perp(0.0, k, &m).unwrap();
        assert!((ratio - lff_ll(med.eps())).norm() < 1e-14);
    }

    #[test]
    fn singular_local_field_reported() {
        let med = MgSusceptibility {
            rho: 1.0,
            alpha: crate::medium::Polarizability::Fixed(c(3.0)),
            xi: 0.2,
            window: None,
        };
        assert!(matches!(gvc(0.5, c(1.0), &med), Err(Error::SingularLocalField { .. })));
        assert!(matches!(phi_factors(&med, k1(), &QuadratureSpec::default().with_q_max(10.0)), Err(Error::SingularLocalField { .. })));
    }

    #[test]
    fn vacuum_phi_factors_exact() {
        let p = phi_factors(&Vacuum, k1(), &QuadratureSpec::default()).unwrap();
        assert_eq!(p.phi_sc_perp, c(0.0));
        assert_eq!(p.phi_sc_par, c(0.0));
        assert_eq!(p.phi0_perp, phi0_perp(c(1.0)));
    }

    #[test]
    fn effective_medium_transverse_pole() {
        for n in [1.2_f64, 1.5, 2.0] {
            let eps = n * n;
            let m = EffectiveMedium::uniform(c(eps));
            let l = (eps + 2.0) / 3.0;
            let spec = QuadratureSpec::default().with_q_max(200.0);
            let p = phi_factors(&m, k1(), &spec).unwrap();
            let expect = -(l * n - 1.0) / (4.0 * PI);
            assert!((p.phi_sc_perp.im - expect).abs() < 1e-6 * expect.abs(), "{n}: {}", p.phi_sc_perp.im);
            assert_eq!(p.phi_sc_par.im, 0.0);
            assert!(p.provenance.cutoff_sensitive);
        }
    }

    #[test]
    fn constant_models_need_cutoff() {
        let m = EffectiveMedium::uniform(c(2.0));
        let r = phi_factors(&m, k1(), &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::ModelRegularization(_))));
    }

    #[test]
    fn windowed_mg_cutoff_independence() {
        let xi = 0.1;
        let med = MaxwellGarnettMedium::new(1.0, C64::new(0.01, 0.0), xi).unwrap();
        let base = windowed_mg_susceptibility(&med);
        let spec = QuadratureSpec::default();
        let a = phi_factors(&base, k1(), &spec).unwrap();
        let b = phi_factors(&base.with_window(2.0 * base.window.unwrap()), k1(), &spec).unwrap();
        assert!(!a.provenance.cutoff_sensitive);
        let da = (a.phi_sc_perp.im - b.phi_sc_perp.im).abs();
        assert!(da <= 1e-6 * a.phi_sc_perp.im.abs(), "{a:?} {b:?}");
        assert_eq!(a.phi_sc_par.im, 0.0);
        assert_eq!(b.phi_sc_par.im, 0.0);
    }

    #[test]
    fn passive_self_energy_sign() {
        let med = MaxwellGarnettMedium::new(10.0, C64::new(0.02, 0.01), 0.2).unwrap();
        let m = windowed_mg_susceptibility(&med);
        let p = phi_factors(&m, k1(), &QuadratureSpec::default()).unwrap();
        assert!(p.self_energy_sum().im <= 0.0);
    }

    #[test]
    fn complex_point_matches_real_axis_limit() {
        let med = MaxwellGarnettMedium::new(10.0, C64::new(0.02, 0.01), 0.2).unwrap();
        let m = windowed_mg_susceptibility(&med);
        let spec = QuadratureSpec::default();
        let on = phi_factors(&m, k1(), &spec).unwrap();
        let off = phi_factors_at(&m, C64::new(1.0, 1e-7), &spec).unwrap();
        assert!((on.self_energy_sum() - off.self_energy_sum()).norm() < 1e-5 * on.self_energy_sum().norm());
        assert!(phi_factors_at(&m, C64::new(1.0, -0.1), &spec).is_err());
    }

    #[test]
    fn longwave_mg_values() {
        let vac_like = MaxwellGarnettMedium::new(1.0, c(1e-300), 0.1).unwrap();
        assert!(phi_par_mg_longwave(&vac_like, k1()).norm() < 1e-290);
        // ε = n² = 2.25 ⇒ ρα̃ = 3(ε−1)/(ε+2)
        let eps = 2.25;
        let x = 3.0 * (eps - 1.0) / (eps + 2.0);
        let m = MaxwellGarnettMedium::new(1.0, c(x), 0.1).unwrap();
        let v = phi_par_mg_longwave(&m, k1());
        let l = (eps + 2.0) / 3.0;
        let expect = 2.0 * l * (l - 1.0) * (-1.5 / (4.0 * PI));
        assert!((v.im - expect).abs() < 1e-14);
        assert!((v.im - -0.140_918_2).abs() < 1e-6);
        let spec = QuadratureSpec::default().with_q_max(100.0);
        let (qv, _) = phi_par_mg_longwave_quadrature(&m, k1(), &spec).unwrap();
        assert!((qv.im - v.im).abs() < 1e-6 * v.im.abs());
        assert!(phi_par_mg_longwave_quadrature(&m, k1(), &QuadratureSpec::default()).is_err());
        for i in 0..20 {
            let n: f64 = 1.0 + 0.1 * i as f64;
            let e = n * n;
            let m = MaxwellGarnettMedium::new(1.0, c(3.0 * (e - 1.0) / (e + 2.0)), 0.1).unwrap();
            assert!(phi_par_mg_longwave(&m, k1()).im <= 0.0);
        }
    }

    #[test]
    fn transverse_root_of_constant_medium() {
        let m = EffectiveMedium::uniform(c(4.0));
        let b = SearchBox::new((0.1, 5.0), (-1.0, 1.0)).unwrap();
        let r = dispersion_roots(&m, c(1.0), &b).unwrap();
        assert_eq!(r.k_nor_perp.len(), 1);
        assert!((r.k_nor_perp[0] - c(2.0)).norm() < 1e-12);
        assert!(r.k_nor_par.is_empty());
        let lossy = EffectiveMedium::uniform(C64::new(2.0, 0.3));
        let r = dispersion_roots(&lossy, c(1.5), &b).unwrap();
        let q = r.k_nor_perp[0];
        assert!((c(2.25) * C64::new(2.0, 0.3) - q * q).norm() < 1e-10 * 2.25);
        assert!(dispersion_roots(&windowed_mg_susceptibility(&MaxwellGarnettMedium::new(1.0, c(0.1), 0.2).unwrap()), c(1.0), &b).is_err());
    }

    #[test]
    fn longitudinal_root_in_q() {
        // ε∥(q) = 1 − 2/(1 + q²) vanishes at q = 1
        let b = SearchBox::new((0.2, 3.0), (-0.5, 0.5)).unwrap();
        let r = dispersion_roots_with(|_| c(2.0), |q: C64| c(1.0) - 2.0 / (c(1.0) + q * q), c(1.0), &b).unwrap();
        assert_eq!(r.k_nor_par.len(), 1);
        assert!((r.k_nor_par[0] - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn lorentzian_longitudinal_frequency() {
        let d = LorentzianDielectric::new(0.3, 2.0, 0.05).unwrap();
        let roots = longitudinal_frequency_roots(&d).unwrap();
        assert_eq!(roots.len(), 2);
        let disc = (4.0 * 1.3 - 0.05_f64 * 0.05 / 4.0).sqrt();
        for r in &roots {
            let expect = C64::new(disc * r.re.signum(), -0.025);
            assert!((r - expect).norm() < 1e-12, "{r}");
            assert!(d.eps(*r).norm() < 1e-10);
        }
        let sharp = LorentzianDielectric::new(0.3, 2.0, 1e-9).unwrap();
        let r = longitudinal_frequency_roots(&sharp).unwrap();
        assert!((r[1].re - 2.0 * 1.3_f64.sqrt()).abs() < 1e-9);
    }
}
