//! Susceptibility, permittivity, polarizability and local-field-factor models.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::spectral::{c, Wavenumber, C64, I};

/// Maxwell-Garnett susceptibility `ρα̃/(1 − ρα̃/3)`.
pub fn chi_mg(rho_alpha: C64) -> Result<C64> {
    let d = c(1.0) - rho_alpha / 3.0;
    if d.norm() < 1e-12 {
        return Err(Error::SingularMedium(d.norm()));
    }
    Ok(rho_alpha / d)
}

/// Lorentz-Lorenz local field factor `(ε + 2)/3`.
pub fn lff_ll(eps: C64) -> C64 {
    (eps + 2.0) / 3.0
}

/// Onsager-Böttcher local field factor `3ε/(2ε + 1)`.
pub fn lff_ob(eps: C64) -> Result<C64> {
    let d = eps * 2.0 + 1.0;
    if d.norm() < 1e-12 {
        return domain("Onsager-Boettcher factor is singular at eps = -1/2");
    }
    Ok(eps * 3.0 / d)
}

/// Single-resonance dielectric `ε = 1 + fω_r²/(ω_r² − ω² − iωΓ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianDielectric {
    pub f: f64,
    pub omega_res: f64,
    pub gamma: f64,
}

impl LorentzianDielectric {
    pub fn new(f: f64, omega_res: f64, gamma: f64) -> Result<Self> {
        if !(f > 0.0 && f < 1.0) {
            return domain(format!("oscillator strength must lie in (0, 1), got {f}"));
        }
        if !(omega_res > 0.0) || !(gamma > 0.0) {
            return domain("omega_res and gamma must be positive");
        }
        Ok(Self { f, omega_res, gamma })
    }

    /// ε at a complex frequency (analytic in the upper half plane).
    pub fn eps(&self, omega: C64) -> C64 {
        let w2 = self.omega_res * self.omega_res;
        c(1.0) + self.f * w2 / (c(w2) - omega * omega - I * omega * self.gamma)
    }

    /// Lorentz-Lorenz factor `(ε + 2)/3` at a complex frequency.
    pub fn lff(&self, omega: C64) -> C64 {
        lff_ll(self.eps(omega))
    }
}

/// ε of a Lorentzian dielectric at real `omega ≥ 0`.
pub fn eps_lorentzian(omega: f64, d: &LorentzianDielectric) -> C64 {
    d.eps(c(omega))
}

/// Renormalized Lorentzian polarizability
/// `α̃ = (1/3)α̃₀k_res²/(k_res² − k² − iΓk³/k_res²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianPolarizability {
    pub alpha0_tilde: C64,
    pub k_res: f64,
    pub gamma: f64,
}

impl LorentzianPolarizability {
    pub fn new(alpha0_tilde: C64, k_res: f64, gamma: f64) -> Result<Self> {
        if !(k_res > 0.0) || !(gamma >= 0.0) {
            return domain("k_res must be positive and gamma non-negative");
        }
        Ok(Self {
            alpha0_tilde,
            k_res,
            gamma,
        })
    }

    /// Free-space parameters: `Γ₀ = α₀k₀⁴/6π`.
    pub fn free_space(alpha0: f64, k0: f64) -> Result<Self> {
        Self::new(c(alpha0), k0, alpha0 * k0.powi(4) / (6.0 * PI))
    }

    /// α̃ at a complex spectral point.
    pub fn at(&self, k: C64) -> C64 {
        let kr2 = self.k_res * self.k_res;
        self.alpha0_tilde * kr2 / 3.0 / (c(kr2) - k * k - I * self.gamma * k * k * k / kr2)
    }
}

pub fn alpha_lorentzian(k: Wavenumber, p: &LorentzianPolarizability) -> C64 {
    p.at(c(k.get()))
}

/// Electrostatic polarizability of a sphere, `4πa³(ε_e − 1)/(ε_e + 2)`.
pub fn alpha0_nanoparticle(eps_e: C64, a: f64) -> Result<C64> {
    if !(a > 0.0) {
        return domain(format!("radius must be positive, got {a}"));
    }
    let d = eps_e + 2.0;
    if d.norm() < 1e-12 {
        return domain("Froehlich pole: eps_e = -2");
    }
    Ok((eps_e - 1.0) / d * (4.0 * PI * a.powi(3)))
}

/// Static two-level polarizability `α₀ = 2|μ|²/ω₀`.
pub fn alpha0_two_level(mu2: f64, omega0: f64) -> f64 {
    2.0 * mu2 / omega0
}

/// Bare two-level polarizability `α′ = (1/3)α₀ω₀²/(ω₀² − ω²)`.
pub fn alpha_bare_atom(omega: f64, mu2: f64, omega0: f64) -> Result<C64> {
    if !(mu2 > 0.0) || !(omega0 > 0.0) {
        return domain("mu2 and omega0 must be positive");
    }
    let d = omega0 * omega0 - omega * omega;
    if d.abs() <= 1e-12 * omega0 * omega0 {
        return domain(format!("bare pole at omega = omega0 = {omega0}"));
    }
    Ok(c(alpha0_two_level(mu2, omega0) * omega0 * omega0 / (3.0 * d)))
}

/// Hard-excluded dipoles with Maxwell-Garnett response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellGarnettMedium {
    pub rho: f64,
    pub alpha_tilde: C64,
    pub xi: f64,
}

impl MaxwellGarnettMedium {
    pub fn new(rho: f64, alpha_tilde: C64, xi: f64) -> Result<Self> {
        if !(rho > 0.0) || !(xi > 0.0) {
            return domain("rho and xi must be positive");
        }
        let m = Self {
            rho,
            alpha_tilde,
            xi,
        };
        chi_mg(m.rho_alpha())?;
        if m.packing_fraction() >= 0.64 {
            return domain(format!("packing fraction {} exceeds 0.64", m.packing_fraction()));
        }
        Ok(m)
    }

    pub fn rho_alpha(&self) -> C64 {
        self.alpha_tilde * self.rho
    }

    /// `ρ(4π/3)(ξ/2)³`.
    pub fn packing_fraction(&self) -> f64 {
        self.rho * 4.0 / 3.0 * PI * (0.5 * self.xi).powi(3)
    }

    pub fn chi(&self) -> C64 {
        chi_mg(self.rho_alpha()).expect("validated at construction")
    }

    pub fn eps(&self) -> C64 {
        self.chi() + 1.0
    }

    /// Lorentz-Lorenz factor `1/(1 − ρα̃/3)`.
    pub fn lff(&self) -> C64 {
        (c(1.0) - self.rho_alpha() / 3.0).inv()
    }
}

/// How a model's susceptibility depends on |q|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QDependence {
    Constant,
    /// Long-wavelength value below `q_c`; beyond it the longitudinal
    /// scattering integrand vanishes identically.
    Window { q_c: f64 },
    General,
}

/// Isotropic susceptibility `χ⊥∥(|q|, k)` of a medium.
///
/// Models are evaluated at complex `k` for analytic continuation.
pub trait SusceptibilityModel: Send + Sync {
    fn rho_alpha(&self, k: C64) -> C64;
    fn chi_perp(&self, q: f64, k: C64) -> C64;
    fn chi_par(&self, q: f64, k: C64) -> C64;

    /// Local field factor `χ⊥/ρα̃`.
    fn lff_perp(&self, q: f64, k: C64) -> C64 {
        self.chi_perp(q, k) / self.rho_alpha(k)
    }

    /// Local field factor `χ∥/ρα̃`.
    fn lff_par(&self, q: f64, k: C64) -> C64 {
        self.chi_par(q, k) / self.rho_alpha(k)
    }

    fn q_dependence(&self) -> QDependence {
        QDependence::General
    }

    /// Exclusion radius, when the model has one.
    fn xi(&self) -> Option<f64> {
        None
    }

    fn label(&self) -> String;
}

/// Empty space.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vacuum;

impl SusceptibilityModel for Vacuum {
    fn rho_alpha(&self, _k: C64) -> C64 {
        c(0.0)
    }
    fn chi_perp(&self, _q: f64, _k: C64) -> C64 {
        c(0.0)
    }
    fn chi_par(&self, _q: f64, _k: C64) -> C64 {
        c(0.0)
    }
    fn lff_perp(&self, _q: f64, _k: C64) -> C64 {
        c(1.0)
    }
    fn lff_par(&self, _q: f64, _k: C64) -> C64 {
        c(1.0)
    }
    fn q_dependence(&self) -> QDependence {
        QDependence::Constant
    }
    fn label(&self) -> String {
        "vacuum".into()
    }
}

/// Dilute uncorrelated dipoles, `χ = ρα̃` (unit local field factor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uncorrelated {
    pub rho_alpha: C64,
}

impl SusceptibilityModel for Uncorrelated {
    fn rho_alpha(&self, _k: C64) -> C64 {
        self.rho_alpha
    }
    fn chi_perp(&self, _q: f64, _k: C64) -> C64 {
        self.rho_alpha
    }
    fn chi_par(&self, _q: f64, _k: C64) -> C64 {
        self.rho_alpha
    }
    fn lff_perp(&self, _q: f64, _k: C64) -> C64 {
        c(1.0)
    }
    fn lff_par(&self, _q: f64, _k: C64) -> C64 {
        c(1.0)
    }
    fn q_dependence(&self) -> QDependence {
        QDependence::Constant
    }
    fn label(&self) -> String {
        "uncorrelated".into()
    }
}

type EpsFn = dyn Fn(C64) -> C64 + Send + Sync;

/// q-independent effective medium with permittivity ε(k) and Lorentz-Lorenz
/// local field factor.
pub struct EffectiveMedium {
    eps: Box<EpsFn>,
}

impl EffectiveMedium {
    pub fn new(eps: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        Self { eps: Box::new(eps) }
    }

    pub fn uniform(eps: C64) -> Self {
        Self::new(move |_| eps)
    }

    pub fn eps(&self, k: C64) -> C64 {
        (self.eps)(k)
    }
}

impl std::fmt::Debug for EffectiveMedium {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EffectiveMedium").finish_non_exhaustive()
    }
}

impl SusceptibilityModel for EffectiveMedium {
    fn rho_alpha(&self, k: C64) -> C64 {
        let e = self.eps(k);
        (e - 1.0) * 3.0 / (e + 2.0)
    }
    fn chi_perp(&self, _q: f64, k: C64) -> C64 {
        self.eps(k) - 1.0
    }
    fn chi_par(&self, _q: f64, k: C64) -> C64 {
        self.eps(k) - 1.0
    }
    fn lff_perp(&self, _q: f64, k: C64) -> C64 {
        lff_ll(self.eps(k))
    }
    fn lff_par(&self, _q: f64, k: C64) -> C64 {
        lff_ll(self.eps(k))
    }
    fn q_dependence(&self) -> QDependence {
        QDependence::Constant
    }
    fn label(&self) -> String {
        "effective-medium".into()
    }
}

/// Polarizability of the constituents of a Maxwell-Garnett model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polarizability {
    Fixed(C64),
    Lorentzian(LorentzianPolarizability),
}

impl Polarizability {
    pub fn at(&self, k: C64) -> C64 {
        match self {
            Self::Fixed(a) => *a,
            Self::Lorentzian(p) => p.at(k),
        }
    }
}

/// Window radius whose momentum-space volume equals the inverse exclusion
/// volume: `q_c³/6π² = 1/((4π/3)ξ³)`, i.e. `q_c = (9π/2)^{1/3}/ξ`.
pub fn exclusion_matched_cutoff(xi: f64) -> f64 {
    (4.5 * PI).cbrt() / xi
}

/// Maxwell-Garnett susceptibility, optionally windowed in |q|.
///
/// Below the window both channels carry `χ_MG`. Beyond it the transverse
/// channel falls back to `ρα̃` and the longitudinal one to `ρα̃/(1 − ρα̃)`,
/// where the longitudinal polarization propagator equals the free one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgSusceptibility {
    pub rho: f64,
    pub alpha: Polarizability,
    pub xi: f64,
    pub window: Option<f64>,
}

impl MgSusceptibility {
    pub fn with_window(mut self, q_c: f64) -> Self {
        self.window = Some(q_c);
        self
    }

    fn inside(&self, q: f64) -> bool {
        self.window.is_none_or(|qc| q <= qc)
    }
}

impl SusceptibilityModel for MgSusceptibility {
    fn rho_alpha(&self, k: C64) -> C64 {
        self.alpha.at(k) * self.rho
    }
    fn chi_perp(&self, q: f64, k: C64) -> C64 {
        let x = self.rho_alpha(k);
        if self.inside(q) {
            x / (c(1.0) - x / 3.0)
        } else {
            x
        }
    }
    fn chi_par(&self, q: f64, k: C64) -> C64 {
        let x = self.rho_alpha(k);
        if self.inside(q) {
            x / (c(1.0) - x / 3.0)
        } else {
            x / (c(1.0) - x)
        }
    }
    fn lff_perp(&self, q: f64, k: C64) -> C64 {
        if self.inside(q) {
            (c(1.0) - self.rho_alpha(k) / 3.0).inv()
        } else {
            c(1.0)
        }
    }
    fn lff_par(&self, q: f64, k: C64) -> C64 {
        if self.inside(q) {
            (c(1.0) - self.rho_alpha(k) / 3.0).inv()
        } else {
            (c(1.0) - self.rho_alpha(k)).inv()
        }
    }
    fn q_dependence(&self) -> QDependence {
        match self.window {
            Some(q_c) => QDependence::Window { q_c },
            None => QDependence::Constant,
        }
    }
    fn xi(&self) -> Option<f64> {
        Some(self.xi)
    }
    fn label(&self) -> String {
        match self.window {
            Some(q_c) => format!("windowed-mg(q_c={q_c})"),
            None => "constant-mg".into(),
        }
    }
}

/// Windowed Maxwell-Garnett model with the exclusion-matched window radius.
pub fn windowed_mg_susceptibility(m: &MaxwellGarnettMedium) -> MgSusceptibility {
    MgSusceptibility {
        rho: m.rho,
        alpha: Polarizability::Fixed(m.alpha_tilde),
        xi: m.xi,
        window: Some(exclusion_matched_cutoff(m.xi)),
    }
}

/// Maxwell-Garnett model with no window (q-independent).
pub fn constant_mg_susceptibility(m: &MaxwellGarnettMedium) -> MgSusceptibility {
    MgSusceptibility {
        rho: m.rho,
        alpha: Polarizability::Fixed(m.alpha_tilde),
        xi: m.xi,
        window: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn chi_mg_examples() {
        assert!((chi_mg(c(0.3)).unwrap().re - 0.3 / 0.9).abs() < 1e-15);
        assert_eq!(chi_mg(c(0.0)).unwrap(), c(0.0));
        assert!(matches!(chi_mg(c(3.0)), Err(Error::SingularMedium(_))));
    }

    #[test]
    fn lff_examples() {
        assert_eq!(lff_ll(c(4.0)), c(2.0));
        assert_eq!(lff_ll(c(1.0)), c(1.0));
        assert_eq!(lff_ob(c(1.0)).unwrap(), c(1.0));
        assert!(close(lff_ob(c(4.0)).unwrap(), c(12.0 / 9.0), 1e-15));
        assert!(lff_ob(c(-0.5)).is_err());
    }

    #[test]
    fn lorentzian_dielectric_limits() {
        let d = LorentzianDielectric::new(0.1, 2.0, 0.05).unwrap();
        assert_eq!(eps_lorentzian(0.0, &d), c(1.1));
        let at_res = eps_lorentzian(2.0, &d);
        assert!(close(at_res, C64::new(1.0, 0.1 * 2.0 / 0.05), 1e-14));
        assert!((eps_lorentzian(1e8, &d) - 1.0).norm() < 1e-15);
        for i in 1..200 {
            let w = i as f64 * 0.05;
            assert!(eps_lorentzian(w, &d).im > 0.0);
            // ε(−ω*)* = ε(ω)
            let z = C64::new(w, 0.01);
            assert!(close(d.eps(-z.conj()).conj(), d.eps(z), 1e-14));
        }
        assert!(LorentzianDielectric::new(1.5, 1.0, 0.1).is_err());
    }

    #[test]
    fn lorentzian_polarizability() {
        let p = LorentzianPolarizability::new(c(2.0), 1.5, 0.01).unwrap();
        let k0 = p.at(c(1e-9));
        assert!(close(k0, c(2.0 / 3.0), 1e-12));
        let res = p.at(c(1.5));
        assert!(close(res, I * 2.0 * 1.5 / (3.0 * 0.01), 1e-14));
        for i in 1..300 {
            assert!(alpha_lorentzian(Wavenumber::new(i as f64 * 0.01).unwrap(), &p).im > 0.0);
        }
    }

    #[test]
    fn nanoparticle() {
        assert_eq!(alpha0_nanoparticle(c(1.0), 1.0).unwrap(), c(0.0));
        assert!(close(alpha0_nanoparticle(c(4.0), 1.0).unwrap(), c(2.0 * PI), 1e-15));
        assert!(close(alpha0_nanoparticle(c(1e12), 1.0).unwrap(), c(4.0 * PI), 1e-10));
        assert!(alpha0_nanoparticle(c(-2.0), 1.0).is_err());
        // monotone in Re ε_e away from the pole
        let mut prev = f64::NEG_INFINITY;
        for i in 0..100 {
            let e = -1.99 + 0.1 * i as f64;
            let v = alpha0_nanoparticle(c(e), 1.0).unwrap().re;
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn bare_atom() {
        let a = alpha_bare_atom(0.0, 0.5, 2.0).unwrap();
        assert!(close(a, c(alpha0_two_level(0.5, 2.0) / 3.0), 1e-15));
        assert!((alpha0_two_level(1.0, 2.0) - 2.0 * alpha0_two_level(0.5, 2.0)).abs() < 1e-15);
        assert!(alpha_bare_atom(1e6, 0.5, 2.0).unwrap().re < 0.0);
        assert!(alpha_bare_atom(2.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn mg_medium_validation() {
        assert!(MaxwellGarnettMedium::new(1.0, c(3.0), 0.1).is_err());
        assert!(MaxwellGarnettMedium::new(1e6, c(1e-9), 0.2).is_err());
        let m = MaxwellGarnettMedium::new(2.0, c(0.05), 0.3).unwrap();
        assert!(close(lff_ll(m.eps()), m.lff(), 1e-15));
    }

    #[test]
    fn windowed_model() {
        let m = MaxwellGarnettMedium::new(2.0, C64::new(0.05, 0.01), 0.3).unwrap();
        let w = windowed_mg_susceptibility(&m);
        let k = c(1.0);
        let qc = exclusion_matched_cutoff(0.3);
        assert!(close(w.chi_perp(0.0, k), m.chi(), 1e-15));
        assert_eq!(w.chi_perp(0.0, k), w.chi_par(0.0, k));
        assert_eq!(w.chi_perp(10.0 * qc, k), m.rho_alpha());
        // beyond the window the longitudinal polarization propagator is free
        let x = m.rho_alpha();
        let chi = w.chi_par(10.0 * qc, k);
        let gvc = w.lff_par(10.0 * qc, k) / (c(1.0) + chi);
        assert!(close(gvc, c(1.0), 1e-15));
        assert!(close(x, w.rho_alpha(k), 0.0));
        let dilute = MgSusceptibility {
            alpha: Polarizability::Fixed(c(1e-12)),
            ..w
        };
        assert!(dilute.chi_perp(1.0, k).norm() < 1e-11);
    }

    #[test]
    fn exclusion_window_volume() {
        let xi = 0.2;
        let qc = exclusion_matched_cutoff(xi);
        let vq = qc.powi(3) / (6.0 * PI * PI);
        assert!((vq * 4.0 / 3.0 * PI * xi.powi(3) - 1.0).abs() < 1e-14);
    }
}
