//! Local densities of states and the split of emitted power into coherent,
//! extinguished, direct and indirect parts.
//!
//! LDOS values are in units where the free-space value is `k²/π²`;
//! breakdown powers are ratios to the free-space emitted power.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::medium::{lff_ll, lff_ob, MaxwellGarnettMedium, SusceptibilityModel};
use crate::propagators::{par_integral, phi_factors, phi_par_mg_longwave, transverse_poles, DispersionRoots, PhiFactors};
use crate::spectral::{c, radial_integral, ComplexPermittivitySqrt, QuadratureSpec, Wavenumber, C64};

/// Free-space LDOS `ω²/π²c³`.
pub fn free_ldos(k: Wavenumber) -> f64 {
    k.get().powi(2) / (PI * PI)
}

fn im_perp_integral<F>(model: &dyn SusceptibilityModel, k: Wavenumber, spec: &QuadratureSpec, f: F) -> Result<f64>
where
    F: Fn(f64, C64) -> f64,
{
    let poles = transverse_poles(model, c(k.get()));
    let (v, _) = radial_integral(|q, kc| c(f(q, kc)), spec, k, &poles)?;
    Ok(v.re)
}

fn g_perp(model: &dyn SusceptibilityModel, q: f64, kc: C64) -> C64 {
    (kc * kc * (c(1.0) + model.chi_perp(q, kc)) - q * q).inv()
}

fn g_par(model: &dyn SusceptibilityModel, q: f64, k: C64) -> C64 {
    (k * k * (c(1.0) + model.chi_par(q, k))).inv()
}

/// LDOS of externally excitable (transverse) modes, `−(4k/π) Im∫G⊥`.
pub fn ldos_light(model: &dyn SusceptibilityModel, k: Wavenumber, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate(k)?;
    let im = im_perp_integral(model, k, spec, |q, kc| g_perp(model, q, kc).im)?;
    Ok(-4.0 * k.get() / PI * im)
}

/// Emission LDOS `−(2k/π) Im{2φ⊥⁽⁰⁾ + 2φ⊥^sc + φ∥^sc}`.
pub fn ldos_emission(phi: &PhiFactors) -> f64 {
    -2.0 * phi.k.re / PI * phi.self_energy_sum().im
}

/// Emitted power split by channel and by coherence, relative to free space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionBreakdown {
    pub w_coh_perp: f64,
    pub w_ext_perp: f64,
    pub w_coh_par: f64,
    pub w_ext_par: f64,
    pub w_direct: f64,
    pub w_indirect: f64,
    /// From the self-energy sum, independently of the four parts.
    pub w_total: f64,
    pub k: f64,
}

impl EmissionBreakdown {
    pub fn w_coherent(&self) -> f64 {
        self.w_coh_perp + self.w_coh_par
    }

    pub fn sum_of_parts(&self) -> f64 {
        self.w_coh_perp + self.w_ext_perp + self.w_coh_par + self.w_ext_par
    }
}

/// Coherent parts weight `Im G` by `Re{χ/ρα̃}`, extinguished parts weight
/// `Re G` by `Im{χ/ρα̃}`. The longitudinal channel is integrated over the
/// model's window, beyond which its polarization propagator is free.
pub fn emission_decomposition(
    model: &dyn SusceptibilityModel,
    k: Wavenumber,
    spec: &QuadratureSpec,
) -> Result<EmissionBreakdown> {
    spec.validate(k)?;
    let kr = c(k.get());
    if model.rho_alpha(kr) == c(0.0) {
        return Err(Error::EmptyMedium);
    }
    let phi = phi_factors(model, k, spec)?;
    let pre = -2.0 * k.get() / PI / free_ldos(k);

    let coh_p = im_perp_integral(model, k, spec, |q, kc| {
        model.lff_perp(q, kc).re * g_perp(model, q, kc).im
    })?;
    let ext_p = im_perp_integral(model, k, spec, |q, kc| {
        let l = model.lff_perp(q, kc);
        if l.im == 0.0 {
            0.0
        } else {
            l.im * g_perp(model, q, kc).re
        }
    })?;
    let dir_p = im_perp_integral(model, k, spec, |q, kc| g_perp(model, q, kc).im)?;
    let (coh_l, _, _) = par_integral(model, kr, spec, |q| c(model.lff_par(q, kr).re * g_par(model, q, kr).im))?;
    let (ext_l, _, _) = par_integral(model, kr, spec, |q| c(model.lff_par(q, kr).im * g_par(model, q, kr).re))?;
    let (dir_l, _, _) = par_integral(model, kr, spec, |q| c(g_par(model, q, kr).im))?;

    let b = EmissionBreakdown {
        w_coh_perp: pre * 2.0 * coh_p,
        w_ext_perp: pre * 2.0 * ext_p,
        w_coh_par: pre * coh_l.re,
        w_ext_par: pre * ext_l.re,
        w_direct: pre * (2.0 * dir_p + dir_l.re),
        w_indirect: 0.0,
        w_total: ldos_emission(&phi) / free_ldos(k),
        k: k.get(),
    };
    let b = EmissionBreakdown {
        w_indirect: b.w_coherent() - b.w_direct,
        ..b
    };
    let mismatch = (b.w_total - b.sum_of_parts()).abs();
    if mismatch > 1e-6 * b.w_total.abs().max(1e-12) {
        return Err(Error::InternalConsistency(format!(
            "emission parts sum to {} but the total is {}",
            b.sum_of_parts(),
            b.w_total
        )));
    }
    Ok(b)
}

/// Coherent LDOS of a Maxwell-Garnett medium at long wavelength,
/// `(k²/π²) Re{L_LL} Re{√ε}`.
pub fn ldos_coherent_mg(m: &MaxwellGarnettMedium, k: Wavenumber) -> f64 {
    let eps = m.eps();
    free_ldos(k) * lff_ll(eps).re * ComplexPermittivitySqrt::new(eps).n()
}

/// As [`ldos_coherent_mg`] with the Onsager-Böttcher factor.
pub fn ldos_coherent_ob(m: &MaxwellGarnettMedium, k: Wavenumber) -> Result<f64> {
    let eps = m.eps();
    Ok(free_ldos(k) * lff_ob(eps)?.re * ComplexPermittivitySqrt::new(eps).n())
}

// Im∫G⊥^eff; the real part needs a cutoff and is not used.
fn effective_transverse_im(eps: C64, k: Wavenumber, spec: &QuadratureSpec) -> Result<f64> {
    let n = ComplexPermittivitySqrt::new(eps).n();
    let (v, _) = radial_integral(|q, kc| c((eps * kc * kc - q * q).inv().im), spec, k, &[n * k.get()])?;
    Ok(v.re)
}

/// Quadrature of `−(4k/π)∫Re{L} Im G⊥^eff`.
pub fn ldos_coherent_mg_quadrature(m: &MaxwellGarnettMedium, k: Wavenumber, spec: &QuadratureSpec) -> Result<f64> {
    let eps = m.eps();
    let l = lff_ll(eps).re;
    Ok(-4.0 * k.get() / PI * l * effective_transverse_im(eps, k, spec)?)
}

/// Long-wavelength emission LDOS of a Maxwell-Garnett medium,
/// `−(2k/π) Im{2L(−i√ε k/4π) + φ∥^MG}`.
pub fn ldos_emission_mg(m: &MaxwellGarnettMedium, k: Wavenumber) -> f64 {
    let eps = m.eps();
    let l = lff_ll(eps);
    let n = ComplexPermittivitySqrt::new(eps).sqrt_eps;
    let perp = l * 2.0 * (C64::new(0.0, -1.0) * n * k.get() / (4.0 * PI));
    -2.0 * k.get() / PI * (perp + phi_par_mg_longwave(m, k)).im
}

/// Quadrature route for [`ldos_emission_mg`]: `−(2k/π) Im{2L²∫G⊥^eff}`,
/// for real ε.
pub fn ldos_emission_mg_quadrature(m: &MaxwellGarnettMedium, k: Wavenumber, spec: &QuadratureSpec) -> Result<f64> {
    let eps = m.eps();
    if eps.im != 0.0 {
        return domain("quadrature route needs a lossless medium");
    }
    let l = lff_ll(eps).re;
    Ok(-2.0 * k.get() / PI * 2.0 * l * l * effective_transverse_im(eps, k, spec)?)
}

/// Residues `Z = Re{χ/ρα̃}` at each normal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Residues {
    pub perp: Vec<f64>,
    pub par: Vec<f64>,
}

pub fn renormalization_residues(model: &dyn SusceptibilityModel, k: Wavenumber, roots: &DispersionRoots) -> Residues {
    let kc = c(k.get());
    Residues {
        perp: roots.k_nor_perp.iter().map(|q| model.lff_perp(q.norm(), kc).re).collect(),
        par: roots.k_nor_par.iter().map(|q| model.lff_par(q.norm(), kc).re).collect(),
    }
}

/// Coherent power surviving to radius `r_prime`: `W exp(−2κkr′)`.
pub fn beer_lambert_farfield(w_coh_perp: f64, n: f64, kappa: f64, k: Wavenumber, r_prime: f64) -> Result<f64> {
    if !(r_prime > 0.0) || !(kappa >= 0.0) || !(n >= 0.0) {
        return domain("need r' > 0, kappa >= 0 and n >= 0");
    }
    Ok(w_coh_perp * (-2.0 * kappa * k.get() * r_prime).exp())
}

/// LDOS summary at one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdosReport {
    pub k: f64,
    pub n_free: f64,
    pub n_light: f64,
    pub n_emis: f64,
    pub n_coh: f64,
    pub breakdown: Option<EmissionBreakdown>,
}

impl LdosReport {
    pub fn normalized(&self) -> (f64, f64, f64) {
        (self.n_light / self.n_free, self.n_emis / self.n_free, self.n_coh / self.n_free)
    }
}

pub fn ldos_report(model: &dyn SusceptibilityModel, k: Wavenumber, spec: &QuadratureSpec) -> Result<LdosReport> {
    let n_free = free_ldos(k);
    let n_light = ldos_light(model, k, spec)?;
    if model.rho_alpha(c(k.get())) == c(0.0) {
        return Ok(LdosReport {
            k: k.get(),
            n_free,
            n_light,
            n_emis: ldos_emission(&phi_factors(model, k, spec)?),
            n_coh: n_light,
            breakdown: None,
        });
    }
    let b = emission_decomposition(model, k, spec)?;
    Ok(LdosReport {
        k: k.get(),
        n_free,
        n_light,
        n_emis: b.w_total * n_free,
        n_coh: b.w_coherent() * n_free,
        breakdown: Some(b),
    })
}
