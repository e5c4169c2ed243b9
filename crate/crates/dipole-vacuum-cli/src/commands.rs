//! Subcommand drivers. Each returns its tables; writing is left to `main`.

use std::f64::consts::PI;

use dipole_vacuum::cdm::{ensemble_average, validate_against_analytic, EnsembleParams, ValidationReport};
use dipole_vacuum::emission::{
    emission_decomposition, free_ldos, ldos_coherent_mg, ldos_coherent_mg_quadrature, ldos_emission_mg,
    ldos_emission_mg_quadrature, ldos_report,
};
use dipole_vacuum::medium::{
    exclusion_matched_cutoff, LorentzianDielectric, MaxwellGarnettMedium, MgSusceptibility, Polarizability,
    SusceptibilityModel, Vacuum,
};
use dipole_vacuum::propagators::{dyson_perp, gvc_with, kernel_xi, phi_factors, GvcPath, PhiFactors};
use dipole_vacuum::renorm::{
    free_space_alpha, free_space_width, renormalize_alpha, self_consistent_medium, solve_kres, KresOptions,
    SelfConsistencyOptions,
};
use dipole_vacuum::spectral::{phi0_perp, QuadratureSpec, Wavenumber, SPEED_OF_LIGHT};
use dipole_vacuum::vacuum::vacuum_energy_report;
use dipole_vacuum::{Error, C64};
use rayon::prelude::*;

use crate::config::{ModelKind, RunConfig};
use crate::output::{num, Table};

/// A library failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub source: Error,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.source)
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> Stage<T> for dipole_vacuum::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|source| Failure { stage, source })
    }
}

pub fn spec(cfg: &RunConfig) -> QuadratureSpec {
    let q = &cfg.quadrature;
    QuadratureSpec {
        q_max: q.q_max.unwrap_or(f64::INFINITY),
        eta: q.eta,
        rel_tol: q.rel_tol,
        richardson: q.richardson,
        ..QuadratureSpec::default()
    }
}

/// Clausius-Mossotti `ρα̃` of a lossless index.
fn rho_alpha_of_index(n: f64) -> f64 {
    let e = n * n;
    3.0 * (e - 1.0) / (e + 2.0)
}

fn model_at(cfg: &RunConfig, k: Wavenumber) -> Result<Box<dyn SusceptibilityModel>, Failure> {
    let m = &cfg.medium;
    if m.model == ModelKind::Vacuum || (m.rho == 0.0 && m.n.is_none()) {
        return Ok(Box::new(Vacuum));
    }
    let alpha = match m.n {
        Some(n) => C64::new(rho_alpha_of_index(n) / m.rho, 0.0),
        None => free_space_alpha(C64::new(m.alpha0, 0.0), k).stage("medium")?,
    };
    let window = match m.model {
        ModelKind::WindowedMg => Some(m.q_c.unwrap_or_else(|| exclusion_matched_cutoff(m.xi))),
        _ => None,
    };
    Ok(Box::new(MgSusceptibility {
        rho: m.rho,
        alpha: Polarizability::Fixed(alpha),
        xi: m.xi,
        window,
    }))
}

fn wavenumbers(cfg: &RunConfig) -> Result<Vec<Wavenumber>, Failure> {
    cfg.grid.values().into_iter().map(|k| Wavenumber::new(k).stage("grid")).collect()
}

fn omega_si(cfg: &RunConfig, k: f64) -> f64 {
    k * SPEED_OF_LIGHT / cfg.units.length_m
}

fn with_si(cfg: &RunConfig, mut cols: Vec<&'static str>) -> Vec<&'static str> {
    if cfg.units.si {
        cols.insert(1, "omega_rad_s");
    }
    cols
}

fn row_with_si(cfg: &RunConfig, k: f64, rest: Vec<String>) -> Vec<String> {
    let mut r = vec![num(k)];
    if cfg.units.si {
        r.push(num(omega_si(cfg, k)));
    }
    r.extend(rest);
    r
}

pub fn run_ldos(cfg: &RunConfig) -> Result<Table, Failure> {
    let s = spec(cfg);
    let rows: Vec<Result<Vec<String>, Failure>> = wavenumbers(cfg)?
        .into_par_iter()
        .map(|k| {
            let model = model_at(cfg, k)?;
            let r = ldos_report(model.as_ref(), k, &s).stage("emission")?;
            let (l, e, c) = r.normalized();
            Ok(row_with_si(
                cfg,
                k.get(),
                vec![num(r.n_free), num(r.n_light), num(r.n_emis), num(r.n_coh), num(l), num(e), num(c)],
            ))
        })
        .collect();
    let mut t = Table::new(with_si(
        cfg,
        vec!["k", "n_free", "n_light", "n_emis", "n_coh", "n_light_rel", "n_emis_rel", "n_coh_rel"],
    ));
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

pub fn run_emission(cfg: &RunConfig) -> Result<Table, Failure> {
    let s = spec(cfg);
    let ks = wavenumbers(cfg)?;
    if let Some(n) = cfg.medium.n {
        let m = MaxwellGarnettMedium::new(cfg.medium.rho, C64::new(rho_alpha_of_index(n) / cfg.medium.rho, 0.0), cfg.medium.xi)
            .stage("medium")?;
        let rows: Vec<Result<Vec<String>, Failure>> = ks
            .into_par_iter()
            .map(|k| {
                let f = free_ldos(k);
                Ok(row_with_si(
                    cfg,
                    k.get(),
                    vec![
                        num(n),
                        num(ldos_emission_mg(&m, k) / f),
                        num(ldos_emission_mg_quadrature(&m, k, &s).stage("emission")? / f),
                        num(ldos_coherent_mg(&m, k) / f),
                        num(ldos_coherent_mg_quadrature(&m, k, &s).stage("emission")? / f),
                    ],
                ))
            })
            .collect();
        let mut t = Table::new(with_si(
            cfg,
            vec!["k", "n", "n_emis_rel", "n_emis_quad_rel", "n_coh_rel", "n_coh_quad_rel"],
        ));
        for r in rows {
            t.push(r?);
        }
        return Ok(t);
    }
    let rows: Vec<Result<Vec<String>, Failure>> = ks
        .into_par_iter()
        .map(|k| {
            let model = model_at(cfg, k)?;
            let b = emission_decomposition(model.as_ref(), k, &s).stage("emission")?;
            Ok(row_with_si(
                cfg,
                k.get(),
                [b.w_total, b.w_coh_perp, b.w_ext_perp, b.w_coh_par, b.w_ext_par, b.w_direct, b.w_indirect]
                    .into_iter()
                    .map(num)
                    .collect(),
            ))
        })
        .collect();
    let mut t = Table::new(with_si(
        cfg,
        vec!["k", "w_total", "w_coh_perp", "w_ext_perp", "w_coh_par", "w_ext_par", "w_direct", "w_indirect"],
    ));
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

pub fn run_renorm(cfg: &RunConfig) -> Result<Table, Failure> {
    let r = &cfg.renorm;
    let k = Wavenumber::new(r.k0).stage("renorm")?;
    let opts = SelfConsistencyOptions {
        spec: spec(cfg),
        window: cfg.medium.q_c,
        ..SelfConsistencyOptions::default()
    };
    let gamma0 = free_space_width(r.alpha0, r.k0);
    let rows: Vec<Result<Vec<String>, Failure>> = r
        .rho
        .par_iter()
        .map(|&rho| {
            let m = self_consistent_medium(rho, C64::new(r.alpha0, 0.0), k, r.xi, &opts).stage("renorm")?;
            let p = &m.polarizability;
            Ok(vec![
                num(rho),
                num(p.alpha_tilde.re),
                num(p.alpha_tilde.im),
                num(p.gamma),
                num(gamma0),
                num(p.gamma / gamma0),
                p.iterations.to_string(),
            ])
        })
        .collect();
    let mut t = Table::new(vec!["rho", "alpha_tilde_re", "alpha_tilde_im", "gamma", "gamma0", "gamma_rel", "iterations"]);
    for row in rows {
        t.push(row?);
    }
    Ok(t)
}

pub fn run_vacuum_energy(cfg: &RunConfig) -> Result<Table, Failure> {
    let v = &cfg.vacuum;
    let omega_max = v.omega_max.unwrap_or(100.0 * v.omega_res);
    let rows: Vec<Result<Vec<String>, Failure>> = v
        .f
        .par_iter()
        .map(|&f| {
            let d = LorentzianDielectric::new(f, v.omega_res, v.gamma).stage("vacuum-energy")?;
            let r = vacuum_energy_report(&d, v.rho, omega_max).stage("vacuum-energy")?;
            let (l, m) = (r.f_lff_mg, r.delta_f_mg);
            let dev = |e: &dipole_vacuum::vacuum::LffEnergy| if e.estimate == 0.0 { 0.0 } else { e.relative_deviation() };
            Ok(vec![
                num(f),
                num(l.numeric),
                num(l.magnitude),
                num(l.estimate),
                num(dev(&l)),
                num(m.numeric),
                num(m.magnitude),
                num(m.estimate),
                num(dev(&m)),
                num(r.f_sch_bulk),
                r.f_sch_bulk_converged.to_string(),
            ])
        })
        .collect();
    let mut t = Table::new(vec![
        "f",
        "f_lff_numeric",
        "f_lff_magnitude",
        "f_lff_estimate",
        "f_lff_rel_dev",
        "delta_f_numeric",
        "delta_f_magnitude",
        "delta_f_estimate",
        "delta_f_rel_dev",
        "f_sch_bulk",
        "f_sch_bulk_converged",
    ]);
    for row in rows {
        t.push(row?);
    }
    Ok(t)
}

pub struct CdmOutcome {
    pub summary: Table,
    pub records: Vec<String>,
    pub report: ValidationReport,
}

pub fn run_cdm_validate(cfg: &RunConfig) -> Result<CdmOutcome, Failure> {
    let c = &cfg.cdm;
    let k = Wavenumber::new(c.k).stage("cdm")?;
    let alpha = free_space_alpha(C64::new(c.alpha0, 0.0), k).stage("cdm")?;
    let params = EnsembleParams {
        rho: c.rho,
        xi: c.xi,
        n_dipoles: c.n_dipoles,
        alpha_tilde: alpha,
        k,
    };
    let threads = (c.threads > 0).then_some(c.threads);
    let est = ensemble_average(&params, c.n_configs, c.base_seed, threads).stage("cdm")?;
    let model = MgSusceptibility {
        rho: c.rho,
        alpha: Polarizability::Fixed(alpha),
        xi: c.xi,
        window: Some(c.q_c.unwrap_or_else(|| exclusion_matched_cutoff(c.xi))),
    };
    let phi = phi_factors(&model, k, &spec(cfg)).stage("propagators")?;
    let report = validate_against_analytic(&est, &phi, &params, c.rel_tol).stage("cdm")?;
    let records = est
        .records
        .iter()
        .map(|r| {
            serde_json::json!({
                "index": r.index,
                "seed": r.seed,
                "n_dipoles": r.n_dipoles,
                "trace_re": r.trace.map(|t| t.re),
                "trace_im": r.trace.map(|t| t.im),
                "residual": r.residual.is_finite().then_some(r.residual),
                "condition": r.condition.is_finite().then_some(r.condition),
                "error": r.error,
            })
            .to_string()
        })
        .collect();
    let mut summary = Table::new(vec![
        "k",
        "n_dipoles",
        "n_configs",
        "n_failed",
        "trace_re",
        "trace_im",
        "trace_stderr",
        "analytic_re",
        "analytic_im",
        "rel_dev",
        "tolerance",
        "pass",
    ]);
    summary.push(vec![
        num(c.k),
        c.n_dipoles.to_string(),
        est.n_configs.to_string(),
        est.n_failed.to_string(),
        num(report.estimate.re),
        num(report.estimate.im),
        num(report.estimate_stderr),
        num(report.analytic.re),
        num(report.analytic.im),
        num(report.relative_deviation),
        num(report.tolerance),
        report.pass.to_string(),
    ]);
    Ok(CdmOutcome {
        summary,
        records,
        report,
    })
}

/// One line of `selftest` output.
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

// Low-discrepancy points in [0, 1).
fn weyl(i: usize, d: usize) -> f64 {
    const A: [f64; 6] = [0.618_033_988_749_894_9, 0.414_213_562_373_095_1, 0.732_050_807_568_877_2, 0.236_067_977_499_79, 0.645_751_311_064_590_6, 0.316_624_790_355_4];
    ((i as f64 + 0.5) * A[d % 6]).fract()
}

fn sampled_identities(samples: usize) -> Result<f64, Error> {
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let k = 0.1 + 2.9 * weyl(i, 1);
        let q = 3.0 * k * weyl(i, 0);
        let x = C64::new(0.05 + 0.9 * weyl(i, 2), 0.4 * weyl(i, 3));
        let alpha = x / 10.0;
        let m = MgSusceptibility {
            rho: 10.0,
            alpha: Polarizability::Fixed(alpha),
            xi: 0.2,
            window: Some(2.0 + 3.0 * weyl(i, 4)),
        };
        let kc = C64::new(k, 1e-3 * k);
        let k2 = kc * kc;
        let (a, b) = gvc_with(q, kc, &m, GvcPath::LocalField)?;
        for path in [GvcPath::DysonRatio, GvcPath::TMatrix] {
            let (c, d) = gvc_with(q, kc, &m, path)?;
            worst = worst.max((c - a).norm() / a.norm()).max((d - b).norm() / b.norm());
        }
        let g = dyson_perp(q, kc, &m)?;
        let g0 = (k2 - q * q).inv();
        let cp = m.chi_perp(q, kc);
        worst = worst.max((g0 - g0 * k2 * cp * g - g).norm() / g.norm());
        let (xp, _) = kernel_xi(q, kc, &m)?;
        let back = x / (C64::new(1.0, 0.0) - g0 * (xp + k2 * x));
        worst = worst.max((back - cp).norm() / cp.norm());
    }
    Ok(worst)
}

fn free_phi(k: f64) -> PhiFactors {
    PhiFactors {
        phi0_perp: phi0_perp(C64::new(k, 0.0)),
        phi_sc_perp: C64::new(0.0, 0.0),
        phi_sc_par: C64::new(0.0, 0.0),
        k: C64::new(k, 0.0),
        provenance: dipole_vacuum::propagators::PhiProvenance {
            path: dipole_vacuum::propagators::PhiPath::ClosedForm("free space"),
            cutoff_sensitive: false,
        },
    }
}

pub fn selftest() -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |name, r: Result<(bool, String), Error>| match r {
        Ok((pass, detail)) => out.push(Check { name, pass, detail }),
        Err(e) => out.push(Check {
            name,
            pass: false,
            detail: e.to_string(),
        }),
    };
    push(
        "propagator identities",
        sampled_identities(1000).map(|w| (w < 1e-12, format!("max relative residual {w:e}"))),
    );
    push("free-space optical theorem", (|| {
        let mut worst: f64 = 0.0;
        for i in 0..200 {
            let k = 0.05 + 5.0 * weyl(i, 0);
            let a0 = 1e-3 + 50.0 * weyl(i, 1);
            let t = renormalize_alpha(C64::new(a0, 0.0), &free_phi(k))?;
            let want = k.powi(3) / (6.0 * PI) * t.norm_sqr();
            worst = worst.max((t.im - want).abs() / want);
        }
        Ok((worst < 1e-12, format!("max relative residual {worst:e}")))
    })());
    push("free-space resonance", (|| {
        let r = solve_kres(0.01, 1.3, |k| Ok(free_phi(k.get())), &KresOptions::default())?;
        let g0 = free_space_width(0.01, 1.3);
        Ok((r.k_res == 1.3 && r.gamma == g0, format!("k_res {} gamma {:e} (expected {:e})", r.k_res, r.gamma, g0)))
    })());
    push("lossless Maxwell-Garnett emission", (|| {
        let spec = QuadratureSpec::default();
        let k = Wavenumber::new(1.0)?;
        let mut worst: f64 = 0.0;
        for n in [1.0, 1.33, 1.5, 2.0] {
            let m = MaxwellGarnettMedium::new(10.0, C64::new(rho_alpha_of_index(n) / 10.0, 0.0), 0.2)?;
            let closed = ldos_emission_mg(&m, k);
            let quad = ldos_emission_mg_quadrature(&m, k, &spec)?;
            worst = worst.max((closed - quad).abs() / closed);
            let poly = (n.powi(5) + 4.0 * n.powi(3) + 4.0 * n) / 9.0;
            worst = worst.max((closed / free_ldos(k) - poly).abs() / poly);
        }
        Ok((worst < 1e-6, format!("max relative deviation {worst:e}")))
    })());
    push("vacuum light LDOS", (|| {
        let k = Wavenumber::new(0.7)?;
        let r = ldos_report(&Vacuum, k, &QuadratureSpec::default())?;
        let (l, _, _) = r.normalized();
        Ok(((l - 1.0).abs() < 1e-9, format!("n_light/n_free = {l}")))
    })());
    out
}
