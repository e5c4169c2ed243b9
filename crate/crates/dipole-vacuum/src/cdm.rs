//! Coupled-dipole simulation: hard-sphere configurations around an emitter,
//! dense solution of the mutually induced moments, and the ensemble average
//! of the scattering self-propagator at the emitter.

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::propagators::PhiFactors;
use crate::spectral::{c, dyadic_from_amplitudes, dyadic_zero, g0_realspace_amplitudes, Dyadic, Wavenumber, C64};

const MAX_REJECTIONS: u64 = 1_000_000;
const MAX_CONDITION: f64 = 1e12;
const MAX_RESIDUAL: f64 = 1e-10;

/// Point dipoles in an open cube, the emitter first and at the center.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleConfiguration {
    pub positions: Vec<[f64; 3]>,
    pub emitter_index: usize,
    pub xi: f64,
    pub box_side: f64,
    pub seed: u64,
}

impl DipoleConfiguration {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn min_pair_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                best = best.min(dist(a, b));
            }
        }
        best
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Random sequential addition of `n_dipoles` hard points (emitter included)
/// at density `rho` with minimum distance `xi`.
pub fn generate_configuration(rho: f64, xi: f64, n_dipoles: usize, seed: u64) -> Result<DipoleConfiguration> {
    if !(rho > 0.0) || !(xi >= 0.0) || n_dipoles == 0 {
        return domain("need rho > 0, xi >= 0 and at least one dipole");
    }
    let packing = rho * 4.0 * std::f64::consts::PI / 3.0 * (0.5 * xi).powi(3);
    if packing >= 0.3 {
        return domain(format!("packing fraction {packing} is beyond random sequential addition"));
    }
    let side = (n_dipoles as f64 / rho).cbrt();
    let cells = if xi > 0.0 { ((side / xi).floor() as usize).clamp(1, 256) } else { 1 };
    let cell_of = |x: f64| (((x / side + 0.5) * cells as f64) as usize).min(cells - 1);
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells * cells];
    let index = |p: &[f64; 3]| (cell_of(p[0]) * cells + cell_of(p[1])) * cells + cell_of(p[2]);

    let mut positions = Vec::with_capacity(n_dipoles);
    positions.push([0.0; 3]);
    grid[index(&[0.0; 3])].push(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejections = 0u64;
    while positions.len() < n_dipoles {
        let p = [
            (rng.random::<f64>() - 0.5) * side,
            (rng.random::<f64>() - 0.5) * side,
            (rng.random::<f64>() - 0.5) * side,
        ];
        let (cx, cy, cz) = (cell_of(p[0]), cell_of(p[1]), cell_of(p[2]));
        let near = |a: usize| a.saturating_sub(1)..=(a + 1).min(cells - 1);
        let mut clash = false;
        'scan: for x in near(cx) {
            for y in near(cy) {
                for z in near(cz) {
                    if grid[(x * cells + y) * cells + z].iter().any(|&j| dist(&positions[j], &p) < xi) {
                        clash = true;
                        break 'scan;
                    }
                }
            }
        }
        if clash {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(Error::DensityTooHigh {
                    rejections,
                    placed: positions.len(),
                    wanted: n_dipoles,
                });
            }
            continue;
        }
        grid[index(&p)].push(positions.len());
        positions.push(p);
    }
    Ok(DipoleConfiguration {
        positions,
        emitter_index: 0,
        xi,
        box_side: side,
        seed,
    })
}

fn coupling(a: &[f64; 3], b: &[f64; 3], k: f64) -> Dyadic {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let (ta, tb) = g0_realspace_amplitudes(r, k);
    dyadic_from_amplitudes(ta, tb, [d[0] / r, d[1] / r, d[2] / r])
}

/// LU-factored coupled-dipole system `p_i/α̃ + k² Σ_{j≠i} G⁰(R_i − R_j)·p_j = E_i`.
pub struct CoupledDipoleSolver {
    matrix: Mat<C64>,
    lu: PartialPivLu<C64>,
    /// Hager-Higham estimate of the 1-norm condition number.
    pub condition: f64,
    alpha_tilde: C64,
    k: Wavenumber,
}

impl CoupledDipoleSolver {
    pub fn new(cfg: &DipoleConfiguration, alpha_tilde: C64, k: Wavenumber) -> Result<Self> {
        if alpha_tilde.norm() == 0.0 || !alpha_tilde.is_finite() {
            return domain("polarizability must be finite and non-zero");
        }
        let n = cfg.len();
        let k2 = k.get() * k.get();
        let mut matrix = Mat::<C64>::zeros(3 * n, 3 * n);
        let inv = alpha_tilde.inv();
        for i in 0..n {
            for a in 0..3 {
                matrix[(3 * i + a, 3 * i + a)] = inv;
            }
            for j in i + 1..n {
                let g = coupling(&cfg.positions[i], &cfg.positions[j], k.get());
                for a in 0..3 {
                    for b in 0..3 {
                        let v = g[a][b] * k2;
                        matrix[(3 * i + a, 3 * j + b)] = v;
                        matrix[(3 * j + a, 3 * i + b)] = v;
                    }
                }
            }
        }
        let lu = matrix.partial_piv_lu();
        let mut s = Self {
            matrix,
            lu,
            condition: f64::INFINITY,
            alpha_tilde,
            k,
        };
        s.condition = s.condition_estimate();
        if !(s.condition <= MAX_CONDITION) {
            return Err(Error::ResonantCluster {
                condition: s.condition,
                residual: f64::NAN,
            });
        }
        Ok(s)
    }

    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn norm1(m: MatRef<'_, C64>) -> f64 {
        (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    // Hager's power iteration on ‖A⁻¹‖₁ with Higham's alternating test vector.
    fn condition_estimate(&self) -> f64 {
        let n = self.dim();
        let mut x = Mat::<C64>::from_fn(n, 1, |_, _| c(1.0 / n as f64));
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.lu.solve(&x);
            est = Self::norm1(y.as_ref());
            if !est.is_finite() {
                return f64::INFINITY;
            }
            let sgn = Mat::<C64>::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                if v.norm() == 0.0 {
                    c(1.0)
                } else {
                    v / v.norm()
                }
            });
            let z = self.lu.solve_adjoint(&sgn);
            let (j, zj) = (0..n).map(|i| (i, z[(i, 0)].norm())).fold((0, -1.0), |b, t| if t.1 > b.1 { t } else { b });
            let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zj <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = Mat::<C64>::zeros(n, 1);
            x[(j, 0)] = c(1.0);
        }
        let alt = Mat::<C64>::from_fn(n, 1, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            c(s * (1.0 + i as f64 / (n.max(2) - 1) as f64))
        });
        let y = self.lu.solve(&alt);
        let est = est.max(2.0 * Self::norm1(y.as_ref()) / (3.0 * n as f64));
        est * Self::norm1(self.matrix.as_ref())
    }

    fn solve_checked(&self, rhs: &Mat<C64>) -> Result<(Mat<C64>, f64)> {
        let x = self.lu.solve(rhs);
        let r = &self.matrix * &x - rhs;
        let residual = r.norm_l2() / rhs.norm_l2().max(1e-300);
        if !(residual < MAX_RESIDUAL) {
            return Err(Error::ResonantCluster {
                condition: self.condition,
                residual,
            });
        }
        Ok((x, residual))
    }

    /// Moments induced by the field `e0` applied at dipole `drive` only.
    pub fn response(&self, drive: usize, e0: [C64; 3]) -> Result<Vec<[C64; 3]>> {
        let n = self.dim() / 3;
        if drive >= n {
            return domain(format!("drive index {drive} out of range"));
        }
        let mut rhs = Mat::<C64>::zeros(3 * n, 1);
        for a in 0..3 {
            rhs[(3 * drive + a, 0)] = e0[a];
        }
        let (x, _) = self.solve_checked(&rhs)?;
        Ok((0..n).map(|i| [x[(3 * i, 0)], x[(3 * i + 1, 0)], x[(3 * i + 2, 0)]]).collect())
    }

    /// Scattering self-propagator at the emitter,
    /// `𝔤·e_c = (1/α̃) Σ_{i≠0} G⁰(R₀ − R_i)·p_i⁽ᶜ⁾`, with the residual of the
    /// three polarization solves.
    pub fn scattering_tensor(&self, cfg: &DipoleConfiguration) -> Result<(Dyadic, f64)> {
        let n = cfg.len();
        if 3 * n != self.dim() {
            return Err(Error::InternalConsistency("configuration does not match the factored system".into()));
        }
        let mut rhs = Mat::<C64>::zeros(3 * n, 3);
        for a in 0..3 {
            rhs[(a, a)] = c(1.0);
        }
        let (x, residual) = self.solve_checked(&rhs)?;
        let moments: [Vec<[C64; 3]>; 3] = std::array::from_fn(|col| {
            (0..n).map(|i| [x[(3 * i, col)], x[(3 * i + 1, col)], x[(3 * i + 2, col)]]).collect()
        });
        Ok((scattering_tensor_from_moments(cfg, &moments, self.alpha_tilde, self.k), residual))
    }
}

/// Moments for a uniform field `e0` acting on the emitter only.
pub fn solve_coupled_dipoles(cfg: &DipoleConfiguration, alpha_tilde: C64, k: Wavenumber, e0: [C64; 3]) -> Result<Vec<[C64; 3]>> {
    if cfg.len() == 1 {
        return Ok(vec![e0.map(|e| e * alpha_tilde)]);
    }
    CoupledDipoleSolver::new(cfg, alpha_tilde, k)?.response(cfg.emitter_index, e0)
}

/// Assemble `𝔤` column by column from the moments driven by `x̂, ŷ, ẑ`.
pub fn scattering_tensor_from_moments(cfg: &DipoleConfiguration, moments: &[Vec<[C64; 3]>; 3], alpha_tilde: C64, k: Wavenumber) -> Dyadic {
    let mut g = dyadic_zero();
    let r0 = cfg.positions[cfg.emitter_index];
    for (i, ri) in cfg.positions.iter().enumerate() {
        if i == cfg.emitter_index {
            continue;
        }
        let gi = coupling(&r0, ri, k.get());
        for (col, m) in moments.iter().enumerate() {
            let p = m[i];
            for a in 0..3 {
                g[a][col] += (gi[a][0] * p[0] + gi[a][1] * p[1] + gi[a][2] * p[2]) / alpha_tilde;
            }
        }
    }
    g
}

/// Scattering self-propagator of one configuration.
pub fn self_propagator_scattering(cfg: &DipoleConfiguration, alpha_tilde: C64, k: Wavenumber) -> Result<Dyadic> {
    if cfg.len() == 1 {
        return Ok(dyadic_zero());
    }
    Ok(CoupledDipoleSolver::new(cfg, alpha_tilde, k)?.scattering_tensor(cfg)?.0)
}

/// Two dipoles a distance `r` apart: emitter moments and `𝔤` components
/// transverse and parallel to the pair axis, summed to all orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBody {
    pub p0_perp: C64,
    pub p0_par: C64,
    pub g_perp: C64,
    pub g_par: C64,
}

pub fn two_body(r: f64, alpha_tilde: C64, k: Wavenumber) -> Result<TwoBody> {
    if !(r > 0.0) {
        return domain("separation must be positive");
    }
    let k2 = k.get() * k.get();
    let (a, b) = g0_realspace_amplitudes(r, k.get());
    let series = |amp: C64| {
        let loop_gain = (alpha_tilde * amp * k2).powi(2);
        let p0 = alpha_tilde / (c(1.0) - loop_gain);
        (p0, -amp * amp * p0 * k2)
    };
    let (p0_perp, g_perp) = series(a);
    let (p0_par, g_par) = series(b);
    Ok(TwoBody {
        p0_perp,
        p0_par,
        g_perp,
        g_par,
    })
}

/// Physical parameters of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    pub rho: f64,
    pub xi: f64,
    pub n_dipoles: usize,
    pub alpha_tilde: C64,
    pub k: Wavenumber,
}

/// Per-configuration outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRecord {
    pub index: usize,
    pub seed: u64,
    pub n_dipoles: usize,
    /// `tr 𝔤 / 3`, absent when the configuration failed.
    pub trace: Option<C64>,
    pub residual: f64,
    pub condition: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub mean: Dyadic,
    pub stderr: [[f64; 3]; 3],
    /// `tr⟨𝔤⟩ / 3`
    pub trace: C64,
    pub trace_stderr: f64,
    pub n_configs: usize,
    pub n_failed: usize,
    pub n_dipoles: usize,
    pub params: EnsembleParams,
    pub records: Vec<ConfigRecord>,
}

// Pairwise sum in index order.
fn pairwise<T: Copy + std::ops::Add<Output = T>>(v: &[T], zero: T) -> T {
    match v.len() {
        0 => zero,
        1 => v[0],
        n => pairwise(&v[..n / 2], zero) + pairwise(&v[n / 2..], zero),
    }
}

fn mean_stderr(v: &[C64]) -> (C64, f64) {
    let n = v.len() as f64;
    let m = pairwise(v, c(0.0)) / n;
    let dev: Vec<f64> = v.iter().map(|z| (z - m).norm_sqr()).collect();
    let var = pairwise(&dev, 0.0) / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

fn run_one(params: &EnsembleParams, index: usize, seed: u64) -> (ConfigRecord, Option<Dyadic>) {
    let mut rec = ConfigRecord {
        index,
        seed,
        n_dipoles: params.n_dipoles,
        trace: None,
        residual: f64::NAN,
        condition: f64::NAN,
        error: None,
    };
    let out = generate_configuration(params.rho, params.xi, params.n_dipoles, seed).and_then(|cfg| {
        if cfg.len() == 1 {
            return Ok((dyadic_zero(), 0.0, 1.0));
        }
        let s = CoupledDipoleSolver::new(&cfg, params.alpha_tilde, params.k)?;
        let (g, residual) = s.scattering_tensor(&cfg)?;
        Ok((g, residual, s.condition))
    });
    match out {
        Ok((g, residual, condition)) => {
            rec.trace = Some((g[0][0] + g[1][1] + g[2][2]) / 3.0);
            rec.residual = residual;
            rec.condition = condition;
            (rec, Some(g))
        }
        Err(e) => {
            log::warn!("configuration {index} (seed {seed}) failed: {e}");
            rec.error = Some(e.to_string());
            (rec, None)
        }
    }
}

/// Ensemble mean of the scattering self-propagator over `n_configs`
/// configurations seeded `base_seed + index`. `threads = None` uses the
/// global pool; the result does not depend on the thread count.
pub fn ensemble_average(params: &EnsembleParams, n_configs: usize, base_seed: u64, threads: Option<usize>) -> Result<EnsembleEstimate> {
    if n_configs < 2 {
        return domain("need at least two configurations");
    }
    let work = || -> Vec<(ConfigRecord, Option<Dyadic>)> {
        (0..n_configs)
            .into_par_iter()
            .map(|i| run_one(params, i, base_seed.wrapping_add(i as u64)))
            .collect()
    };
    let results = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InternalConsistency(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let tensors: Vec<Dyadic> = results.iter().filter_map(|(_, g)| *g).collect();
    let failed = n_configs - tensors.len();
    if failed as f64 > 0.05 * n_configs as f64 || tensors.len() < 2 {
        return Err(Error::EnsembleQuality {
            failed,
            total: n_configs,
        });
    }
    let mut mean = dyadic_zero();
    let mut stderr = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let v: Vec<C64> = tensors.iter().map(|g| g[a][b]).collect();
            (mean[a][b], stderr[a][b]) = mean_stderr(&v);
        }
    }
    let traces: Vec<C64> = tensors.iter().map(|g| (g[0][0] + g[1][1] + g[2][2]) / 3.0).collect();
    let (trace, trace_stderr) = mean_stderr(&traces);
    Ok(EnsembleEstimate {
        mean,
        stderr,
        trace,
        trace_stderr,
        n_configs: tensors.len(),
        n_failed: failed,
        n_dipoles: params.n_dipoles,
        params: *params,
        records: results.into_iter().map(|(r, _)| r).collect(),
    })
}

/// Comparison of an ensemble with the analytic `(2φ⊥^sc + φ∥^sc)/3`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub analytic: C64,
    pub estimate: C64,
    pub estimate_stderr: f64,
    pub z_scores: [[f64; 3]; 3],
    pub relative_deviation: f64,
    /// Accepted absolute deviation, `max(rel_tol·|analytic|, 3·stderr)`.
    pub tolerance: f64,
    pub pass: bool,
}

/// `analytic` carries the density, exclusion radius and polarizability the
/// φ-factors were computed with.
pub fn validate_against_analytic(est: &EnsembleEstimate, phi: &PhiFactors, analytic: &EnsembleParams, rel_tol: f64) -> Result<ValidationReport> {
    let p = &est.params;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300);
    if !close(p.xi, analytic.xi) {
        return Err(Error::ComparisonInvalid(format!("exclusion radius {} vs {}", p.xi, analytic.xi)));
    }
    if !close(p.rho, analytic.rho) {
        return Err(Error::ComparisonInvalid(format!("density {} vs {}", p.rho, analytic.rho)));
    }
    if !close(p.k.get(), analytic.k.get()) || (phi.k - c(p.k.get())).norm() > 1e-9 * p.k.get() {
        return Err(Error::ComparisonInvalid(format!("wavenumber {} vs {}", p.k.get(), phi.k)));
    }
    if (p.alpha_tilde - analytic.alpha_tilde).norm() > 1e-9 * p.alpha_tilde.norm() {
        return Err(Error::ComparisonInvalid("polarizabilities differ".into()));
    }
    let target = phi.scattering_sum() / 3.0;
    let mut z = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let want = if a == b { target } else { c(0.0) };
            let d = (est.mean[a][b] - want).norm();
            z[a][b] = if d == 0.0 { 0.0 } else { d / est.stderr[a][b] };
        }
    }
    let dev = (est.trace - target).norm();
    let tolerance = (rel_tol * target.norm()).max(3.0 * est.trace_stderr);
    Ok(ValidationReport {
        analytic: target,
        estimate: est.trace,
        estimate_stderr: est.trace_stderr,
        z_scores: z,
        relative_deviation: dev / target.norm(),
        tolerance,
        pass: dev <= tolerance,
    })
}
