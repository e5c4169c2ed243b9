//! Numerical integration engines: globally adaptive Gauss-Kronrod for complex
//! integrands (with an optional semi-infinite tail) and tanh-sinh for real ones.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_335_060,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod abscissae 1, 3, 5, 7, 9.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Kronrod / 10-point Gauss panel on `[a, b]`.
pub fn gauss_kronrod21<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub subdivisions: usize,
    pub evaluations: usize,
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-300,
            max_subdivisions: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    // panel lives on the tail map q = q0 / t
    mapped: bool,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
            .then_with(|| self.mapped.cmp(&other.mapped))
    }
}

/// Globally adaptive integration of `f` over the partition given by `points`
/// (strictly increasing). The last point may be `f64::INFINITY`, in which case
/// the final segment `[q0, ∞)` is mapped onto `t ∈ (0, 1]` with `q = q0 / t`.
pub fn integrate<F>(f: &F, points: &[f64], tol: Tolerance) -> Result<Integral>
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    if points.len() < 2 {
        return Ok(Integral {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            subdivisions: 0,
            evaluations: 0,
        });
    }
    let tail_start = if points[points.len() - 1].is_infinite() {
        Some(points[points.len() - 2])
    } else {
        None
    };
    let mapped_f = |t: f64| -> Complex64 {
        let q0 = tail_start.unwrap_or(1.0);
        let q = q0 / t;
        f(q) * (q0 / (t * t))
    };

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    let mut eval_panel = |a: f64, b: f64, mapped: bool| -> Panel {
        let (value, error) = if mapped {
            gauss_kronrod21(&mapped_f, a, b)
        } else {
            gauss_kronrod21(f, a, b)
        };
        evaluations += 21;
        Panel {
            a,
            b,
            value,
            error,
            mapped,
        }
    };

    let finite_end = if tail_start.is_some() {
        points.len() - 2
    } else {
        points.len() - 1
    };
    for w in points[..=finite_end].windows(2) {
        if w[1] > w[0] {
            heap.push(eval_panel(w[0], w[1], false));
        }
    }
    if tail_start.is_some() {
        heap.push(eval_panel(0.0, 1.0, true));
    }

    let mut subdivisions = 0usize;
    // panels too narrow to split further are parked here
    let mut settled: Vec<Panel> = Vec::new();
    loop {
        let (total, err) = sum_panels(heap.iter().chain(settled.iter()));
        let target = tol.abs.max(tol.rel * total.norm());
        if err <= target || heap.is_empty() {
            return Ok(Integral {
                value: total,
                error: err,
                subdivisions,
                evaluations,
            });
        }
        if subdivisions >= tol.max_subdivisions {
            return Err(Error::QuadratureFailure {
                estimate: total.norm(),
                error: err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-15 * mid.abs().max(1e-300) {
            settled.push(worst);
            continue;
        }
        heap.push(eval_panel(worst.a, mid, worst.mapped));
        heap.push(eval_panel(mid, worst.b, worst.mapped));
        subdivisions += 1;
    }
}

fn sum_panels<'a>(panels: impl Iterator<Item = &'a Panel>) -> (Complex64, f64) {
    // sort by position so the summation order is fixed
    let mut v: Vec<&Panel> = panels.collect();
    v.sort_by(|x, y| {
        x.mapped
            .cmp(&y.mapped)
            .then_with(|| x.a.total_cmp(&y.a))
    });
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for p in v {
        total += p.value;
        err += p.error;
    }
    (total, err)
}

/// Tanh-sinh (double exponential) quadrature of a real integrand on `[a, b]`.
/// Returns `(value, error estimate)`.
pub fn tanh_sinh<F>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    tanh_sinh_tol(f, a, b, rel_tol, 0.0)
}

/// Tanh-sinh stopping at `max(rel_tol·|I|, abs_tol)`.
pub fn tanh_sinh_tol<F>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let half = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let pi2 = std::f64::consts::FRAC_PI_2;
    // node at parameter t: returns contribution w(t) * [f(x+) + f(x-)]
    let pair = |t: f64| -> (f64, f64) {
        let u = pi2 * t.sinh();
        let cu = u.cosh();
        let w = pi2 * t.cosh() / (cu * cu);
        // distance from the nearest endpoint, computed without cancellation
        let e = (-2.0 * u).exp();
        let d = half * 2.0 * e / (1.0 + e);
        if d <= 0.0 || w == 0.0 {
            return (0.0, 0.0);
        }
        let (fl, fr) = (f(a + d), f(b - d));
        (w * (fl + fr), w * (fl.abs() + fr.abs()))
    };
    let t_max = 3.5;
    let mut h = 1.0;
    let fc = f(c);
    let mut sum = pi2 * fc;
    let mut mag = pi2 * fc.abs();
    let mut t = h;
    while t <= t_max {
        let (s, m) = pair(t);
        sum += s;
        mag += m;
        t += h;
    }
    let mut prev = sum * h * half;
    for _level in 1..=12 {
        h *= 0.5;
        let mut t = h;
        while t <= t_max {
            let (s, m) = pair(t);
            sum += s;
            mag += m;
            t += 2.0 * h;
        }
        let cur = sum * h * half;
        let err = (cur - prev).abs();
        // roundoff floor of the integrand samples
        let floor = 1e3 * f64::EPSILON * mag * h * half;
        if err <= (rel_tol * cur.abs()).max(abs_tol).max(floor) || err < 1e-300 {
            return Ok((cur, err));
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure {
        estimate: prev.abs(),
        error: f64::NAN,
        subdivisions: 12,
    })
}

/// Tanh-sinh over a partition, summing panels left to right. Each panel
/// stops at `rel_tol` relative to itself or to the total of `∫|f|`.
pub fn tanh_sinh_partitioned<F>(f: &F, points: &[f64], rel_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let g = |x: f64| Complex64::new(f(x).abs(), 0.0);
    let scale: f64 = points.windows(2).map(|w| gauss_kronrod21(&g, w[0], w[1]).0.re).sum();
    let abs_tol = rel_tol * scale / points.len().max(2) as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    for w in points.windows(2) {
        let (v, e) = tanh_sinh_tol(f, w[0], w[1], rel_tol, abs_tol)?;
        value += v;
        err += e;
    }
    Ok((value, err))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Merge, sort and deduplicate partition points, keeping those inside `[lo, hi]`.
pub fn partition(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = interior
        .into_iter()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs().max(1e-300));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn kronrod_is_exact_for_degree_31() {
        let f = |x: f64| c(x.powi(31) + 3.0 * x.powi(30));
        let (v, _) = gauss_kronrod21(&f, 0.0, 1.0);
        assert!((v.re - (1.0 / 32.0 + 3.0 / 31.0)).abs() < 1e-15);
    }

    #[test]
    fn gauss_part_is_exact_for_degree_19() {
        let f = |x: f64| c(x.powi(19));
        let (_, e) = gauss_kronrod21(&f, -1.0, 2.0);
        let exact = (2f64.powi(20) - 1.0) / 20.0;
        assert!(e < 1e-12 * exact);
    }

    #[test]
    fn adaptive_lorentzian_peak() {
        let g = 1e-6;
        let f = |x: f64| c(g / ((x - 0.3) * (x - 0.3) + g * g));
        let r = integrate(&f, &[0.0, 0.3, 1.0], Tolerance::default()).unwrap();
        let exact = (0.7 / g).atan() + (0.3 / g).atan();
        assert!((r.value.re - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn semi_infinite_tail() {
        let f = |x: f64| c(1.0 / (1.0 + x * x));
        let r = integrate(&f, &[0.0, 1.0, f64::INFINITY], Tolerance::default()).unwrap();
        assert!((r.value.re - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn failure_reports_estimate() {
        let f = |x: f64| c(1.0 / x);
        let tol = Tolerance {
            max_subdivisions: 10,
            ..Tolerance::default()
        };
        assert!(matches!(
            integrate(&f, &[0.0, 1.0], tol),
            Err(Error::QuadratureFailure { .. })
        ));
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let f = |x: f64| 1.0 / x.sqrt();
        let (v, _) = tanh_sinh(&f, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn partition_dedups_and_clips() {
        let p = partition(0.0, 2.0, [1.0, 1.0, 3.0, -1.0, 0.5]);
        assert_eq!(p, vec![0.0, 0.5, 1.0, 2.0]);
    }
}
