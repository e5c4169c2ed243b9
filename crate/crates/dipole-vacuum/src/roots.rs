//! Zeros of analytic functions in a rectangle: argument-principle counting,
//! subdivision and Newton polishing.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::spectral::C64;

/// Closed rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl SearchBox {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Result<Self> {
        if !(re.0 < re.1) || !(im.0 < im.1) {
            return domain("search box must have positive width and height");
        }
        Ok(Self { re, im })
    }

    fn width(&self) -> f64 {
        self.re.1 - self.re.0
    }

    fn height(&self) -> f64 {
        self.im.1 - self.im.0
    }

    fn scale(&self) -> f64 {
        self.width().max(self.height())
    }

    fn center(&self) -> C64 {
        C64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    fn contains(&self, z: C64, slack: f64) -> bool {
        z.re >= self.re.0 - slack && z.re <= self.re.1 + slack && z.im >= self.im.0 - slack && z.im <= self.im.1 + slack
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re.0, self.im.0),
            C64::new(self.re.1, self.im.0),
            C64::new(self.re.1, self.im.1),
            C64::new(self.re.0, self.im.1),
        ]
    }

    // Off-center split keeps symmetric roots off the new edges.
    fn quarters(&self) -> [SearchBox; 4] {
        let xm = self.re.0 + 0.5123 * self.width();
        let ym = self.im.0 + 0.4871 * self.height();
        [
            SearchBox { re: (self.re.0, xm), im: (self.im.0, ym) },
            SearchBox { re: (xm, self.re.1), im: (self.im.0, ym) },
            SearchBox { re: (xm, self.re.1), im: (ym, self.im.1) },
            SearchBox { re: (self.re.0, xm), im: (ym, self.im.1) },
        ]
    }
}

fn phase_step<F: Fn(C64) -> C64>(f: &F, a: C64, fa: C64, b: C64, fb: C64, depth: u32) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() <= PI / 4.0 {
        return Ok(d);
    }
    if depth > 40 {
        return Err(Error::InternalConsistency(format!("contour phase unresolved near {a}")));
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    if fm.norm() == 0.0 || !fm.is_finite() {
        return Err(Error::InternalConsistency(format!("zero or pole on contour at {m}")));
    }
    Ok(phase_step(f, a, fa, m, fm, depth + 1)? + phase_step(f, m, fm, b, fb, depth + 1)?)
}

/// Number of zeros minus poles of `f` inside `b`.
pub fn winding_number<F: Fn(C64) -> C64>(f: &F, b: &SearchBox) -> Result<i64> {
    let cs = b.corners();
    let mut total = 0.0;
    for e in 0..4 {
        let (z0, z1) = (cs[e], cs[(e + 1) % 4]);
        let n = 32;
        let mut za = z0;
        let mut fa = f(za);
        for s in 1..=n {
            let zb = z0 + (z1 - z0) * (s as f64 / n as f64);
            let fb = f(zb);
            if fa.norm() == 0.0 || fb.norm() == 0.0 || !fa.is_finite() || !fb.is_finite() {
                return Err(Error::InternalConsistency(format!("zero or pole on contour near {zb}")));
            }
            total += phase_step(f, za, fa, zb, fb, 0)?;
            za = zb;
            fa = fb;
        }
    }
    let w = total / (2.0 * PI);
    if (w - w.round()).abs() > 0.05 {
        return Err(Error::InternalConsistency(format!("non-integer winding {w}")));
    }
    Ok(w.round() as i64)
}

fn newton<F: Fn(C64) -> C64>(f: &F, mut z: C64, scale: f64) -> Option<C64> {
    for _ in 0..80 {
        let fz = f(z);
        if fz.norm() == 0.0 {
            return Some(z);
        }
        let h = 1e-6 * (z.norm() + scale);
        let d = (f(z + h) - f(z - h)) / (2.0 * h);
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        let step = fz / d;
        z -= step;
        if !z.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * (z.norm() + scale) {
            return Some(z);
        }
    }
    None
}

fn search<F: Fn(C64) -> C64>(f: &F, b: SearchBox, count: i64, depth: u32, root_scale: f64, out: &mut Vec<C64>) -> Result<()> {
    if count <= 0 {
        return Ok(());
    }
    if b.scale() < 1e-11 * root_scale {
        for _ in 0..count {
            out.push(b.center());
        }
        return Ok(());
    }
    if count == 1 {
        if let Some(z) = newton(f, b.center(), b.scale()) {
            if b.contains(z, 1e-9 * b.scale()) {
                out.push(z);
                return Ok(());
            }
        }
    }
    if depth > 60 {
        return Ok(());
    }
    let mut found = 0;
    for q in b.quarters() {
        let w = winding_number(f, &q)?;
        found += w;
        search(f, q, w, depth + 1, root_scale, out)?;
    }
    if found != count {
        log::warn!("subdivision of {b:?} counted {found} zeros, parent counted {count}");
    }
    Ok(())
}

/// All zeros of an analytic `f` inside `b`, each polished to `|f| ≤ tol`.
pub fn find_zeros<F: Fn(C64) -> C64>(f: &F, b: &SearchBox, tol: f64) -> Result<Vec<C64>> {
    let counted = winding_number(f, b)?;
    if counted < 0 {
        return Err(Error::InternalConsistency(format!("negative winding {counted}: poles inside the search box")));
    }
    let mut out = Vec::new();
    let scale = b.scale().max(b.center().norm());
    search(f, *b, counted, 0, scale, &mut out)?;
    out.retain(|z| f(*z).norm() <= tol);
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    if out.len() != counted as usize {
        return Err(Error::IncompleteRoots {
            counted: counted as usize,
            converged: out.len(),
        });
    }
    Ok(out)
}
