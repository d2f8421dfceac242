//! Pixel-by-pixel nonlinear least squares baseline.
//!
//! Each pixel solves `min_{x,y} sum_k (a^k - beta_tilde_k(x) y)^2` with a
//! trust-region method on a Gauss-Newton model. The 2x2 subproblem is solved
//! exactly.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::field::Field;
use crate::spectroscopy::LineTable;

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionConfig {
    pub x_bounds: (f64, f64),
    pub y_bounds: (f64, f64),
    pub delta_min: f64,
    pub f_tol: f64,
    pub max_iter: usize,
    pub expand: f64,
    pub contract: f64,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        TrustRegionConfig {
            x_bounds: (800.0, 2400.0),
            y_bounds: (0.005, 0.2),
            delta_min: 5e-10,
            f_tol: 5e-10,
            max_iter: 400,
            expand: 2.0,
            contract: 0.25,
        }
    }
}

impl TrustRegionConfig {
    /// Initial radius: distance between the lower and upper corners of the box.
    pub fn delta0(&self) -> f64 {
        (self.x_bounds.1 - self.x_bounds.0).hypot(self.y_bounds.1 - self.y_bounds.0)
    }

    pub fn validate(&self) -> Result<()> {
        let (xl, xh) = self.x_bounds;
        let (yl, yh) = self.y_bounds;
        if !(xl > 0.0 && xh >= xl && yh >= yl) {
            return Err(Error::Config(format!(
                "invalid bounds x ({xl}, {xh}), y ({yl}, {yh})"
            )));
        }
        if !(self.delta_min > 0.0 && self.delta0() > self.delta_min) {
            return Err(Error::Config(format!(
                "need delta0 > delta_min > 0, got {} and {}",
                self.delta0(),
                self.delta_min
            )));
        }
        if !(self.expand >= 1.0 && self.contract > 0.0 && self.contract < 1.0) {
            return Err(Error::Config("invalid radius update factors".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Objective value, exact gradient and Gauss-Newton Hessian `2 J^T J` at
/// `(x, y)` for one pixel with coefficients `a`.
pub fn pixel_objective(
    table: &LineTable,
    a: &[f64],
    x: f64,
    y: f64,
) -> Result<(f64, [f64; 2], [[f64; 2]; 2])> {
    check_len("pixel coefficients", table.len(), a.len())?;
    if !(x > 0.0) {
        return Err(Error::NonPositiveTemperature { index: 0, value: x });
    }
    let mut value = 0.0;
    let mut g = [0.0; 2];
    let mut h = [[0.0; 2]; 2];
    for (k, &ak) in a.iter().enumerate() {
        let bt = table.line_factor(k, x);
        let jx = table.line_factor_dx(k, x) * y;
        let jy = bt;
        let r = bt * y - ak;
        value += r * r;
        g[0] += 2.0 * jx * r;
        g[1] += 2.0 * jy * r;
        h[0][0] += 2.0 * jx * jx;
        h[0][1] += 2.0 * jx * jy;
        h[1][1] += 2.0 * jy * jy;
    }
    h[1][0] = h[0][1];
    Ok((value, g, h))
}

fn model(g: [f64; 2], h: [[f64; 2]; 2], s: [f64; 2]) -> f64 {
    g[0] * s[0]
        + g[1] * s[1]
        + 0.5 * (h[0][0] * s[0] * s[0] + 2.0 * h[0][1] * s[0] * s[1] + h[1][1] * s[1] * s[1])
}

/// Eigenpairs of a symmetric 2x2 matrix, ascending.
fn sym_eigen(h: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, c) = (h[0][0], h[0][1], h[1][1]);
    if b == 0.0 {
        return if a <= c {
            ([a, c], [[1.0, 0.0], [0.0, 1.0]])
        } else {
            ([c, a], [[0.0, 1.0], [1.0, 0.0]])
        };
    }
    let mean = 0.5 * (a + c);
    let rad = (0.5 * (a - c)).hypot(b);
    let hi = mean + rad;
    let det = a * c - b * b;
    // Avoid cancellation in the small eigenvalue.
    let lo = if hi > 0.0 && mean > 0.0 { det / hi } else { mean - rad };
    let vec_for = |lam: f64| {
        let (u, v) = if (lam - c).abs() >= (lam - a).abs() {
            (lam - c, b)
        } else {
            (b, lam - a)
        };
        let n = u.hypot(v);
        [u / n, v / n]
    };
    let v_lo = vec_for(lo);
    // The second eigenvector is orthogonal to the first.
    ([lo, hi], [v_lo, [-v_lo[1], v_lo[0]]])
}

/// Exact minimizer of `g^T s + s^T H s / 2` subject to `||s|| <= delta`.
pub fn tr_subproblem(g: [f64; 2], h: [[f64; 2]; 2], delta: f64) -> [f64; 2] {
    let gnorm = g[0].hypot(g[1]);
    let (lam, q) = sym_eigen(h);
    let gt = [
        q[0][0] * g[0] + q[0][1] * g[1],
        q[1][0] * g[0] + q[1][1] * g[1],
    ];
    let scale = lam[1].abs().max(gnorm).max(f64::MIN_POSITIVE);
    let tiny = 1e-14 * scale;
    let step_for = |mu: f64| -> [f64; 2] {
        let mut c = [0.0; 2];
        for i in 0..2 {
            let d = lam[i] + mu;
            c[i] = if d > tiny { -gt[i] / d } else { 0.0 };
        }
        [c[0] * q[0][0] + c[1] * q[1][0], c[0] * q[0][1] + c[1] * q[1][1]]
    };
    let norm = |s: [f64; 2]| s[0].hypot(s[1]);

    if gnorm == 0.0 && lam[0] >= 0.0 {
        return [0.0, 0.0];
    }
    if lam[0] > tiny {
        let s = step_for(0.0);
        if norm(s) <= delta {
            return s;
        }
    }

    let mu_lo = (-lam[0]).max(0.0);
    // Hard case: no multiplier above mu_lo reaches the boundary.
    if gt[0].abs() <= 1e-14 * gnorm.max(f64::MIN_POSITIVE) || gnorm == 0.0 {
        let s = step_for(mu_lo);
        let sn = norm(s);
        if sn <= delta {
            if lam[0] >= 0.0 {
                return s;
            }
            let tau = (delta * delta - sn * sn).max(0.0).sqrt();
            return [s[0] + tau * q[0][0], s[1] + tau * q[0][1]];
        }
    }

    // ||s(mu)|| decreases on (mu_lo, inf); it is at most delta at mu_hi.
    let mut lo = mu_lo;
    let mut hi = mu_lo + gnorm / delta + lam[1].abs();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm(step_for(mid)) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = step_for(hi);
    let sn = norm(s);
    if sn > delta {
        [s[0] * delta / sn, s[1] * delta / sn]
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfTermination {
    FunctionTol,
    RadiusTol,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelFit {
    pub x: f64,
    pub y: f64,
    pub iterations: usize,
    pub objective: f64,
    pub terminated_by: NfTermination,
}

fn clip(v: f64, (lo, hi): (f64, f64)) -> f64 {
    v.clamp(lo, hi)
}

/// Trust-region fit of a single pixel. The start is projected onto the box
/// and every trial point is clipped to it before evaluation.
pub fn nf_fit_pixel(
    table: &LineTable,
    a: &[f64],
    x0: f64,
    y0: f64,
    cfg: &TrustRegionConfig,
) -> Result<PixelFit> {
    cfg.validate()?;
    if !(x0 > 0.0) {
        return Err(Error::NonPositiveTemperature { index: 0, value: x0 });
    }
    let delta0 = cfg.delta0();
    let mut delta = delta0;
    let mut x = clip(x0, cfg.x_bounds);
    let mut y = clip(y0, cfg.y_bounds);
    let (mut f, mut g, mut h) = pixel_objective(table, a, x, y)?;
    let mut iterations = 0;
    loop {
        if delta < cfg.delta_min {
            return Ok(fit(x, y, iterations, f, NfTermination::RadiusTol));
        }
        if iterations == cfg.max_iter {
            return Ok(fit(x, y, iterations, f, NfTermination::MaxIter));
        }
        let tol = cfg.f_tol * (1.0 + f);
        let s = tr_subproblem(g, h, delta);
        let xt = clip(x + s[0], cfg.x_bounds);
        let yt = clip(y + s[1], cfg.y_bounds);
        let sc = [xt - x, yt - y];
        let predicted = -model(g, h, sc);
        if sc == [0.0, 0.0] || !(predicted > 0.0) {
            if s == [0.0, 0.0] || predicted.abs() < tol {
                return Ok(fit(x, y, iterations, f, NfTermination::FunctionTol));
            }
            iterations += 1;
            delta *= cfg.contract;
            continue;
        }
        iterations += 1;
        let (ft, gt, ht) = pixel_objective(table, a, xt, yt)?;
        if ft < f {
            let actual = f - ft;
            x = xt;
            y = yt;
            f = ft;
            g = gt;
            h = ht;
            delta = (delta * cfg.expand).min(delta0);
            if actual < tol || predicted < tol {
                return Ok(fit(x, y, iterations, f, NfTermination::FunctionTol));
            }
        } else {
            if predicted < tol {
                return Ok(fit(x, y, iterations, f, NfTermination::FunctionTol));
            }
            delta *= cfg.contract;
        }
    }
}

fn fit(x: f64, y: f64, iterations: usize, objective: f64, terminated_by: NfTermination) -> PixelFit {
    PixelFit {
        x,
        y,
        iterations,
        objective,
        terminated_by,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NfReport {
    pub x_final: Field,
    pub y_final: Field,
    pub iterations: Vec<usize>,
    /// Pixels whose fit raised an error; their outputs keep the start values.
    pub failed: Vec<bool>,
    pub wall_time: f64,
}

/// Fits every pixel independently. Results are merged in pixel order, so the
/// output does not depend on `parallel`.
pub fn nf_fit_field(
    table: &LineTable,
    a: &[Vec<f64>],
    x0: &[f64],
    y0: &[f64],
    cfg: &TrustRegionConfig,
    parallel: bool,
) -> Result<NfReport> {
    let start = Instant::now();
    cfg.validate()?;
    let m = x0.len();
    check_len("coefficient sets", table.len(), a.len())?;
    check_len("initial concentration", m, y0.len())?;
    for ak in a {
        check_len("coefficients", m, ak.len())?;
    }
    let solve = |j: usize| {
        let aj: Vec<f64> = a.iter().map(|ak| ak[j]).collect();
        nf_fit_pixel(table, &aj, x0[j], y0[j], cfg)
    };
    let fits: Vec<Result<PixelFit>> = if parallel {
        (0..m).into_par_iter().map(solve).collect()
    } else {
        (0..m).map(solve).collect()
    };
    let mut x = Vec::with_capacity(m);
    let mut y = Vec::with_capacity(m);
    let mut iterations = Vec::with_capacity(m);
    let mut failed = Vec::with_capacity(m);
    for (j, r) in fits.into_iter().enumerate() {
        match r {
            Ok(p) => {
                x.push(p.x);
                y.push(p.y);
                iterations.push(p.iterations);
                failed.push(false);
            }
            Err(_) => {
                x.push(x0[j]);
                y.push(y0[j]);
                iterations.push(0);
                failed.push(true);
            }
        }
    }
    Ok(NfReport {
        x_final: Field::new(x),
        y_final: Field::new(y),
        iterations,
        failed,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
