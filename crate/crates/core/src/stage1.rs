//! Stage 1: per-wavelength recovery of absorption coefficients from
//! absorbance by cyclic Kaczmarz sweeps (ART), optionally superiorized with
//! a smoothness prior on the grid-shaped coefficient image.

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::field::norm2;
use crate::geometry::SystemMatrix;
use crate::superiorization::{perturb, TargetFunction};

/// Perturbation schedule for superiorized ART.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtSuperiorization {
    pub target: TargetFunction,
    /// Initial step as a fraction of the coefficient norm after the first sweep.
    pub eta_rel: f64,
    /// Shrink factor inside a perturbation.
    pub gamma: f64,
    pub max_shrinks: usize,
    /// Factor applied to the step after every sweep, keeping the
    /// perturbations summable.
    pub decay: f64,
}

impl Default for ArtSuperiorization {
    fn default() -> Self {
        ArtSuperiorization {
            target: TargetFunction::tv(),
            eta_rel: 0.05,
            gamma: 0.999,
            max_shrinks: 500,
            decay: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtConfig {
    pub relaxation: f64,
    pub sweeps: usize,
    pub nonneg: bool,
    /// Stop once `||L a - b|| <= residual_tol * ||b||`.
    pub residual_tol: f64,
    pub superiorize: Option<ArtSuperiorization>,
}

impl Default for ArtConfig {
    fn default() -> Self {
        ArtConfig {
            relaxation: 1.0,
            sweeps: 500,
            nonneg: true,
            residual_tol: 1e-6,
            superiorize: Some(ArtSuperiorization::default()),
        }
    }
}

impl ArtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::Config(format!(
                "ART relaxation must lie in (0, 2), got {}",
                self.relaxation
            )));
        }
        if self.sweeps == 0 {
            return Err(Error::Config("ART needs at least one sweep".into()));
        }
        if let Some(s) = &self.superiorize {
            if !(s.gamma > 0.0 && s.gamma < 1.0 && s.decay > 0.0 && s.decay <= 1.0) {
                return Err(Error::Config("invalid ART superiorization factors".into()));
            }
        }
        Ok(())
    }
}

/// Relaxed projection of `a` toward the hyperplane of row `i`:
/// `a += relaxation (b_i - <L_i, a>) / ||L_i||^2 L_i`. Empty rows are skipped.
pub fn kaczmarz_step(l: &SystemMatrix, b_i: f64, i: usize, a: &mut [f64], relaxation: f64) {
    let norm_sq = l.row_norm_sq(i);
    if norm_sq == 0.0 {
        return;
    }
    let scale = relaxation * (b_i - l.row_dot(i, a)) / norm_sq;
    let (cols, vals) = l.row(i);
    for (&j, &v) in cols.iter().zip(vals) {
        a[j] += scale * v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtResult {
    pub coefficients: Vec<f64>,
    /// `||L a - b||` after each completed sweep.
    pub residual_history: Vec<f64>,
    pub sweeps: usize,
}

fn residual_norm(l: &SystemMatrix, a: &[f64], b: &[f64]) -> f64 {
    let r: Vec<f64> = (0..l.rows()).map(|i| l.row_dot(i, a) - b[i]).collect();
    norm2(&r)
}

/// ART for a single wavelength on an `n x n` grid, starting from `start`
/// (zeros when `None`).
pub fn art_solve(
    l: &SystemMatrix,
    b: &[f64],
    cfg: &ArtConfig,
    n: usize,
    start: Option<&[f64]>,
) -> Result<ArtResult> {
    cfg.validate()?;
    check_len("absorbance", l.rows(), b.len())?;
    check_len("grid pixels", l.cols(), n * n)?;
    let mut a = match start {
        Some(s) => {
            check_len("ART start", l.cols(), s.len())?;
            s.to_vec()
        }
        None => vec![0.0; l.cols()],
    };
    let tol = cfg.residual_tol * norm2(b);
    let mut history = Vec::new();
    if residual_norm(l, &a, b) <= tol {
        return Ok(ArtResult {
            coefficients: a,
            residual_history: history,
            sweeps: 0,
        });
    }

    let mut eta: Option<f64> = None;
    for _ in 0..cfg.sweeps {
        if let Some(sup) = &cfg.superiorize {
            if let Some(step) = eta.as_mut() {
                perturb(&mut a, n, &sup.target, step, sup.gamma, sup.max_shrinks)?;
                *step *= sup.decay;
            }
        }
        for (i, &bi) in b.iter().enumerate() {
            kaczmarz_step(l, bi, i, &mut a, cfg.relaxation);
        }
        if cfg.nonneg {
            a.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        if let Some(sup) = &cfg.superiorize {
            if eta.is_none() {
                eta = Some(sup.eta_rel * norm2(&a));
            }
        }
        let r = residual_norm(l, &a, b);
        history.push(r);
        if r <= tol {
            break;
        }
    }
    Ok(ArtResult {
        coefficients: a,
        sweeps: history.len(),
        residual_history: history,
    })
}

/// Recovers `a^k` for every wavelength. Wavelengths are independent and run
/// on the rayon pool when `parallel` is set; the result does not depend on it.
pub fn solve_abs_coeffs(
    l: &SystemMatrix,
    b: &[Vec<f64>],
    cfg: &ArtConfig,
    n: usize,
    parallel: bool,
) -> Result<Vec<Vec<f64>>> {
    let solve = |bk: &Vec<f64>| art_solve(l, bk, cfg, n, None).map(|r| r.coefficients);
    if parallel {
        b.par_iter().map(solve).collect()
    } else {
        b.iter().map(solve).collect()
    }
}
