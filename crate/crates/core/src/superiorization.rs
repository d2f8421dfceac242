//! Target functions on the pixel grid and the superiorized descent pairs
//! algorithm (SUP-DPA).
//!
//! Fields are `n x n`, row-major, indexed `(i, j)` = (row, column).

use crate::error::{check_len, Error, Result};
use crate::field::norm2;
use crate::solver::{descent_pairs, DpaConfig, Interlace, PerturbationRecord, SolverReport, Variable};
use crate::spectroscopy::LineTable;

/// Smoothing constant added under the square root of each TV term.
pub const TV_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TikVariant {
    /// `sum (Z(i,j) - mean of the surrounding pixels)^2`.
    Standard,
    /// The literal `sum (Z(i,j) - (1/rn) sum (Z(ii,jj) - Z(i,j)))^2`, which
    /// equals `sum (2 Z(i,j) - mean)^2` and penalizes constant fields.
    AsPrinted,
}

impl TikVariant {
    fn self_weight(self) -> f64 {
        match self {
            TikVariant::Standard => 1.0,
            TikVariant::AsPrinted => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetFunction {
    Tv { epsilon: f64 },
    Tik { variant: TikVariant },
}

impl TargetFunction {
    pub fn tv() -> Self {
        TargetFunction::Tv {
            epsilon: TV_EPSILON,
        }
    }

    pub fn tik() -> Self {
        TargetFunction::Tik {
            variant: TikVariant::Standard,
        }
    }

    pub fn value(&self, z: &[f64], n: usize) -> f64 {
        match *self {
            TargetFunction::Tv { epsilon } => tv(z, n, epsilon),
            TargetFunction::Tik { variant } => tik(z, n, variant),
        }
    }

    pub fn gradient(&self, z: &[f64], n: usize) -> Result<Vec<f64>> {
        match *self {
            TargetFunction::Tv { epsilon } => grad_tv(z, n, epsilon),
            TargetFunction::Tik { variant } => Ok(grad_tik(z, n, variant)),
        }
    }
}

#[inline]
fn tv_differences(z: &[f64], n: usize, i: usize, j: usize) -> (f64, f64) {
    let c = z[i * n + j];
    let down = if i + 1 < n { c - z[(i + 1) * n + j] } else { 0.0 };
    let right = if j + 1 < n { c - z[i * n + j + 1] } else { 0.0 };
    (down, right)
}

/// Smoothed isotropic total variation with forward differences; differences
/// past the last row or column are zero.
pub fn tv(z: &[f64], n: usize, epsilon: f64) -> f64 {
    assert_eq!(z.len(), n * n, "field is not n x n");
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = tv_differences(z, n, i, j);
            total += (a * a + b * b + epsilon).sqrt();
        }
    }
    total
}

pub fn grad_tv(z: &[f64], n: usize, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::NonSmoothTv);
    }
    assert_eq!(z.len(), n * n, "field is not n x n");
    let mut grad = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = tv_differences(z, n, i, j);
            let tau = (a * a + b * b + epsilon).sqrt();
            let p = i * n + j;
            grad[p] += (a + b) / tau;
            if i + 1 < n {
                grad[p + n] -= a / tau;
            }
            if j + 1 < n {
                grad[p + 1] -= b / tau;
            }
        }
    }
    Ok(grad)
}

/// Visits the (up to eight) pixels surrounding `(i, j)`.
#[inline]
fn for_neighbors(n: usize, i: usize, j: usize, mut f: impl FnMut(usize)) {
    let rows = i.saturating_sub(1)..=(i + 1).min(n - 1);
    for ii in rows {
        for jj in j.saturating_sub(1)..=(j + 1).min(n - 1) {
            if ii != i || jj != j {
                f(ii * n + jj);
            }
        }
    }
}

fn neighbor_count(n: usize, i: usize, j: usize) -> usize {
    let span = |c: usize| if n == 1 { 1 } else if c == 0 || c == n - 1 { 2 } else { 3 };
    span(i) * span(j) - 1
}

/// Per-pixel smoothness residual `alpha Z(p) - mean of neighbors`.
fn tik_residuals(z: &[f64], n: usize, variant: TikVariant) -> Vec<f64> {
    assert_eq!(z.len(), n * n, "field is not n x n");
    let alpha = variant.self_weight();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let p = i * n + j;
            let rn = neighbor_count(n, i, j);
            let mean = if rn == 0 {
                z[p]
            } else {
                let mut s = 0.0;
                for_neighbors(n, i, j, |q| s += z[q]);
                s / rn as f64
            };
            out.push(alpha * z[p] - mean);
        }
    }
    out
}

pub fn tik(z: &[f64], n: usize, variant: TikVariant) -> f64 {
    tik_residuals(z, n, variant).iter().map(|r| r * r).sum()
}

pub fn grad_tik(z: &[f64], n: usize, variant: TikVariant) -> Vec<f64> {
    let r = tik_residuals(z, n, variant);
    let alpha = variant.self_weight();
    let mut grad = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let p = i * n + j;
            grad[p] += 2.0 * alpha * r[p];
            let rn = neighbor_count(n, i, j);
            if rn > 0 {
                let share = 2.0 * r[p] / rn as f64;
                for_neighbors(n, i, j, |q| grad[q] -= share);
            }
        }
    }
    grad
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbOutcome {
    pub phi_before: f64,
    pub phi_after: f64,
    pub shrinks: usize,
    pub applied: bool,
}

/// Moves `z` along the normalized negative gradient of `phi`.
///
/// The step `eta` is multiplied by `gamma` until `phi(z + eta v) <= phi(z)`;
/// the shrunk step is written back so it persists across calls. If the
/// gradient vanishes, or `max_shrinks` shrinks do not produce a decrease,
/// `z` is left unchanged.
pub fn perturb(
    z: &mut [f64],
    n: usize,
    phi: &TargetFunction,
    eta: &mut f64,
    gamma: f64,
    max_shrinks: usize,
) -> Result<PerturbOutcome> {
    let phi_before = phi.value(z, n);
    let unchanged = |shrinks| PerturbOutcome {
        phi_before,
        phi_after: phi_before,
        shrinks,
        applied: false,
    };
    if *eta == 0.0 {
        return Ok(unchanged(0));
    }
    let grad = phi.gradient(z, n)?;
    let gnorm = norm2(&grad);
    if !(gnorm >= 1e-14) {
        return Ok(unchanged(0));
    }
    let direction: Vec<f64> = grad.iter().map(|g| -g / gnorm).collect();
    let mut trial = vec![0.0; z.len()];
    let mut shrinks = 0;
    loop {
        for ((t, &zj), &vj) in trial.iter_mut().zip(z.iter()).zip(&direction) {
            *t = zj + *eta * vj;
        }
        let phi_trial = phi.value(&trial, n);
        if phi_trial <= phi_before {
            z.copy_from_slice(&trial);
            return Ok(PerturbOutcome {
                phi_before,
                phi_after: phi_trial,
                shrinks,
                applied: true,
            });
        }
        if shrinks == max_shrinks {
            return Ok(unchanged(shrinks));
        }
        *eta *= gamma;
        shrinks += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupConfig {
    pub dpa: DpaConfig,
    pub target: TargetFunction,
    /// Initial perturbation step for temperature; zero disables it.
    pub eta_x0: f64,
    /// Initial perturbation step for concentration; zero disables it.
    pub eta_y0: f64,
    pub gamma: f64,
    /// Cap on step shrinks within a single perturbation.
    pub max_shrinks: usize,
}

impl SupConfig {
    /// TV prior with `eta_x0 = 5e6`, `eta_y0 = 10`, `gamma = 0.999`.
    pub fn tv(dpa: DpaConfig) -> Self {
        SupConfig {
            dpa,
            target: TargetFunction::tv(),
            eta_x0: 5e6,
            eta_y0: 10.0,
            gamma: 0.999,
            max_shrinks: 500,
        }
    }

    /// Smoothness prior with `eta_x0 = 5e4`, `eta_y0 = 10`, `gamma = 0.999`.
    pub fn tik(dpa: DpaConfig) -> Self {
        SupConfig {
            target: TargetFunction::tik(),
            eta_x0: 5e4,
            ..SupConfig::tv(dpa)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.eta_x0 >= 0.0 && self.eta_y0 >= 0.0) {
            return Err(Error::Config("perturbation steps must be nonnegative".into()));
        }
        if let TargetFunction::Tv { epsilon } = self.target {
            if !(epsilon > 0.0) {
                return Err(Error::NonSmoothTv);
            }
        }
        self.dpa.validate()
    }
}

struct Superiorizer<'a> {
    cfg: &'a SupConfig,
    n: usize,
    eta_x: f64,
    eta_y: f64,
    records: Vec<PerturbationRecord>,
}

impl Superiorizer<'_> {
    fn step(&mut self, z: &mut [f64], variable: Variable) {
        let eta = match variable {
            Variable::X => &mut self.eta_x,
            Variable::Y => &mut self.eta_y,
        };
        // The target functions are defined on every finite field and the
        // TV epsilon is validated up front.
        let outcome = perturb(z, self.n, &self.cfg.target, eta, self.cfg.gamma, self.cfg.max_shrinks)
            .expect("validated target function");
        self.records.push(PerturbationRecord {
            variable,
            phi_before: outcome.phi_before,
            phi_after: outcome.phi_after,
            eta: *eta,
            shrinks: outcome.shrinks,
            applied: outcome.applied,
        });
    }
}

impl Interlace for Superiorizer<'_> {
    fn before_x(&mut self, x: &mut [f64]) {
        self.step(x, Variable::X);
    }

    fn before_y(&mut self, y: &mut [f64]) {
        self.step(y, Variable::Y);
    }

    fn observe(&mut self, x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
        Some((
            self.cfg.target.value(x, self.n),
            self.cfg.target.value(y, self.n),
        ))
    }

    fn take_records(&mut self) -> Vec<PerturbationRecord> {
        std::mem::take(&mut self.records)
    }
}

/// Superiorized descent pairs algorithm on an `n x n` grid.
///
/// Before every inner x-update (resp. y-update) the current iterate is
/// perturbed by [`perturb`] with the persistent step `eta_x` (resp. `eta_y`);
/// the descent-pairs update is then applied from the perturbed point. The
/// perturbed temperature is projected onto the temperature box first.
pub fn sup_dpa_run(
    table: &LineTable,
    a: &[Vec<f64>],
    cfg: &SupConfig,
    n: usize,
    x0: &[f64],
    y0: &[f64],
) -> Result<SolverReport> {
    cfg.validate()?;
    check_len("grid pixels", n * n, x0.len())?;
    let mut hook = Superiorizer {
        cfg,
        n,
        eta_x: cfg.eta_x0,
        eta_y: cfg.eta_y0,
        records: Vec::new(),
    };
    descent_pairs(table, a, &cfg.dpa, x0, y0, Some(&mut hook))
}
