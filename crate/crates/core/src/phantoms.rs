//! Ground-truth fields, exact absorption coefficients, sinograms and the
//! multiplicative uniform noise model.
//!
//! Phantom coordinates are expressed relative to the ROI: `(u, v)` in
//! `[0, 1]^2` with `u` along columns and `v` along rows, so one parameter set
//! describes the same shape at every gridding scale.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Result};
use crate::field::Field;
use crate::geometry::{Grid, SystemMatrix};
use crate::spectroscopy::{beta, LineTable};

/// Ground-truth temperature (kelvin) and mole-fraction fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub x_true: Field,
    pub y_true: Field,
}

/// One isotropic Gaussian bump in relative ROI coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPeak {
    pub center: (f64, f64),
    /// Standard deviation as a fraction of the ROI side.
    pub sigma: f64,
    pub amplitude: f64,
}

impl GaussianPeak {
    fn at(&self, u: f64, v: f64) -> f64 {
        let du = u - self.center.0;
        let dv = v - self.center.1;
        self.amplitude * (-(du * du + dv * dv) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Smooth two-peak phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGaussiansParams {
    pub x_baseline: f64,
    pub x_peaks: [GaussianPeak; 2],
    pub y_baseline: f64,
    pub y_peaks: [GaussianPeak; 2],
}

impl Default for TwoGaussiansParams {
    /// Peaks at 2200 K and 1900 K over a 900 K background, concentration
    /// peaks of 0.16 and 0.11 over 0.01. Both fields stay inside
    /// 800..2400 K and 0.005..0.2.
    fn default() -> Self {
        let a = (0.32, 0.36);
        let b = (0.68, 0.62);
        TwoGaussiansParams {
            x_baseline: 900.0,
            x_peaks: [
                GaussianPeak {
                    center: a,
                    sigma: 0.14,
                    amplitude: 1300.0,
                },
                GaussianPeak {
                    center: b,
                    sigma: 0.12,
                    amplitude: 1000.0,
                },
            ],
            y_baseline: 0.01,
            y_peaks: [
                GaussianPeak {
                    center: a,
                    sigma: 0.12,
                    amplitude: 0.15,
                },
                GaussianPeak {
                    center: b,
                    sigma: 0.15,
                    amplitude: 0.10,
                },
            ],
        }
    }
}

/// Flat-topped flame cross-section: a plateau disk with a Gaussian rim
/// falloff to ambient.
#[derive(Debug, Clone, PartialEq)]
pub struct FlameParams {
    pub center: (f64, f64),
    /// Plateau radius as a fraction of the ROI side.
    pub radius: f64,
    /// Gaussian falloff width outside the plateau; zero gives a hard edge.
    pub falloff: f64,
    pub x_plateau: f64,
    pub x_ambient: f64,
    pub y_plateau: f64,
    pub y_ambient: f64,
}

impl Default for FlameParams {
    /// 1800 K burnt gas with 0.15 water over 450 K / 0.01 surroundings,
    /// inside the 400..2000 K and 0.005..0.2 ranges.
    fn default() -> Self {
        FlameParams {
            center: (0.5, 0.5),
            radius: 0.25,
            falloff: 0.08,
            x_plateau: 1800.0,
            x_ambient: 450.0,
            y_plateau: 0.15,
            y_ambient: 0.01,
        }
    }
}

impl FlameParams {
    /// Profile weight in `[0, 1]` at relative distance `r` from the center.
    fn weight(&self, r: f64) -> f64 {
        if r <= self.radius {
            1.0
        } else if self.falloff == 0.0 {
            0.0
        } else {
            let d = r - self.radius;
            (-d * d / (2.0 * self.falloff * self.falloff)).exp()
        }
    }
}

fn relative_center(grid: &Grid, row: usize, col: usize) -> (f64, f64) {
    let n = grid.n() as f64;
    ((col as f64 + 0.5) / n, (row as f64 + 0.5) / n)
}

fn sample(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Field {
    let n = grid.n();
    let mut values = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (u, v) = relative_center(grid, row, col);
            values.push(f(u, v));
        }
    }
    Field::new(values)
}

pub fn phantom_two_gaussians(grid: &Grid, params: &TwoGaussiansParams) -> Phantom {
    let x_true = sample(grid, |u, v| {
        params.x_baseline + params.x_peaks.iter().map(|p| p.at(u, v)).sum::<f64>()
    });
    let y_true = sample(grid, |u, v| {
        params.y_baseline + params.y_peaks.iter().map(|p| p.at(u, v)).sum::<f64>()
    });
    Phantom { x_true, y_true }
}

pub fn phantom_flame(grid: &Grid, params: &FlameParams) -> Phantom {
    let radius = |u: f64, v: f64| (u - params.center.0).hypot(v - params.center.1);
    let x_true = sample(grid, |u, v| {
        params.x_ambient + (params.x_plateau - params.x_ambient) * params.weight(radius(u, v))
    });
    let y_true = sample(grid, |u, v| {
        params.y_ambient + (params.y_plateau - params.y_ambient) * params.weight(radius(u, v))
    });
    Phantom { x_true, y_true }
}

/// Exact per-pixel absorption coefficients `a^k = beta_k(x_true, y_true)`.
pub fn true_abs_coeffs(table: &LineTable, phantom: &Phantom) -> Result<Vec<Vec<f64>>> {
    (0..table.len())
        .map(|k| beta(table, k, &phantom.x_true, &phantom.y_true))
        .collect()
}

/// Noise-free absorbance `b^k = L a^k` for every wavelength.
pub fn forward_project(
    l: &SystemMatrix,
    table: &LineTable,
    phantom: &Phantom,
) -> Result<Vec<Vec<f64>>> {
    check_len("phantom pixels", l.cols(), phantom.x_true.len())?;
    true_abs_coeffs(table, phantom)?
        .iter()
        .map(|a| l.matvec(a))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

/// Multiplies every measurement by `1 + r * level`, `r ~ U(-1, 1)`.
///
/// Draws come from a ChaCha8 stream seeded with `spec.seed`, consumed in
/// wavelength-major then beam order.
pub fn add_uniform_noise(b: &[Vec<f64>], spec: &NoiseSpec) -> Vec<Vec<f64>> {
    assert!(spec.level >= 0.0, "noise level must be nonnegative");
    if spec.level == 0.0 {
        return b.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dist = Uniform::new(-1.0, 1.0);
    b.iter()
        .map(|row| {
            row.iter()
                .map(|&v| v * (1.0 + dist.sample(&mut rng) * spec.level))
                .collect()
        })
        .collect()
}
