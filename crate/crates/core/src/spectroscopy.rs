//! Spectroscopic forward model.
//!
//! Each absorption line `k` contributes a per-pixel coefficient
//! `beta_k(x, y)_j = beta_tilde_k(x)_j * y_j` with
//! `beta_tilde_k(x)_j = S_k * exp(-E_k * (1/x_j - 1/T0))`, where `x` is the
//! temperature (kelvin) and `y` the mole fraction. Line pressure is folded
//! into `S_k`.
//!
//! Wavelength indices are zero-based throughout the crate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    /// Line-strength scale at the reference temperature, positive.
    pub s: f64,
    /// Lower-state energy expressed in kelvin.
    pub e: f64,
}

/// Ordered set of absorption lines with the reference temperature `T0`.
///
/// The reference index is the line with the smallest lower-state energy
/// (lowest index on ties); with it every line ratio is increasing in
/// temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct LineTable {
    lines: Vec<SpectralLine>,
    t0: f64,
    t_ref: usize,
}

#[derive(Serialize, Deserialize)]
struct LineTableFile {
    t0: f64,
    s: Vec<f64>,
    e: Vec<f64>,
}

/// Line strengths of the built-in ten-line table, paired with `E_k = 500 k` K.
///
/// They are chosen so that for `T0 = 296 K`, every line ratio satisfies
/// `1000 * d f_k / dx <= 0.9` on 400..2400 K, and every `2 * beta_tilde_k`
/// stays below 0.9 on the same range. The strong low-energy lines and weak
/// hot lines mimic a water-vapour band.
const SYNTHETIC_S: [f64; 10] = [
    3.068e-1, 5.696e-2, 1.740e-2, 4.819e-3, 1.187e-3, 2.739e-4, 6.070e-5, 1.308e-5, 2.760e-6,
    5.734e-7,
];

impl LineTable {
    pub fn new(lines: Vec<SpectralLine>, t0: f64) -> Result<Self> {
        if lines.len() < 2 {
            return Err(Error::LineTable(format!(
                "need at least two lines, got {}",
                lines.len()
            )));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::LineTable(format!("t0 must be positive, got {t0}")));
        }
        for (k, line) in lines.iter().enumerate() {
            if !(line.s > 0.0 && line.s.is_finite()) {
                return Err(Error::LineTable(format!(
                    "line {k}: strength must be positive, got {}",
                    line.s
                )));
            }
            if !line.e.is_finite() {
                return Err(Error::LineTable(format!(
                    "line {k}: energy must be finite"
                )));
            }
        }
        let t_ref = select_reference_index(&lines);
        Ok(LineTable { lines, t0, t_ref })
    }

    pub fn from_arrays(s: &[f64], e: &[f64], t0: f64) -> Result<Self> {
        if s.len() != e.len() {
            return Err(Error::LineTable(format!(
                "s has {} entries but e has {}",
                s.len(),
                e.len()
            )));
        }
        let lines = s
            .iter()
            .zip(e)
            .map(|(&s, &e)| SpectralLine { s, e })
            .collect();
        LineTable::new(lines, t0)
    }

    /// Ten synthetic lines with `E_k = 0, 500, ..., 4500` K and `T0 = 296` K.
    pub fn synthetic_h2o() -> Self {
        let e: Vec<f64> = (0..SYNTHETIC_S.len()).map(|k| 500.0 * k as f64).collect();
        LineTable::from_arrays(&SYNTHETIC_S, &e, 296.0).expect("built-in table is valid")
    }

    /// Parses the TOML line-table format:
    ///
    /// ```toml
    /// t0 = 296.0
    /// s = [0.3, 0.05]
    /// e = [0.0, 500.0]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: LineTableFile =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        LineTable::from_arrays(&file.s, &file.e, file.t0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        LineTable::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = LineTableFile {
            t0: self.t0,
            s: self.lines.iter().map(|l| l.s).collect(),
            e: self.lines.iter().map(|l| l.e).collect(),
        };
        toml::to_string(&file).expect("line table serializes")
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn lines(&self) -> &[SpectralLine] {
        &self.lines
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn reference_index(&self) -> usize {
        self.t_ref
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k < self.lines.len() {
            Ok(())
        } else {
            Err(Error::WavelengthIndex {
                index: k,
                lines: self.lines.len(),
            })
        }
    }

    /// `beta_tilde_k` at a single temperature. No domain check.
    #[inline]
    pub fn line_factor(&self, k: usize, x: f64) -> f64 {
        let line = &self.lines[k];
        line.s * (-line.e * (1.0 / x - 1.0 / self.t0)).exp()
    }

    /// Derivative of [`LineTable::line_factor`] with respect to temperature.
    #[inline]
    pub fn line_factor_dx(&self, k: usize, x: f64) -> f64 {
        self.line_factor(k, x) * self.lines[k].e / (x * x)
    }

    /// `f_k = beta_tilde_k / beta_tilde_t` at a single temperature. No domain check.
    #[inline]
    pub fn line_ratio(&self, k: usize, x: f64) -> f64 {
        let line = &self.lines[k];
        let reference = &self.lines[self.t_ref];
        (line.s / reference.s) * (-(line.e - reference.e) * (1.0 / x - 1.0 / self.t0)).exp()
    }
}

pub(crate) fn check_temperature(x: &[f64]) -> Result<()> {
    match x.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        None => Ok(()),
        Some(index) => Err(Error::NonPositiveTemperature {
            index,
            value: x[index],
        }),
    }
}

/// Smallest index attaining the minimum lower-state energy.
pub fn select_reference_index(lines: &[SpectralLine]) -> usize {
    let mut best = 0;
    for (k, line) in lines.iter().enumerate().skip(1) {
        if line.e < lines[best].e {
            best = k;
        }
    }
    best
}

pub fn beta_tilde(table: &LineTable, k: usize, x: &[f64]) -> Result<Vec<f64>> {
    table.check_index(k)?;
    check_temperature(x)?;
    Ok(x.iter().map(|&xj| table.line_factor(k, xj)).collect())
}

/// `beta_k(x, y) = diag(beta_tilde_k(x)) y`.
pub fn beta(table: &LineTable, k: usize, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len("concentration field", x.len(), y.len())?;
    let factor = beta_tilde(table, k, x)?;
    Ok(factor.iter().zip(y).map(|(b, yj)| b * yj).collect())
}

/// Line ratio `f_k(x) = diag(beta_tilde_t(x))^-1 beta_tilde_k(x)` against the
/// table's reference line.
pub fn ratio_f(table: &LineTable, k: usize, x: &[f64]) -> Result<Vec<f64>> {
    table.check_index(k)?;
    check_temperature(x)?;
    Ok(x.iter().map(|&xj| table.line_ratio(k, xj)).collect())
}

/// Gradient of `g_k(x) = 1/2 ||f_k(x) - target||^2`.
///
/// `f_k` acts componentwise with `d f_k,j / d x_j = (E_k - E_t) f_k,j / x_j^2`,
/// so the gradient is `-(E_k - E_t) diag(f_k / x^2) v` with `v = target - f_k(x)`.
pub fn grad_g(table: &LineTable, k: usize, x: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_len("ratio target", x.len(), target.len())?;
    let f = ratio_f(table, k, x)?;
    let de = table.lines[k].e - table.lines[table.t_ref].e;
    Ok(x.iter()
        .zip(&f)
        .zip(target)
        .map(|((&xj, &fj), &uj)| -de * fj / (xj * xj) * (uj - fj))
        .collect())
}

/// Gradient of `h_k(y) = 1/2 ||target - beta_k(x_fixed, y)||^2`, which is
/// `-diag(beta_tilde_k(x_fixed)) w` with `w = target - beta_k(x_fixed, y)`.
pub fn grad_h(
    table: &LineTable,
    k: usize,
    x_fixed: &[f64],
    y: &[f64],
    target: &[f64],
) -> Result<Vec<f64>> {
    check_len("ratio target", x_fixed.len(), target.len())?;
    check_len("concentration field", x_fixed.len(), y.len())?;
    let factor = beta_tilde(table, k, x_fixed)?;
    Ok(factor
        .iter()
        .zip(y)
        .zip(target)
        .map(|((&b, &yj), &aj)| -b * (aj - b * yj))
        .collect())
}
