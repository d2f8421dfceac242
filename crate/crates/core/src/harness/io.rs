//! Plain CSV and text writers for run artifacts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::SolverReport;

/// `n x n` field as `n` comma-separated rows, row 0 first.
pub fn grid_csv(values: &[f64], n: usize) -> String {
    assert_eq!(values.len(), n * n, "field is not n x n");
    let mut out = String::new();
    for row in values.chunks(n) {
        push_row(&mut out, row);
    }
    out
}

/// Sinogram as one row per beam and one column per wavelength.
pub fn sinogram_csv(b: &[Vec<f64>]) -> String {
    let beams = b.first().map_or(0, Vec::len);
    let mut out = String::new();
    let header: Vec<String> = (0..b.len()).map(|k| format!("line_{k}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..beams {
        let row: Vec<f64> = b.iter().map(|bk| bk[i]).collect();
        push_row(&mut out, &row);
    }
    out
}

/// Residual per outer iteration, with target-function values when tracked.
pub fn residuals_csv(report: &SolverReport) -> String {
    let mut out = String::from("iteration,residual,phi_x,phi_y\n");
    let _ = writeln!(out, "0,{},,", report.initial_residual);
    for (i, r) in report.residual_history.iter().enumerate() {
        match report.phi_history.get(i) {
            Some((px, py)) => {
                let _ = writeln!(out, "{},{r},{px},{py}", i + 1);
            }
            None => {
                let _ = writeln!(out, "{},{r},,", i + 1);
            }
        }
    }
    out
}

fn push_row(out: &mut String, row: &[f64]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Reads a grid written by [`grid_csv`].
pub fn parse_grid_csv(text: &str) -> Result<(Vec<f64>, usize)> {
    let mut values = Vec::new();
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.is_empty()) {
        for cell in line.split(',') {
            values.push(
                cell.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad grid value {cell:?}: {e}")))?,
            );
        }
        rows += 1;
    }
    if values.len() != rows * rows {
        return Err(Error::Parse(format!(
            "grid has {rows} rows but {} values",
            values.len()
        )));
    }
    Ok((values, rows))
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Manifest::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::solver::Termination;

    #[test]
    fn grid_round_trip() {
        let v = vec![1.5, -2.0, 1e-17, 3.0 / 7.0];
        let text = grid_csv(&v, 2);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_grid_csv(&text).unwrap(), (v, 2));
        assert!(parse_grid_csv("1,2,3\n").is_err());
        assert!(parse_grid_csv("1,x\n2,3\n").is_err());
    }

    #[test]
    fn sinogram_layout() {
        let b = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        assert_eq!(sinogram_csv(&b), "line_0,line_1\n1,4\n2,5\n3,6\n");
    }

    #[test]
    fn residual_rows() {
        let report = SolverReport {
            x_final: Field::new(vec![1.0]),
            y_final: Field::new(vec![1.0]),
            initial_residual: 2.0,
            residual_history: vec![1.0, 0.5],
            iterations: 2,
            terminated_by: Termination::MaxIter,
            phi_history: vec![(3.0, 4.0), (2.0, 1.0)],
            perturbations: vec![],
            wall_time: 0.0,
        };
        assert_eq!(
            residuals_csv(&report),
            "iteration,residual,phi_x,phi_y\n0,2,,\n1,1,3,4\n2,0.5,2,1\n"
        );
    }

    #[test]
    fn manifest_render() {
        let mut m = Manifest::new();
        m.set("grid", 40);
        m.set("algo", "dpa");
        assert_eq!(m.render(), "grid = 40\nalgo = dpa\n");
        assert_eq!(m.get("algo"), Some("dpa"));
        assert_eq!(m.get("seed"), None);
    }
}
