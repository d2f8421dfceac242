use std::fmt::Write as _;

use crate::error::{check_len, Error, Result};
use crate::field::norm2;

/// `||rec - act|| / ||act||` in the Euclidean norm.
pub fn relative_error(rec: &[f64], act: &[f64]) -> Result<f64> {
    check_len("reconstruction", act.len(), rec.len())?;
    let denom = norm2(act);
    if denom == 0.0 {
        return Err(Error::Config(
            "relative error against an all-zero field".into(),
        ));
    }
    let diff: Vec<f64> = rec.iter().zip(act).map(|(r, a)| r - a).collect();
    Ok(norm2(&diff) / denom)
}

/// Accuracy figures of one reconstruction. Wall time is kept out of the CSV
/// form so repeated runs serialize identically.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub error_x: f64,
    pub error_y: f64,
    pub wall_time: f64,
    pub iterations: usize,
    pub final_residual: f64,
}

const HEADER: &str = "error_x,error_y,iterations,final_residual";

impl Metrics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        let _ = writeln!(
            out,
            "{},{},{},{}",
            self.error_x, self.error_y, self.iterations, self.final_residual
        );
        out
    }

    /// Inverse of [`Metrics::to_csv`]; `wall_time` is not stored and comes
    /// back as zero.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(Error::Parse("unexpected metrics header".into()));
        }
        let row = lines
            .next()
            .ok_or_else(|| Error::Parse("missing metrics row".into()))?;
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::Parse(format!("expected 4 metrics fields, got {}", cells.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
        };
        Ok(Metrics {
            error_x: num(cells[0])?,
            error_y: num(cells[1])?,
            wall_time: 0.0,
            iterations: cells[2]
                .parse()
                .map_err(|e| Error::Parse(format!("bad iteration count {:?}: {e}", cells[2])))?,
            final_residual: num(cells[3])?,
        })
    }
}
