//! Pixel grid, parallel beam sets and the sparse system matrix of
//! beam-pixel intersection lengths.
//!
//! The region of interest is the square `[-D/2, D/2]^2` with `D =
//! side_length`. Pixel `(row, col)` covers
//! `x in [-D/2 + col*p, -D/2 + (col+1)*p]`, `y in [-D/2 + row*p, ...]` with
//! `p = D/n`, and is stored at index `row * n + col`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    side_length: f64,
}

impl Grid {
    pub fn new(n: usize, side_length: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("grid needs at least one pixel per side".into()));
        }
        if !(side_length > 0.0 && side_length.is_finite()) {
            return Err(Error::Config(format!(
                "grid side length must be positive, got {side_length}"
            )));
        }
        Ok(Grid { n, side_length })
    }

    /// Grid with unit pixels, so `side_length == n`.
    pub fn unit(n: usize) -> Result<Self> {
        Grid::new(n, n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn pixel_count(&self) -> usize {
        self.n * self.n
    }

    pub fn pixel_size(&self) -> f64 {
        self.side_length / self.n as f64
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n + col
    }

    /// Physical coordinates of a pixel center.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let p = self.pixel_size();
        let h = self.side_length / 2.0;
        (-h + (col as f64 + 0.5) * p, -h + (row as f64 + 0.5) * p)
    }
}

/// An infinite line at `angle` degrees, displaced by `offset` along the
/// left-hand normal `(-sin, cos)` from the ROI center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub angle: f64,
    pub offset: f64,
}

impl Beam {
    fn direction(&self) -> (f64, f64) {
        let rad = self.angle.to_radians();
        (snap(rad.cos()), snap(rad.sin()))
    }
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else {
        v
    }
}

/// `per_direction` beams for each angle. Offsets are the centers of
/// `per_direction` equal bins covering the projection of the ROI onto the
/// beam normal, so every beam crosses the ROI.
pub fn make_parallel_beams(grid: &Grid, directions: &[f64], per_direction: usize) -> Vec<Beam> {
    let mut beams = Vec::with_capacity(directions.len() * per_direction);
    for &angle in directions {
        let probe = Beam { angle, offset: 0.0 };
        let (c, s) = probe.direction();
        let half = grid.side_length / 2.0 * (c.abs() + s.abs());
        let bin = 2.0 * half / per_direction as f64;
        for i in 0..per_direction {
            let offset = -half + (i as f64 + 0.5) * bin;
            beams.push(Beam { angle, offset });
        }
    }
    beams
}

/// The four-direction arrangement `0, 45, 90, 135` degrees.
pub fn four_direction_beams(grid: &Grid, per_direction: usize) -> Vec<Beam> {
    make_parallel_beams(grid, &[0.0, 45.0, 90.0, 135.0], per_direction)
}

/// Intersection lengths of a beam with every pixel it crosses, sorted by the
/// order of traversal.
pub fn trace_beam(grid: &Grid, beam: &Beam) -> Vec<(usize, f64)> {
    let n = grid.n;
    let p = grid.pixel_size();
    let h = grid.side_length / 2.0;
    let (dx, dy) = beam.direction();
    let mut offset = beam.offset;

    // A beam lying exactly on a pixel edge is moved off it.
    if dx == 0.0 || dy == 0.0 {
        let coord = if dx == 0.0 { -offset } else { offset };
        let cells = (coord + h) / p;
        if (cells - cells.round()).abs() < 1e-12 {
            offset += 1e-9 * p;
        }
    }

    // Point on the line closest to the origin.
    let (ox, oy) = (-dy * offset, dx * offset);

    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (o, d) in [(ox, dx), (oy, dy)] {
        if d == 0.0 {
            if o < -h || o > h {
                return Vec::new();
            }
        } else {
            let a = (-h - o) / d;
            let b = (h - o) / d;
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    if !(t_hi > t_lo) {
        return Vec::new();
    }

    let mut crossings = Vec::with_capacity(2 * n + 2);
    crossings.push(t_lo);
    crossings.push(t_hi);
    for (o, d) in [(ox, dx), (oy, dy)] {
        if d == 0.0 {
            continue;
        }
        for line in 1..n {
            let t = (-h + line as f64 * p - o) / d;
            if t > t_lo && t < t_hi {
                crossings.push(t);
            }
        }
    }
    crossings.sort_by(f64::total_cmp);

    let drop_below = 1e-12 * p;
    let mut row = Vec::with_capacity(2 * n);
    for pair in crossings.windows(2) {
        let len = pair[1] - pair[0];
        if len < drop_below {
            continue;
        }
        let tm = 0.5 * (pair[0] + pair[1]);
        let px = ox + tm * dx;
        let py = oy + tm * dy;
        let col = (((px + h) / p).floor() as isize).clamp(0, n as isize - 1) as usize;
        let r = (((py + h) / p).floor() as isize).clamp(0, n as isize - 1) as usize;
        row.push((r * n + col, len));
    }
    row
}

/// Compressed sparse row matrix of intersection lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SystemMatrix {
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                assert!(j < cols, "column {j} out of range");
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SystemMatrix {
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&j, &l)| l * v[j]).sum()
    }

    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|l| l * l).sum()
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("matvec operand", self.cols, v.len())?;
        Ok((0..self.rows()).map(|i| self.row_dot(i, v)).collect())
    }

    /// Writes one `row col length` line per stored entry.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.rows() {
            let (cols, vals) = self.row(i);
            for (j, v) in cols.iter().zip(vals) {
                writeln!(out, "{i} {j} {v}")?;
            }
        }
        Ok(())
    }
}

pub fn build_system_matrix(grid: &Grid, beams: &[Beam], parallel: bool) -> SystemMatrix {
    let rows: Vec<Vec<(usize, f64)>> = if parallel {
        beams.par_iter().map(|b| trace_beam(grid, b)).collect()
    } else {
        beams.iter().map(|b| trace_beam(grid, b)).collect()
    };
    SystemMatrix::from_rows(grid.pixel_count(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exact chord length of a line through the square, by clipping.
    fn chord(grid: &Grid, beam: &Beam) -> f64 {
        let h = grid.side_length() / 2.0;
        let rad = beam.angle.to_radians();
        let (dx, dy) = (snap(rad.cos()), snap(rad.sin()));
        let (ox, oy) = (-dy * beam.offset, dx * beam.offset);
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (o, d) in [(ox, dx), (oy, dy)] {
            if d == 0.0 {
                if o.abs() > h {
                    return 0.0;
                }
            } else {
                let (a, b) = ((-h - o) / d, (h - o) / d);
                lo = lo.max(a.min(b));
                hi = hi.min(a.max(b));
            }
        }
        (hi - lo).max(0.0)
    }

    #[test]
    fn horizontal_beam_through_row_centers() {
        let grid = Grid::unit(40).unwrap();
        let beam = Beam {
            angle: 0.0,
            offset: 0.5,
        };
        let row = trace_beam(&grid, &beam);
        assert_eq!(row.len(), 40);
        assert!(row.iter().all(|&(_, l)| (l - 1.0).abs() < 1e-12));
        let sum: f64 = row.iter().map(|e| e.1).sum();
        assert_relative_eq!(sum, 40.0, epsilon = 1e-10);
        // offset 0.5 is the center of row 20
        assert!(row.iter().all(|&(j, _)| j / 40 == 20));
    }

    #[test]
    fn diagonal_beam_through_vertices() {
        let grid = Grid::unit(40).unwrap();
        let row = trace_beam(
            &grid,
            &Beam {
                angle: 45.0,
                offset: 0.0,
            },
        );
        assert_eq!(row.len(), 40);
        for (k, &(j, l)) in row.iter().enumerate() {
            assert_eq!(j, grid.index(k, k));
            assert_relative_eq!(l, std::f64::consts::SQRT_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn beam_missing_roi_is_empty() {
        let grid = Grid::unit(10).unwrap();
        for angle in [0.0, 30.0, 45.0, 90.0, 135.0] {
            let row = trace_beam(
                &grid,
                &Beam {
                    angle,
                    offset: 7.1 + 0.01,
                },
            );
            assert!(row.is_empty(), "angle {angle}");
        }
    }

    #[test]
    fn edge_aligned_beam_is_nudged() {
        let grid = Grid::unit(4).unwrap();
        let row = trace_beam(
            &grid,
            &Beam {
                angle: 0.0,
                offset: 0.0,
            },
        );
        assert_eq!(row.len(), 4);
        assert!(row.iter().all(|&(j, _)| j / 4 == 2));
    }

    #[test]
    fn beam_counts() {
        let grid = Grid::unit(40).unwrap();
        assert_eq!(four_direction_beams(&grid, 40).len(), 160);
        let single = make_parallel_beams(&grid, &[0.0], 1);
        assert_eq!(single, vec![Beam { angle: 0.0, offset: 0.0 }]);
        for g in [20, 60, 80] {
            let grid = Grid::unit(g).unwrap();
            assert_eq!(four_direction_beams(&grid, g).len(), 4 * g);
        }
    }

    #[test]
    fn axis_aligned_beams_hit_pixel_centers() {
        let grid = Grid::unit(8).unwrap();
        for beam in make_parallel_beams(&grid, &[0.0, 90.0], 8) {
            let row = trace_beam(&grid, &beam);
            assert_eq!(row.len(), 8);
            assert!(row.iter().all(|&(_, l)| (l - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn single_pixel_matrix() {
        let grid = Grid::new(1, 2.0).unwrap();
        let l = build_system_matrix(&grid, &make_parallel_beams(&grid, &[0.0], 1), false);
        assert_eq!((l.rows(), l.cols(), l.nnz()), (1, 1, 1));
        assert_relative_eq!(l.row(0).1[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn forty_by_forty_arrangement_matrix() {
        let grid = Grid::unit(40).unwrap();
        let beams = four_direction_beams(&grid, 40);
        let l = build_system_matrix(&grid, &beams, true);
        assert_eq!((l.rows(), l.cols()), (160, 1600));
        let sums = l.matvec(&vec![1.0; 1600]).unwrap();
        for (i, beam) in beams.iter().enumerate() {
            assert!(!l.row(i).0.is_empty());
            assert!((sums[i] - chord(&grid, beam)).abs() < 1e-10);
            assert!(l.row(i).0.len() <= 80);
            assert!(l.row(i).1.iter().all(|&v| v > 0.0));
        }
        assert_eq!(l, build_system_matrix(&grid, &beams, false));
    }

    #[test]
    fn mirrored_offset_mirrors_row() {
        let grid = Grid::unit(6).unwrap();
        for (angle, offset) in [(0.0, 1.3), (90.0, 2.2), (0.0, 0.4)] {
            let a = trace_beam(&grid, &Beam { angle, offset });
            let b = trace_beam(&grid, &Beam { angle, offset: -offset });
            let mirror = |j: usize| -> usize {
                let (r, c) = (j / 6, j % 6);
                if angle == 0.0 {
                    (5 - r) * 6 + c
                } else {
                    r * 6 + (5 - c)
                }
            };
            let mut mapped: Vec<(usize, f64)> = a.iter().map(|&(j, l)| (mirror(j), l)).collect();
            let mut other = b.clone();
            mapped.sort_by_key(|e| e.0);
            other.sort_by_key(|e| e.0);
            assert_eq!(mapped.len(), other.len());
            for (p, q) in mapped.iter().zip(&other) {
                assert_eq!(p.0, q.0);
                assert!((p.1 - q.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triplet_export() {
        let grid = Grid::unit(2).unwrap();
        let l = build_system_matrix(&grid, &make_parallel_beams(&grid, &[0.0], 2), false);
        let mut buf = Vec::new();
        l.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "0 0 1\n0 1 1\n1 2 1\n1 3 1\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn row_sum_is_chord_length(
                n in 1usize..30,
                angle in 0.0f64..180.0,
                frac in -1.2f64..1.2,
            ) {
                let grid = Grid::unit(n).unwrap();
                let beam = Beam { angle, offset: frac * n as f64 * 0.71 };
                let row = trace_beam(&grid, &beam);
                let sum: f64 = row.iter().map(|e| e.1).sum();
                prop_assert!((sum - chord(&grid, &beam)).abs() < 1e-10);
                prop_assert!(row.len() <= 2 * n);
                prop_assert!(row.iter().all(|e| e.1 > 0.0 && e.0 < n * n));
            }
        }
    }
}
