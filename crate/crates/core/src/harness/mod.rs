//! Experiment pipeline: geometry, phantom, forward model, noise, both
//! reconstruction stages and metrics, plus the gridding-scale sweep.

pub mod io;
pub mod metrics;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{build_system_matrix, four_direction_beams, Grid, SystemMatrix};
use crate::nf::{nf_fit_field, TrustRegionConfig};
use crate::phantoms::{
    add_uniform_noise, forward_project, phantom_flame, phantom_two_gaussians, true_abs_coeffs,
    NoiseSpec, Phantom,
};
use crate::solver::{dpa_run, residual, DpaConfig, PerturbationRecord, SolverReport};
use crate::spectroscopy::LineTable;
use crate::stage1::{solve_abs_coeffs, ArtConfig};
use crate::superiorization::{sup_dpa_run, SupConfig, TargetFunction, TikVariant};

pub use metrics::{relative_error, Metrics};

macro_rules! named_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::Parse(format!(
                        concat!("unknown ", stringify!($name), " {:?}"),
                        s
                    ))),
                }
            }
        }
    };
}

named_enum!(PhantomKind { Flame => "flame", Gaussians => "gaussians" });
named_enum!(Algorithm { Dpa => "dpa", SupDpa => "sup-dpa", Nf => "nf" });
named_enum!(Prior { Tv => "tv", Tik => "tik" });

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Dpa, Algorithm::SupDpa, Algorithm::Nf];
}

impl PhantomKind {
    /// Box the initial guesses are drawn from; also the solver bounds.
    pub fn x_interval(&self) -> (f64, f64) {
        match self {
            PhantomKind::Flame => (400.0, 2000.0),
            PhantomKind::Gaussians => (800.0, 2400.0),
        }
    }

    pub fn y_interval(&self) -> (f64, f64) {
        (0.005, 0.2)
    }

    pub fn default_prior(&self) -> Prior {
        match self {
            PhantomKind::Flame => Prior::Tv,
            PhantomKind::Gaussians => Prior::Tik,
        }
    }

    pub fn build(&self, grid: &Grid) -> Phantom {
        match self {
            PhantomKind::Flame => phantom_flame(grid, &Default::default()),
            PhantomKind::Gaussians => phantom_two_gaussians(grid, &Default::default()),
        }
    }
}

impl Prior {
    pub fn default_eta_x(&self) -> f64 {
        match self {
            Prior::Tv => 5e6,
            Prior::Tik => 5e4,
        }
    }
}

pub fn parse_tik_variant(s: &str) -> Result<TikVariant> {
    match s {
        "standard" => Ok(TikVariant::Standard),
        "as-printed" => Ok(TikVariant::AsPrinted),
        _ => Err(Error::Parse(format!("unknown Tik variant {s:?}"))),
    }
}

pub fn tik_variant_name(v: TikVariant) -> &'static str {
    match v {
        TikVariant::Standard => "standard",
        TikVariant::AsPrinted => "as-printed",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub phantom: PhantomKind,
    pub grid: usize,
    pub beams_per_direction: usize,
    pub noise: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub prior: Prior,
    pub tik_variant: TikVariant,
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub eta_x: f64,
    pub eta_y: f64,
    pub gamma: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub clamp_y: bool,
    pub exact_stage1: bool,
    pub single_thread: bool,
    pub dump_stage1: bool,
    pub art: ArtConfig,
    pub nf: TrustRegionConfig,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for a phantom: 40 x 40 grid, 40 beams per direction, 2%
    /// noise, the phantom's usual prior.
    pub fn for_phantom(phantom: PhantomKind) -> Self {
        let prior = phantom.default_prior();
        let dpa = DpaConfig::default();
        ExperimentConfig {
            phantom,
            grid: 40,
            beams_per_direction: 40,
            noise: 0.02,
            seed: 2023,
            algorithm: Algorithm::SupDpa,
            prior,
            tik_variant: TikVariant::Standard,
            lambda_x: dpa.lambda_x,
            lambda_y: dpa.lambda_y,
            eta_x: prior.default_eta_x(),
            eta_y: 10.0,
            gamma: 0.999,
            max_iter: dpa.max_iter,
            tol: dpa.residual_tol,
            clamp_y: false,
            exact_stage1: false,
            single_thread: false,
            dump_stage1: false,
            art: ArtConfig::default(),
            nf: TrustRegionConfig::default(),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid == 0 || self.beams_per_direction == 0 {
            return Err(Error::Config("grid and beam counts must be positive".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::Config(format!("noise level must be nonnegative, got {}", self.noise)));
        }
        self.sup_config().validate()?;
        self.art.validate()?;
        self.nf_config().validate()
    }

    pub fn dpa_config(&self) -> DpaConfig {
        DpaConfig {
            lambda_x: self.lambda_x,
            lambda_y: self.lambda_y,
            max_iter: self.max_iter,
            residual_tol: self.tol,
            x_bounds: self.phantom.x_interval(),
            y_bounds: self.phantom.y_interval(),
            clamp_y: self.clamp_y,
            ..DpaConfig::default()
        }
    }

    pub fn sup_config(&self) -> SupConfig {
        let target = match self.prior {
            Prior::Tv => TargetFunction::tv(),
            Prior::Tik => TargetFunction::Tik {
                variant: self.tik_variant,
            },
        };
        SupConfig {
            target,
            eta_x0: self.eta_x,
            eta_y0: self.eta_y,
            gamma: self.gamma,
            ..SupConfig::tv(self.dpa_config())
        }
    }

    pub fn nf_config(&self) -> TrustRegionConfig {
        TrustRegionConfig {
            x_bounds: self.phantom.x_interval(),
            y_bounds: self.phantom.y_interval(),
            ..self.nf.clone()
        }
    }

    pub fn manifest(&self) -> io::Manifest {
        let mut m = io::Manifest::new();
        m.set("phantom", self.phantom);
        m.set("grid", self.grid);
        m.set("beams_per_direction", self.beams_per_direction);
        m.set("beams_total", 4 * self.beams_per_direction);
        m.set("noise", self.noise);
        m.set("seed", self.seed);
        m.set("algo", self.algorithm);
        m.set("prior", self.prior);
        m.set("tik_variant", tik_variant_name(self.tik_variant));
        m.set("lambda_x", self.lambda_x);
        m.set("lambda_y", self.lambda_y);
        m.set("eta_x", self.eta_x);
        m.set("eta_y", self.eta_y);
        m.set("gamma", self.gamma);
        m.set("max_iter", self.max_iter);
        m.set("tol", self.tol);
        m.set("clamp_y", self.clamp_y);
        let (xl, xh) = self.phantom.x_interval();
        let (yl, yh) = self.phantom.y_interval();
        m.set("x_bounds", format!("{xl},{xh}"));
        m.set("y_bounds", format!("{yl},{yh}"));
        m.set("exact_stage1", self.exact_stage1);
        m.set("single_thread", self.single_thread);
        m.set("art_relaxation", self.art.relaxation);
        m.set("art_sweeps", self.art.sweeps);
        m.set("art_nonneg", self.art.nonneg);
        m.set("art_residual_tol", self.art.residual_tol);
        match &self.art.superiorize {
            Some(s) => {
                m.set("art_superiorize", "tv");
                m.set("art_eta_rel", s.eta_rel);
                m.set("art_gamma", s.gamma);
                m.set("art_decay", s.decay);
            }
            None => m.set("art_superiorize", "off"),
        }
        let nf = self.nf_config();
        m.set("nf_delta0", nf.delta0());
        m.set("nf_delta_min", nf.delta_min);
        m.set("nf_f_tol", nf.f_tol);
        m.set("nf_max_iter", nf.max_iter);
        m.set("nf_expand", nf.expand);
        m.set("nf_contract", nf.contract);
        m
    }
}

/// Everything up to and including stage 1.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub table: LineTable,
    pub grid: Grid,
    pub matrix: SystemMatrix,
    pub phantom: Phantom,
    pub sinogram: Vec<Vec<f64>>,
    pub true_coeffs: Vec<Vec<f64>>,
    /// Stage-1 output, or the true coefficients with `exact_stage1`.
    pub coeffs: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

/// Initial guesses drawn uniformly from the phantom's intervals, `x` first.
/// A separate stream of the experiment seed keeps them independent of the
/// measurement noise.
pub fn initial_guess(phantom: PhantomKind, m: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let (xl, xh) = phantom.x_interval();
    let (yl, yh) = phantom.y_interval();
    let x0 = (0..m).map(|_| rng.gen_range(xl..xh)).collect();
    let y0 = (0..m).map(|_| rng.gen_range(yl..yh)).collect();
    (x0, y0)
}

/// Geometry, phantom, forward projection, noise and stage 1.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let parallel = !cfg.single_thread;
    let table = LineTable::synthetic_h2o();
    let grid = Grid::unit(cfg.grid).map_err(|e| e.in_stage("geometry"))?;
    let beams = four_direction_beams(&grid, cfg.beams_per_direction);
    let matrix = build_system_matrix(&grid, &beams, parallel);
    let phantom = cfg.phantom.build(&grid);
    let true_coeffs = true_abs_coeffs(&table, &phantom).map_err(|e| e.in_stage("phantom"))?;
    let clean = forward_project(&matrix, &table, &phantom).map_err(|e| e.in_stage("forward"))?;
    let sinogram = add_uniform_noise(
        &clean,
        &NoiseSpec {
            level: cfg.noise,
            seed: cfg.seed,
        },
    );
    let coeffs = if cfg.exact_stage1 {
        true_coeffs.clone()
    } else {
        solve_abs_coeffs(&matrix, &sinogram, &cfg.art, cfg.grid, parallel)
            .map_err(|e| e.in_stage("stage1"))?
    };
    let (x0, y0) = initial_guess(cfg.phantom, grid.pixel_count(), cfg.seed);
    Ok(Prepared {
        table,
        grid,
        matrix,
        phantom,
        sinogram,
        true_coeffs,
        coeffs,
        x0,
        y0,
    })
}

#[derive(Debug, Clone)]
pub struct Stage2Outcome {
    pub algorithm: Algorithm,
    pub x: Field,
    pub y: Field,
    pub metrics: Metrics,
    /// Descent-pairs trajectory; `None` for the per-pixel baseline.
    pub report: Option<SolverReport>,
    /// Per-pixel iteration counts of the baseline.
    pub nf_iterations: Option<Vec<usize>>,
    pub nf_failed: Option<Vec<bool>>,
}

impl Stage2Outcome {
    pub fn perturbations(&self) -> &[PerturbationRecord] {
        self.report.as_ref().map_or(&[], |r| &r.perturbations)
    }
}

/// Runs the selected stage-2 algorithm on prepared coefficients. Only this
/// call is timed.
pub fn run_stage2(cfg: &ExperimentConfig, prep: &Prepared, algorithm: Algorithm) -> Result<Stage2Outcome> {
    let n = cfg.grid;
    let (a, x0, y0) = (&prep.coeffs, &prep.x0, &prep.y0);
    let start = Instant::now();
    let (x, y, report, nf_iterations, nf_failed) = match algorithm {
        Algorithm::Dpa => {
            let r = dpa_run(&prep.table, a, &cfg.dpa_config(), x0, y0)?;
            (r.x_final.clone(), r.y_final.clone(), Some(r), None, None)
        }
        Algorithm::SupDpa => {
            let r = sup_dpa_run(&prep.table, a, &cfg.sup_config(), n, x0, y0)?;
            (r.x_final.clone(), r.y_final.clone(), Some(r), None, None)
        }
        Algorithm::Nf => {
            let r = nf_fit_field(&prep.table, a, x0, y0, &cfg.nf_config(), !cfg.single_thread)?;
            (r.x_final, r.y_final, None, Some(r.iterations), Some(r.failed))
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    let iterations = match (&report, &nf_iterations) {
        (Some(r), _) => r.iterations,
        (None, Some(its)) => its.iter().copied().max().unwrap_or(0),
        (None, None) => 0,
    };
    let metrics = Metrics {
        error_x: relative_error(&x, &prep.phantom.x_true)?,
        error_y: relative_error(&y, &prep.phantom.y_true)?,
        wall_time,
        iterations,
        final_residual: residual(&prep.table, a, &x, &y)?,
    };
    Ok(Stage2Outcome {
        algorithm,
        x,
        y,
        metrics,
        report,
        nf_iterations,
        nf_failed,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub outcome: Stage2Outcome,
}

/// Full two-stage reconstruction. Artifacts are written when `cfg.out` is set.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let prepared = prepare(cfg)?;
    let outcome = run_stage2(cfg, &prepared, cfg.algorithm).map_err(|e| e.in_stage("stage2"))?;
    if let Some(dir) = &cfg.out {
        write_run_artifacts(cfg, &prepared, &outcome, dir)?;
    }
    Ok(RunOutput { prepared, outcome })
}

fn write_truth(dir: &Path, prep: &Prepared) -> Result<()> {
    let n = prep.grid.n();
    io::write_file(dir, "x_true.csv", &io::grid_csv(&prep.phantom.x_true, n))?;
    io::write_file(dir, "y_true.csv", &io::grid_csv(&prep.phantom.y_true, n))
}

pub fn write_run_artifacts(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    outcome: &Stage2Outcome,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let n = prep.grid.n();
    io::write_file(dir, "manifest.txt", &cfg.manifest().render())?;
    io::write_file(dir, "metrics.csv", &outcome.metrics.to_csv())?;
    io::write_file(
        dir,
        "timing.txt",
        &format!("stage2_wall_time_s = {}\n", outcome.metrics.wall_time),
    )?;
    write_truth(dir, prep)?;
    io::write_file(dir, "x_rec.csv", &io::grid_csv(&outcome.x, n))?;
    io::write_file(dir, "y_rec.csv", &io::grid_csv(&outcome.y, n))?;
    if let Some(report) = &outcome.report {
        io::write_file(dir, "residuals.csv", &io::residuals_csv(report))?;
    }
    if let Some(its) = &outcome.nf_iterations {
        let failed = outcome.nf_failed.as_deref().unwrap_or(&[]);
        let mut text = String::from("pixel,iterations,failed\n");
        for (j, it) in its.iter().enumerate() {
            text.push_str(&format!("{j},{it},{}\n", failed.get(j).copied().unwrap_or(false)));
        }
        io::write_file(dir, "nf_iterations.csv", &text)?;
    }
    if cfg.dump_stage1 {
        let sub = dir.join("stage1");
        std::fs::create_dir_all(&sub)?;
        for (k, ak) in prep.coeffs.iter().enumerate() {
            io::write_file(&sub, &format!("a_{k:02}.csv"), &io::grid_csv(ak, n))?;
        }
    }
    Ok(())
}

/// Phantom, geometry and noisy sinogram without reconstruction.
pub fn simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<Prepared> {
    let cfg = ExperimentConfig {
        exact_stage1: true,
        ..cfg.clone()
    };
    let prep = prepare(&cfg)?;
    std::fs::create_dir_all(dir)?;
    let mut manifest = cfg.manifest();
    manifest.set("lines", prep.table.len());
    manifest.set("beams", prep.matrix.rows());
    io::write_file(dir, "manifest.txt", &manifest.render())?;
    io::write_file(dir, "lines.toml", &prep.table.to_toml_string())?;
    write_truth(dir, &prep)?;
    io::write_file(dir, "sinogram.csv", &io::sinogram_csv(&prep.sinogram))?;
    let mut triplets = Vec::new();
    prep.matrix.write_triplets(&mut triplets)?;
    std::fs::write(dir.join("system_matrix.txt"), triplets)?;
    Ok(prep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scale: usize,
    pub algorithm: Algorithm,
    pub metrics: Metrics,
}

/// Runs every algorithm at each grid scale `G` with `G` beams per direction.
/// Stage 1 is computed once per scale and shared; cells run one at a time so
/// timings do not interfere.
pub fn run_grid_sweep(base: &ExperimentConfig, scales: &[usize]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &g in scales {
        let cfg = ExperimentConfig {
            grid: g,
            beams_per_direction: g,
            out: None,
            ..base.clone()
        };
        let prep = prepare(&cfg)?;
        for algorithm in Algorithm::ALL {
            let outcome = run_stage2(&cfg, &prep, algorithm).map_err(|e| e.in_stage("stage2"))?;
            rows.push(SweepRow {
                scale: g,
                algorithm,
                metrics: outcome.metrics,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("scale,algo,time,error_x,error_y\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scale, r.algorithm, r.metrics.wall_time, r.metrics.error_x, r.metrics.error_y
        ));
    }
    out
}
