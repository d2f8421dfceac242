use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use tas_core::harness::{
    io, parse_tik_variant, run_grid_sweep, run_pipeline, simulate, sweep_csv, Algorithm,
    ExperimentConfig, PhantomKind, Prior,
};

#[derive(Parser)]
#[command(name = "tas", version, about = "Two-stage TAS reconstruction of temperature and H2O concentration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write phantom fields, the line table, the system matrix and the noisy sinogram.
    Simulate(Common),
    /// Run both stages and write reconstructions, metrics and a manifest.
    Reconstruct(Common),
    /// Run every algorithm over several grid scales with G beams per direction.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated grid scales.
        #[arg(long, value_delimiter = ',', default_value = "20,40,60,80")]
        scales: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "gaussians", value_parser = parse_phantom)]
    phantom: PhantomKind,
    #[arg(long, default_value_t = 40)]
    grid: usize,
    /// Defaults to the grid size.
    #[arg(long)]
    beams_per_direction: Option<usize>,
    /// Relative uniform noise level on the absorbance.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(long, default_value_t = 2023)]
    seed: u64,
    #[arg(long, default_value = "sup-dpa", value_parser = parse_algo)]
    algo: Algorithm,
    /// Superiorization prior; defaults to tv for the flame and tik for the gaussians.
    #[arg(long, value_parser = parse_prior)]
    prior: Option<Prior>,
    /// `standard` or `as-printed`.
    #[arg(long, default_value = "standard")]
    tik_variant: String,
    #[arg(long)]
    lambda_x: Option<f64>,
    #[arg(long)]
    lambda_y: Option<f64>,
    /// Initial temperature perturbation step; defaults depend on the prior.
    #[arg(long)]
    eta_x: Option<f64>,
    #[arg(long)]
    eta_y: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Stage-2 residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Feed the true absorption coefficients to stage 2.
    #[arg(long)]
    exact_stage1: bool,
    /// Run everything on one thread.
    #[arg(long)]
    single_thread: bool,
    /// Also clamp concentration to its box after each update.
    #[arg(long)]
    clamp_y: bool,
    /// Write the stage-1 coefficients, one grid per line.
    #[arg(long)]
    dump_stage1: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_phantom(s: &str) -> Result<PhantomKind, String> {
    s.parse().map_err(|e: tas_core::Error| e.to_string())
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: tas_core::Error| e.to_string())
}

fn parse_prior(s: &str) -> Result<Prior, String> {
    s.parse().map_err(|e: tas_core::Error| e.to_string())
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::for_phantom(self.phantom);
        cfg.grid = self.grid;
        cfg.beams_per_direction = self.beams_per_direction.unwrap_or(self.grid);
        cfg.noise = self.noise;
        cfg.seed = self.seed;
        cfg.algorithm = self.algo;
        if let Some(prior) = self.prior {
            cfg.prior = prior;
            cfg.eta_x = prior.default_eta_x();
        }
        cfg.tik_variant = parse_tik_variant(&self.tik_variant)?;
        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field {
                    cfg.$field = v;
                })*
            };
        }
        overlay!(lambda_x, lambda_y, eta_x, eta_y, gamma, max_iter, tol);
        cfg.exact_stage1 = self.exact_stage1;
        cfg.single_thread = self.single_thread;
        cfg.clamp_y = self.clamp_y;
        cfg.dump_stage1 = self.dump_stage1;
        cfg.out = Some(self.out.clone());
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.config()?;
            let prep = simulate(&cfg, &common.out)?;
            println!(
                "wrote {} beams x {} lines to {}",
                prep.matrix.rows(),
                prep.table.len(),
                common.out.display()
            );
        }
        Command::Reconstruct(common) => {
            let cfg = common.config()?;
            let run = run_pipeline(&cfg)?;
            let m = &run.outcome.metrics;
            println!(
                "{} on {}: error_x {:.6} error_y {:.6} iterations {} residual {:.6e} stage-2 time {:.4} s",
                cfg.algorithm, cfg.phantom, m.error_x, m.error_y, m.iterations, m.final_residual, m.wall_time
            );
        }
        Command::Sweep { common, scales } => {
            if scales.is_empty() {
                bail!("no grid scales given");
            }
            let cfg = common.config()?;
            let rows = run_grid_sweep(&cfg, &scales)?;
            std::fs::create_dir_all(&common.out)?;
            io::write_file(&common.out, "sweep.csv", &sweep_csv(&rows))?;
            let mut manifest = cfg.manifest();
            manifest.set(
                "scales",
                scales.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            );
            io::write_file(&common.out, "manifest.txt", &manifest.render())?;
            for r in &rows {
                println!(
                    "G={:<3} {:<8} time {:.4} s  error_x {:.5}  error_y {:.5}",
                    r.scale, r.algorithm, r.metrics.wall_time, r.metrics.error_x, r.metrics.error_y
                );
            }
        }
    }
    Ok(())
}
