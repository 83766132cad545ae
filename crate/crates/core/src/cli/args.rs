//! Command-line parsing for the `isumap` binary. Values come from an
//! optional TOML config file first; flags override them.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{PipelineConfig, SweepSpec};
use crate::datasets::DatasetKind;
use crate::error::{Error, Result};
use crate::local::OuterMode;
use crate::merge::DisconnectPolicy;
use crate::mscheme::MScheme;

#[derive(Debug, Parser)]
#[command(name = "isumap", version, about = "Merge k-NN star metrics with m-schemes and embed the geodesic metric in 2D")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline once and write coords.csv, plot.svg and report.json.
    Run(PipelineArgs),
    /// Run a scheme x parameter grid and write a gallery index.
    Sweep {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// TOML file with `schemes`, `params` and `workers`.
        #[arg(long)]
        sweep_spec: Option<PathBuf>,
        /// Concurrent cells (0: one per core).
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OuterModeArg {
    None,
    Chain,
    Ambient,
}

#[derive(Debug, Default, Args)]
pub struct PipelineArgs {
    /// TOML file with pipeline settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// swiss_roll, swiss_roll_hole, torus, two_moons, mobius or csv.
    #[arg(long)]
    pub dataset: Option<DatasetKind>,
    /// Point cloud file for `--dataset csv`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// min, ext, mv:<a>, mw:<c>, mpi:<c> or h.
    #[arg(long)]
    pub scheme: Option<MScheme>,
    #[arg(long)]
    pub subtract_rho: bool,
    #[arg(long, value_enum)]
    pub outer_mode: Option<OuterModeArg>,
    /// Factor of the chain outer mode.
    #[arg(long)]
    pub a: Option<f64>,
    /// error, largest or cap[:factor].
    #[arg(long)]
    pub on_disconnect: Option<DisconnectPolicy>,
    /// Seeds both the dataset and the eigen solver.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl PipelineArgs {
    /// The config file (or the defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_toml_file(path)?,
            None => PipelineConfig::default(),
        };
        self.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        if let Some(kind) = self.dataset {
            cfg.dataset.kind = kind;
        }
        if let Some(path) = &self.input {
            cfg.dataset.path = Some(path.clone());
        }
        if let Some(n) = self.n {
            cfg.dataset.n = n;
        }
        if let Some(noise) = self.noise {
            cfg.dataset.noise = noise;
        }
        if let Some(seed) = self.seed {
            cfg.dataset.seed = seed;
            cfg.mds.seed = seed;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(scheme) = &self.scheme {
            cfg.scheme = scheme.clone();
        }
        if self.subtract_rho {
            cfg.subtract_rho = true;
        }
        match self.outer_mode {
            Some(OuterModeArg::None) => cfg.outer = OuterMode::None,
            Some(OuterModeArg::Ambient) => cfg.outer = OuterMode::Ambient,
            Some(OuterModeArg::Chain) => {
                let a = match cfg.outer {
                    OuterMode::Chain { a } => a,
                    _ => 1.0,
                };
                cfg.outer = OuterMode::Chain { a };
            }
            None => {}
        }
        if let Some(a) = self.a {
            match &mut cfg.outer {
                OuterMode::Chain { a: current } => *current = a,
                other => {
                    return Err(Error::Config(format!("--a only applies to the chain outer mode, not {other:?}")));
                }
            }
        }
        if let Some(policy) = self.on_disconnect {
            cfg.on_disconnect = policy;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(())
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let report = super::run(&cfg)?;
            let paths = report.outputs.as_ref().expect("run writes outputs");
            println!(
                "embedded {} of {} points, stress {:.6e} after {} iterations; wrote {}",
                report.n_embedded,
                report.n_points,
                report.final_stress,
                report.iterations_used,
                paths.report.display()
            );
        }
        Command::Sweep {
            pipeline,
            sweep_spec,
            workers,
        } => {
            let mut cfg = match &pipeline.config {
                Some(path) => PipelineConfig::from_toml_file(path)?,
                None => PipelineConfig {
                    dataset: crate::datasets::DatasetSpec::new(DatasetKind::SwissRollHole, 1000),
                    ..PipelineConfig::default()
                },
            };
            pipeline.apply(&mut cfg)?;
            cfg.validate()?;
            let mut spec = match &sweep_spec {
                Some(path) => SweepSpec::from_toml_file(path)?,
                None => SweepSpec::default(),
            };
            if let Some(w) = workers {
                spec.workers = w;
            }
            let report = super::sweep(&cfg, &spec)?;
            println!(
                "{} cells, {} failed; gallery at {}",
                report.cells.len(),
                report.failures(),
                report.gallery_html.display()
            );
        }
    }
    Ok(())
}

/// Entry point of the binary. Exit code 2 means the neighbourhood graph was
/// disconnected under the `error` policy; 1 is any other failure.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Disconnected { sizes }) => {
            eprintln!(
                "error: the neighbourhood graph has {} connected components with sizes {sizes:?}; \
                 raise --k or pass --on-disconnect largest|cap[:factor]",
                sizes.len()
            );
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
