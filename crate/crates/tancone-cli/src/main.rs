//! `tancone`: run blow-up and J-holomorphic pipelines on generated examples
//! or mesh files and write CSV tables.
//!
//! Exit status: 0 when every assertion of the pipeline holds, 2 when one
//! fails, 1 on bad input.

// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod config;
mod mesh;
mod pipelines;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{RawConfig, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "tancone", version, about = "Tangent cones of calibrated currents and J-holomorphic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Write the example mesh in the text mesh format
    Generate,
    /// Total mass and ball masses along the ladder
    Mass,
    /// Calibration defect of the chosen field
    Defect,
    /// Density trace with conical defect and Hopf mass per annulus
    DensitySweep,
    /// Smallest C1 making the weighted density monotone
    Monotonicity,
    /// Hopf projection mass estimate per annulus
    HopfMass,
    /// Direction clusters of the slices along the ladder
    Directions,
    /// Transport gap between directions at r and r/2
    UniquenessGap,
    /// Good-slice search and Poincaré check per scale
    Goodslice,
    /// Dirichlet energy decay of the Hopf projection
    Dirichlet,
    /// Fit theta(r) = Theta + C1 r^gamma
    RateFit,
    /// Energy profile of a sampled map
    JholoEnergy,
    /// Weighted monotonicity of the scaled map energy
    JholoMonotonicity,
    /// Rate fit of the scaled map energy and the tangent-map gap slope
    JholoRate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Mass => "mass",
            Command::Defect => "defect",
            Command::DensitySweep => "density-sweep",
            Command::Monotonicity => "monotonicity",
            Command::HopfMass => "hopf-mass",
            Command::Directions => "directions",
            Command::UniquenessGap => "uniqueness-gap",
            Command::Goodslice => "goodslice",
            Command::Dirichlet => "dirichlet",
            Command::RateFit => "rate-fit",
            Command::JholoEnergy => "jholo-energy",
            Command::JholoMonotonicity => "jholo-monotonicity",
            Command::JholoRate => "jholo-rate",
        }
    }
}

/// Flags override values from `--config`.
#[derive(Args, Debug, Default)]
struct Opts {
    /// `key = value` run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Example name (see README for the list)
    #[arg(long, global = true)]
    example: Option<String>,
    /// Mesh file instead of an example
    #[arg(long, global = true)]
    mesh: Option<PathBuf>,
    /// Output directory; CSV goes to stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Mesh size, or relative finite-difference step for maps
    #[arg(long, global = true)]
    h: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated centre x0
    #[arg(long, global = true, allow_hyphen_values = true)]
    center: Option<String>,
    #[arg(long = "r-max", global = true)]
    r_max: Option<String>,
    #[arg(long, global = true)]
    levels: Option<u64>,
    /// Ladder ratio q in (0, 1)
    #[arg(long, global = true)]
    ratio: Option<String>,
    /// omega0, tubular or special-legendrian
    #[arg(long, global = true)]
    field: Option<String>,
    /// Tube radius of the tubular field
    #[arg(long, global = true)]
    delta: Option<String>,
    /// Known limit for rate fits, e.g. `pi` or `2pi`
    #[arg(long = "theta-hat", global = true)]
    theta_hat: Option<String>,
    /// Slope of the perturbed structure
    #[arg(long, global = true, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, global = true)]
    radius: Option<String>,
    /// Power k of the holomorphic graph z -> (z, z^k)
    #[arg(long, global = true)]
    power: Option<u64>,
    /// Number of complex lines
    #[arg(long, global = true)]
    lines: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<u64>,
}

impl Opts {
    fn raw(&self) -> Result<RawConfig> {
        let mut raw = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                RawConfig::parse(&text).with_context(|| format!("in {}", p.display()))?
            }
            None => RawConfig::default(),
        };
        let strings = [
            ("example", &self.example),
            ("h", &self.h),
            ("center", &self.center),
            ("r_max", &self.r_max),
            ("ratio", &self.ratio),
            ("field", &self.field),
            ("delta", &self.delta),
            ("theta_hat", &self.theta_hat),
            ("c", &self.c),
            ("radius", &self.radius),
        ];
        for (k, v) in strings {
            if let Some(v) = v {
                raw.set(k, v);
            }
        }
        let ints = [("seed", self.seed), ("levels", self.levels), ("power", self.power), ("lines", self.lines), ("samples", self.samples)];
        for (k, v) in ints {
            if let Some(v) = v {
                raw.set(k, v);
            }
        }
        if let Some(m) = &self.mesh {
            raw.set("mesh", m.display());
        }
        if let Some(o) = &self.out {
            raw.set("out", o.display());
        }
        Ok(raw)
    }
}

fn emit(cfg: &RunConfig, file: &str, text: &str) -> Result<()> {
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(file);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = RunConfig::resolve(&cli.opts.raw()?)?;
    let outcome = match cli.command {
        Command::Generate => {
            let c = pipelines::generate_current(&cfg)?;
            let name = cfg.example.as_deref().unwrap_or("mesh");
            emit(&cfg, &format!("{name}.mesh"), &mesh::write(&c))?;
            return Ok(true);
        }
        Command::Mass => pipelines::mass(&cfg)?,
        Command::Defect => pipelines::defect(&cfg)?,
        Command::DensitySweep => pipelines::density_sweep(&cfg)?,
        Command::Monotonicity => pipelines::monotonicity(&cfg)?,
        Command::HopfMass => pipelines::hopf_mass(&cfg)?,
        Command::Directions => pipelines::directions(&cfg)?,
        Command::UniquenessGap => pipelines::uniqueness_gap(&cfg)?,
        Command::Goodslice => pipelines::goodslice(&cfg)?,
        Command::Dirichlet => pipelines::dirichlet(&cfg)?,
        Command::RateFit => pipelines::rate_fit(&cfg)?,
        Command::JholoEnergy => pipelines::jholo_energy(&cfg)?,
        Command::JholoMonotonicity => pipelines::jholo_monotonicity(&cfg)?,
        Command::JholoRate => pipelines::jholo_rate(&cfg)?,
    };
    let name = cli.command.name();
    let text = outcome.table.render(name, &cfg, outcome.pass);
    emit(&cfg, &format!("{name}.csv"), &text)?;
    if !outcome.pass {
        eprintln!("{name}: assertion failed");
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
