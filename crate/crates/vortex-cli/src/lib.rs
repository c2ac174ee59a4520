//! Command-line driver for `vortex-core`: configuration, subcommands and
//! reproducible artifacts (CSV, JSON and a run manifest).
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 solver
//! failure or a certification bound missed, 4 disagreement with a published
//! table or statement (artifacts are still written).

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser};
use serde_json::json;

pub use config::{Command, ConfigError, RunConfig};
use report::{Manifest, Output};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Solver(vortex_core::Error),
    Io(std::io::Error),
}

impl From<vortex_core::Error> for Failure {
    fn from(e: vortex_core::Error) -> Self {
        use vortex_core::Error::*;
        match e {
            Domain(_) | Incompatible { .. } | KernelDimension(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Solver(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_, io) => Failure::Io(io),
            e => Failure::Invalid(e.to_string()),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "{m}"),
            Failure::Solver(e) => write!(f, "solver failure: {e}"),
            Failure::Io(e) => write!(f, "I/O failure: {e}"),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Solver(_) => EXIT_SOLVER,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

/// Result of a completed run.
#[derive(Debug)]
pub struct Report {
    pub exit_code: i32,
    pub status: String,
    pub out_dir: PathBuf,
}

/// Validates `config`, runs its command and writes `manifest.json` next to
/// the artifacts. Validation failures write nothing.
pub fn run(config: RunConfig) -> Result<Report, Failure> {
    let cfg = config.validate()?;
    let command = cfg.command.expect("validated");
    let mut out = Output::new(&cfg.out_dir)?;
    let result = match command {
        Command::Spectrum => commands::spectrum(&cfg, &mut out),
        Command::Classify => commands::classify(&cfg, &mut out),
        Command::Zeros => commands::zeros(&cfg, &mut out),
        Command::Branch => commands::branch(&cfg, &mut out),
        Command::Beta => commands::beta(&cfg, &mut out),
        Command::FieldExport => commands::field_export(&cfg, &mut out),
    };
    let (outcome, exit_code, status) = match result {
        Ok(o) => {
            let (code, status) = if o.checks.iter().any(|c| !c.pass) {
                (EXIT_SOLVER, "certification bound missed".to_string())
            } else if o.reference.iter().any(|c| !c.pass) {
                (EXIT_MISMATCH, "mismatch with published results".to_string())
            } else {
                (EXIT_OK, "ok".to_string())
            };
            (o, code, status)
        }
        Err(Failure::Io(e)) => return Err(Failure::Io(e)),
        Err(f) => (commands::Outcome::default(), f.exit_code(), f.to_string()),
    };
    let manifest = Manifest {
        tool: "vortex",
        library_version: vortex_core::VERSION,
        command: command.name(),
        config_sha256: cfg.hash(),
        config: cfg.clone(),
        tolerances: json!({
            "residual": cfg.residual_tol,
            "zero_location": cfg.location_tol,
            "spectrum_ladder": cfg.spectrum_tol,
            "spectrum_fd": cfg.fd_tol,
            "quadrature_agreement": cfg.quadrature_tol,
            "projection": commands::PROJECTION_TOL,
            "flux": commands::FLUX_TOL,
            "weak_div_j": commands::DIV_J_TOL,
            "mean_j": commands::MEAN_J_TOL,
            "rotation": commands::ROTATION_TOL,
            "sector_leak": commands::SECTOR_TOL,
            "perturbative_c": commands::PERTURBATIVE_TOL,
            "branch_fit": 1e-3,
        }),
        seeds: json!({ "contour_jitter": 0 }),
        reference_comparisons: outcome.reference,
        checks: outcome.checks,
        summary: outcome.summary,
        artifacts: out.artifacts.clone(),
        status: status.clone(),
        exit_code,
    };
    out.json("manifest.json", &manifest)?;
    Ok(Report { exit_code, status, out_dir: cfg.out_dir })
}

/// Flags override the JSON config field of the same name.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON config document; flags take precedence over its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long = "tau-re", global = true, allow_hyphen_values = true)]
    pub tau_re: Option<f64>,
    #[arg(long = "tau-im", global = true)]
    pub tau_im: Option<f64>,
    /// Flux quanta per cell.
    #[arg(long = "n", global = true)]
    pub n: Option<usize>,
    /// Rotation order of the symmetry sector.
    #[arg(long = "k", global = true)]
    pub k: Option<usize>,
    /// Sector index: eigenvalue e^{2 pi i r / k}.
    #[arg(long = "r", global = true)]
    pub r: Option<usize>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long = "s-min", global = true)]
    pub s_min: Option<f64>,
    #[arg(long = "s-max", global = true)]
    pub s_max: Option<f64>,
    #[arg(long = "s-points", global = true)]
    pub s_points: Option<usize>,
    /// Amplitude for `field-export`.
    #[arg(long = "s", global = true)]
    pub s: Option<f64>,
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long = "fd-side", global = true)]
    pub fd_side: Option<usize>,
    #[arg(long = "grid-side", global = true)]
    pub grid_side: Option<usize>,
    #[arg(long = "gauss-order", global = true)]
    pub gauss_order: Option<usize>,
    #[arg(long = "gauss-panels", global = true)]
    pub gauss_panels: Option<usize>,
    #[arg(long = "field-side", global = true)]
    pub field_side: Option<usize>,
    #[arg(long = "residual-tol", global = true)]
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Parser)]
#[command(name = "vortex", version, about = "Abrikosov vortex lattices near the normal state")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl Cli {
    /// The effective configuration: defaults, then the config file, then flags.
    pub fn config(&self) -> Result<RunConfig, ConfigError> {
        let o = &self.overrides;
        let mut c = match &o.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        c.command = Some(self.command);
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { c.$f = v; } )* };
        }
        set!(tau_re, tau_im, n, k, r, kappa, s_min, s_max, s_points, s, n_max, levels, fd_side, grid_side, gauss_order, gauss_panels, field_side, residual_tol);
        if let Some(p) = &o.out {
            c.out_dir = p.clone();
        }
        Ok(c)
    }
}

/// Parses `args`, runs, prints a one-line status and returns the exit code.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = cli.config().map_err(Failure::from).and_then(run);
    match outcome {
        Ok(r) => {
            let line = format!("{}: {} ({})", cli.command.name(), r.status, r.out_dir.join("manifest.json").display());
            if r.exit_code == EXIT_OK {
                println!("{line}");
            } else {
                eprintln!("{line}");
            }
            r.exit_code
        }
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
