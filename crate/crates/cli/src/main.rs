use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use happer_cli::config::Command;
use happer_cli::{execute, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK};

/// Scans of the Happer spin model. Exit status: 0 when every check passes,
/// 1 when a check fails, 2 on errors.
#[derive(Parser)]
#[command(name = "happer", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Labeled energies over an x grid with crossing annotations.
    Spectrum(Common),
    /// Chern numbers per level, or of the crossing cluster with --cluster.
    Chern(Common),
    /// Geometric phases of the latitude loop at --theta0.
    Phase(Common),
    /// Driven adiabatic loops: summary table plus trajectory files.
    Dynamics(Common),
    /// Projected crossing-cluster bands against a spin semimetal.
    WeylCompare(Common),
}

/// Every flag is optional; unset flags fall back to the config file, then
/// to the defaults.
#[derive(Args)]
struct Common {
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Nuclear spin L (e.g. 1, 3/2).
    #[arg(long)]
    l: Option<String>,
    /// Comma-separated x values.
    #[arg(long, conflicts_with = "x_range")]
    x: Option<String>,
    /// x grid as lo:hi:n.
    #[arg(long)]
    x_range: Option<String>,
    /// Spin-axis coupling y.
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Axis: x, y, z or three components.
    #[arg(long, allow_hyphen_values = true)]
    axis: Option<String>,
    /// Polar angles of the axis in the xz-plane, lo:hi:n (spectrum only).
    #[arg(long)]
    axis_sweep: Option<String>,
    /// Static field direction theta,phi.
    #[arg(long, allow_hyphen_values = true)]
    field: Option<String>,
    /// Loop latitude (radians; pi/6 style accepted).
    #[arg(long)]
    theta0: Option<String>,
    /// Mesh rings, optionally N:uniform or N:equal-area.
    #[arg(long)]
    mesh: Option<String>,
    /// Chern scheme: link or finite-difference.
    #[arg(long)]
    method: Option<String>,
    /// Chern convention: primary (flux/4pi) or standard (flux/2pi).
    #[arg(long)]
    convention: Option<String>,
    /// Output format: csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// Seed for randomized invariant checks.
    #[arg(long)]
    seed: Option<String>,
    /// Number of randomized invariant checks.
    #[arg(long)]
    checks: Option<String>,
    /// 1-based level numbers, comma-separated.
    #[arg(long)]
    levels: Option<String>,
    /// Work with the crossing cluster at x* (chern, phase).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    cluster: Option<String>,
    /// Drive frequency (dynamics).
    #[arg(long)]
    omega: Option<String>,
    /// Drive frequency as a multiple of the minimum gap (dynamics).
    #[arg(long)]
    omega_factor: Option<String>,
    /// Field turns per run (dynamics).
    #[arg(long)]
    periods: Option<String>,
    /// Momentum radii (weyl-compare).
    #[arg(long)]
    k: Option<String>,
    /// Keep every n-th trajectory sample (dynamics).
    #[arg(long)]
    stride: Option<String>,
}

impl Common {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("l", &self.l),
            ("x", &self.x),
            ("x-range", &self.x_range),
            ("y", &self.y),
            ("axis", &self.axis),
            ("axis-sweep", &self.axis_sweep),
            ("field", &self.field),
            ("theta0", &self.theta0),
            ("mesh", &self.mesh),
            ("method", &self.method),
            ("convention", &self.convention),
            ("format", &self.format),
            ("out", &self.out),
            ("seed", &self.seed),
            ("checks", &self.checks),
            ("levels", &self.levels),
            ("cluster", &self.cluster),
            ("omega", &self.omega),
            ("omega-factor", &self.omega_factor),
            ("periods", &self.periods),
            ("k", &self.k),
            ("stride", &self.stride),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Cmd::Spectrum(c) => (Command::Spectrum, c),
        Cmd::Chern(c) => (Command::Chern, c),
        Cmd::Phase(c) => (Command::Phase, c),
        Cmd::Dynamics(c) => (Command::Dynamics, c),
        Cmd::WeylCompare(c) => (Command::WeylCompare, c),
    };
    let code = match execute(command, common.config.as_deref(), &common.flags()) {
        Ok(table) if table.passed => EXIT_OK,
        Ok(table) => {
            for c in table.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} ({})", c.name, c.detail);
            }
            EXIT_CHECK_FAILED
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
