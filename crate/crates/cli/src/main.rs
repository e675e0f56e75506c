use clap::{Args, Parser, Subcommand};
use nls_cli::{Mode, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nls", about = "Radial workbench for singular solutions of the stationary NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// run configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// output directory override
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed override
    #[arg(long)]
    seed: Option<u64>,
    /// nodes per decade on the graded mesh
    #[arg(long = "grid-nodes")]
    grid_nodes: Option<usize>,
    /// truncation radius
    #[arg(long)]
    rmax: Option<f64>,
    /// gradient tolerance for the minimization
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// full supercritical pipeline: u0, landscape, minimization, residuals
    Construct(Common),
    /// approximate solution u0 with its certificate only
    ConstructU0(Common),
    /// landscape constants and the sphere check
    Landscape(Common),
    /// subcritical pipeline: ground state, bootstrap, growth diagnostics
    Regularity(Common),
    /// decay diagnostics of the constructed solution
    Decay(Common),
    /// exponent ladder with per-p landscape/solution rows
    Sweep(Common),
    /// Helmholtz kernel tables and identities
    Kernels(Common),
    /// mapping-property test matrix for the resolvent
    Mapcheck(Common),
    /// run whatever mode the config file declares
    Run(Common),
}

fn apply(common: &Common, config: &mut RunConfig, force: Option<Mode>) {
    if let Some(mode) = force {
        config.mode = mode;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.to_string_lossy().to_string();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(npd) = common.grid_nodes {
        config.grid.nodes_per_decade = npd;
    }
    if let Some(rmax) = common.rmax {
        config.grid.r_max = rmax;
    }
    if let Some(tol) = common.tol {
        config.tolerances.gradient = tol;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, force) = match &cli.command {
        Command::Construct(c) => (c, Some(Mode::Construct)),
        Command::ConstructU0(c) => (c, Some(Mode::ConstructU0)),
        Command::Landscape(c) => (c, Some(Mode::Landscape)),
        Command::Regularity(c) => (c, Some(Mode::Regularity)),
        Command::Decay(c) => (c, Some(Mode::Decay)),
        Command::Sweep(c) => (c, Some(Mode::Sweep)),
        Command::Kernels(c) => (c, Some(Mode::Kernels)),
        Command::Mapcheck(c) => (c, Some(Mode::Mapcheck)),
        Command::Run(c) => (c, None),
    };
    let mut config = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    apply(common, &mut config, force);
    match nls_cli::run(&config) {
        Ok(outcome) => {
            println!("report: {}", outcome.report_path.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
