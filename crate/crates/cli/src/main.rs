use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qhhg::run::{execute, write_outputs, Command, LoadedConfig};
use qhhg::Error;

/// Driven two-level emitter coupled to quantized field modes.
#[derive(Parser, Debug)]
#[command(name = "qhhg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Top,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set drive.A=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (same as `--set output.dir=...`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Top {
    /// Time-dependent propagation runs.
    Simulate {
        #[command(subcommand)]
        which: Simulate,
        #[command(flatten)]
        common: Common,
    },
    /// Quasi-energies and dressed coefficients of the driven two-level system.
    Floquet {
        #[arg(long = "A")]
        amplitude: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        omega0: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Two-mode cross-correlation: full cutoff equations and first-order predictor.
    CrossCorrelation {
        /// `both`, `full` or `perturbative`.
        #[arg(long)]
        method: Option<String>,
        /// Harmonic orders of one pair, e.g. `4,7`. Repeat for a sweep.
        #[arg(long = "pair", value_name = "N1,N2")]
        pairs: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Independent single-mode runs over a frequency grid.
    ScanModes {
        #[command(flatten)]
        common: Common,
    },
    /// Consistency checks.
    Check {
        #[command(subcommand)]
        which: Check,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand, Debug)]
enum Simulate {
    /// Classical drive, quantized harmonic modes.
    ClassicalDrive,
    /// Classical drive, two jointly propagated modes.
    TwoMode,
    /// Quantized three-mode pulse on a coherent-state lattice.
    Backaction,
}

#[derive(Subcommand, Debug)]
enum Check {
    /// Finite-difference residuals of the operator equations of motion.
    Residuals,
}

fn plan(cli: Cli) -> (Command, Common) {
    match cli.command {
        Top::Simulate { which, common } => {
            let cmd = match which {
                Simulate::ClassicalDrive => Command::ClassicalDrive,
                Simulate::TwoMode => Command::TwoMode,
                Simulate::Backaction => Command::Backaction,
            };
            (cmd, common)
        }
        Top::Floquet { amplitude, omega, omega0, mut common } => {
            let sets = [("floquet.A", amplitude), ("floquet.omega", omega), ("omega0", omega0)];
            for (k, v) in sets {
                if let Some(v) = v {
                    common.overrides.push(format!("{k}={v:e}"));
                }
            }
            (Command::Floquet, common)
        }
        Top::CrossCorrelation { method, pairs, mut common } => {
            if let Some(m) = method {
                common.overrides.push(format!("cross_correlation.method=\"{m}\""));
            }
            if !pairs.is_empty() {
                let list: Vec<String> = pairs.iter().map(|p| format!("[{p}]")).collect();
                common.overrides.push(format!("cross_correlation.pairs=[{}]", list.join(",")));
            }
            (Command::CrossCorrelation, common)
        }
        Top::ScanModes { common } => (Command::ScanModes, common),
        Top::Check { which: Check::Residuals, common } => (Command::CheckResiduals, common),
    }
}

fn workers() -> Result<(), Error> {
    let Ok(v) = std::env::var("QHHG_WORKERS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config { field: "QHHG_WORKERS".into(), msg: format!("expected a positive integer, got `{v}`") })?;
    // a second initialization only happens in embedded use; keep the existing pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cmd: Command, mut common: Common) -> Result<(), Error> {
    workers()?;
    if let Some(dir) = common.out.take() {
        common.overrides.push(format!("output.dir={:?}", dir.display().to_string()));
    }
    let loaded = LoadedConfig::load(common.config.as_deref(), &common.overrides)?;
    let out = execute(cmd, &loaded.config)?;
    let paths = write_outputs(&loaded, &out)?;
    println!("{}", cmd.name());
    for (k, v) in &out.summary {
        println!("  {k} = {v}");
    }
    for p in paths {
        println!("  wrote {}", p.display());
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_physics_guard() => 3,
        Error::Config { .. }
        | Error::InvalidParameter(_)
        | Error::Coverage { .. }
        | Error::Unclassifiable { .. }
        | Error::DimensionCap { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let (cmd, common) = plan(Cli::parse());
    match run(cmd, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qhhg {}: {e}", cmd.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
