use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperlaw::reports::{self, Outcome, RunConfig, RunFlags};
use hyperlaw::Error;

#[derive(Parser)]
#[command(name = "hyperlaw", version, about = "Constitutive-set analysis of 2x2 conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for all output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Record wall-clock times in the reports.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Hypothesis verdicts over the window and the tilt and level grids.
    Analyze(Common),
    /// Shock curves with Liu/Lax checks and the dissipation identity.
    Hugoniot(Common),
    /// One tilted entropy level set with its arc decomposition and q̃ extrema.
    Levelset(Common),
    /// Search for T4 configurations in the constitutive set.
    T4Search {
        #[command(flatten)]
        common: Common,
        /// Exit with status 3 if any candidate passes.
        #[arg(long)]
        expect_none: bool,
    },
    /// Emit the configuration of the Eulerian/Lagrangian transformed system.
    Transform(Common),
    /// Level set, q̃ zero points and shock curves drawn as SVG.
    Figure8(Common),
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("HYPERLAW_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("HYPERLAW_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(RunConfig::from_json(&text)?)
}

fn write_all(out: &Path, outcome: &Outcome) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    for a in &outcome.artifacts {
        let path = out.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    let (common, expect_none) = match &cli.command {
        Command::T4Search { common, expect_none } => (common, *expect_none),
        Command::Analyze(c) | Command::Hugoniot(c) | Command::Levelset(c) | Command::Transform(c) | Command::Figure8(c) => {
            (c, false)
        }
    };
    let cfg = load(&common.config)?;
    let flags = RunFlags { timing: common.timing };
    let outcome = match cli.command {
        Command::Analyze(_) => reports::analyze(&cfg, flags)?,
        Command::Hugoniot(_) => reports::hugoniot(&cfg, flags)?,
        Command::Levelset(_) => reports::levelset(&cfg, flags)?,
        Command::T4Search { .. } => reports::search(&cfg, flags)?,
        Command::Transform(_) => reports::transform_config(&cfg, flags)?,
        Command::Figure8(_) => reports::figure8(&cfg, flags)?,
    };
    write_all(&common.out, &outcome)?;
    println!("{}", outcome.summary);
    for a in &outcome.artifacts {
        println!("wrote {}", common.out.join(&a.name).display());
    }
    if expect_none && outcome.passing > 0 {
        eprintln!("expected no T4 candidates, found {}", outcome.passing);
        return Ok(3);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
