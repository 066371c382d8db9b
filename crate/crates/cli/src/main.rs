use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use podd_cli::config::{parse_config, Kind};
use podd_cli::suite::run_suite;
use podd_cli::{run_experiment, RunError, EXIT_OK, EXIT_VIOLATION};

#[derive(Parser)]
#[command(name = "podd", version, about = "Power-of-D load balancing: bounds, simulation and mean-field checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the analytic clan and chaos bounds.
    Bounds(RunArgs),
    /// Simulate trajectories and dump tail counts.
    Simulate(RunArgs),
    /// Covariances of the empirical measure across replications.
    Chaos(RunArgs),
    /// Clan sizes and intersection frequencies.
    Clan(RunArgs),
    /// Tagged server against the cavity queue.
    Tagged(RunArgs),
    /// Stationary tail fractions by batch means.
    Stationary(RunArgs),
    /// Exhaustive check of the effective-rate formulas.
    RatesCheck(RunArgs),
    /// Colored coupling of the N and N + 1 systems.
    Coupled(RunArgs),
    /// Run the canned suite.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else `out/<kind>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "PODD_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value = "out/suite")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "PODD_WORKERS")]
    workers: Option<usize>,
    /// Run only these experiments.
    #[arg(long = "only", value_delimiter = ',')]
    only: Vec<String>,
}

fn run_one(kind: Kind, args: RunArgs) -> Result<i32, RunError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut spec = parse_config(&text)?;
    if spec.kind != kind {
        return Err(RunError::Config(podd_cli::ConfigError::Schema {
            path: "kind".into(),
            message: format!("config describes `{}` but the `{}` command was used", spec.kind.name(), kind.name()),
        }));
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let out = args
        .out
        .or_else(|| spec.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let report = run_experiment(&spec, &out, args.workers)?;
    if report.outcome.violations > 0 {
        eprintln!("{} violation(s); see {}", report.outcome.violations, out.display());
    }
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds(a) => run_one(Kind::Bounds, a),
        Command::Simulate(a) => run_one(Kind::Simulate, a),
        Command::Chaos(a) => run_one(Kind::Chaos, a),
        Command::Clan(a) => run_one(Kind::Clan, a),
        Command::Tagged(a) => run_one(Kind::Tagged, a),
        Command::Stationary(a) => run_one(Kind::Stationary, a),
        Command::RatesCheck(a) => run_one(Kind::RatesCheck, a),
        Command::Coupled(a) => run_one(Kind::Coupled, a),
        Command::Suite(a) => run_suite(&a.out, a.workers, a.seed, &a.only).map(|reports| {
            let mut code = EXIT_OK;
            for (name, report) in reports {
                eprintln!("{name}: exit {} ({} violation(s))", report.exit_code, report.outcome.violations);
                if report.exit_code != EXIT_OK {
                    code = EXIT_VIOLATION;
                }
            }
            code
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
