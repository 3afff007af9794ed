use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use estavg::config::{ConfigError, ExperimentConfig, Study};
use estavg::experiment::{boolean_realization, run_experiment, RunError};
use estavg::output::{summary_csv, write_outputs};
use estavg::presets;
use estavg::verify::{run_suite, SuiteSize};

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURES: u8 = 3;

#[derive(Parser)]
#[command(name = "estavg", version, about = "Monte-Carlo studies of estimator averaging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write summary.csv and config.json.
    Run(RunArgs),
    /// Inspect the shipped presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Run the randomized solver and error-bound checks.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Print every preset name with a description.
    List,
    /// Print a preset as a config file.
    Show { name: String },
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Name of a shipped preset.
    #[arg(long)]
    preset: Option<String>,
    /// Multiplier on a preset's replication count.
    #[arg(long, default_value_t = 1.0, requires = "preset")]
    scale_reps: f64,
    /// Multiplier on a preset's bootstrap size.
    #[arg(long, default_value_t = 1.0, requires = "preset")]
    scale_b: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write one CSV line per replicate.
    #[arg(long)]
    records: bool,
    /// Export the disc sets of the first N replicates of a Boolean run.
    #[arg(long, value_name = "N")]
    export_discs: Option<usize>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => presets::find(name)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown preset {name:?}")))?
            .scaled(args.scale_reps, args.scale_b),
        (None, None) => unreachable!("clap requires one source"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn export_discs(cfg: &ExperimentConfig, count: usize, dir: &std::path::Path) -> Result<(), Box<dyn std::error::Error>> {
    if cfg.study != Study::Boolean {
        return Err(format!("--export-discs needs a boolean study, not {}", cfg.study).into());
    }
    let dir = dir.join("discs");
    std::fs::create_dir_all(&dir)?;
    for i in 0..count.min(cfg.reps) {
        let discs = boolean_realization(cfg, i)?;
        let file = std::fs::File::create(dir.join(format!("rep{i:05}.txt")))?;
        discs.write_xyr(std::io::BufWriter::new(file))?;
    }
    Ok(())
}

fn run(args: RunArgs) -> ExitCode {
    let cfg = match load(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let output = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e @ RunError::ExcessFailures { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURES);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = write_outputs(&args.out, &cfg, &output, args.records) {
        eprintln!("error: cannot write to {}: {e}", args.out.display());
        return ExitCode::FAILURE;
    }
    if let Some(count) = args.export_discs {
        if let Err(e) = export_discs(&cfg, count, &args.out) {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    print!("{}", summary_csv(&output.summary));
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Presets { action: PresetAction::List } => {
            for p in presets::all() {
                println!("{:<28} {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Presets { action: PresetAction::Show { name } } => match presets::find(&name) {
            Some(p) => {
                print!("{}", p.config.echo());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown preset {name:?}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Verify { seed } => {
            let results = run_suite(SuiteSize::default(), seed);
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
