use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gamedyn::experiments::{self, classify_dir, ExperimentName, RunOverrides};
use gamedyn::{Error, ModelKind};

const EXIT_USAGE: u8 = 1;
const EXIT_DIVERGED: u8 = 2;

#[derive(Parser)]
#[command(name = "gamedyn", version, about = "Continuous-time learning dynamics: experiments and classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write its artifacts.
    Run(RunArgs),
    /// Classify models from passivity-scan records in a directory.
    Classify {
        #[arg(long)]
        indir: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// example1 | example2 | exrd-counterexample | zerosum-cycle | contractive | passivity-scan
    experiment: Option<String>,
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T", visible_alias = "horizon")]
    horizon: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    outdir: Option<PathBuf>,
    #[arg(long)]
    record_every: Option<usize>,
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn overrides(args: &RunArgs) -> Result<RunOverrides, Error> {
    let models = match &args.models {
        Some(names) => Some(
            names
                .iter()
                .map(|s| s.trim().parse::<ModelKind>())
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    Ok(RunOverrides {
        experiment: args.experiment.clone(),
        models,
        dt: args.dt,
        horizon: args.horizon,
        lambda: args.lambda,
        gamma: args.gamma,
        seed: args.seed,
        outdir: args.outdir.clone(),
        record_every: args.record_every,
        ..Default::default()
    })
}

fn run(args: RunArgs) -> Result<bool, Error> {
    let cli = overrides(&args)?;
    let merged = match &args.config {
        Some(path) => RunOverrides::from_json_file(path)?.merged_with(cli),
        None => cli,
    };
    let name: ExperimentName = merged
        .experiment
        .as_deref()
        .ok_or_else(|| Error::Config("no experiment given".into()))?
        .parse()?;
    let default_outdir = PathBuf::from("out").join(name.as_str());
    let spec = merged.into_spec(name, &default_outdir)?;
    let outcome = experiments::run(&spec)?;

    println!("{:<28} {:>12} {:>12} {:>10} {:>12}", "model", "avg_reward", "sup_regret", "bound", "final_dist");
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
    for s in &outcome.summaries {
        match &s.error {
            Some(e) => println!("{:<28} diverged: {e}", s.model),
            None => println!(
                "{:<28} {:>12} {:>12} {:>10} {:>12}",
                s.model,
                fmt(s.final_avg_reward),
                fmt(s.sup_regret),
                fmt(s.storage_bound),
                fmt(s.final_dist)
            ),
        }
    }
    if let Some(rows) = &outcome.classification {
        print_rows(rows);
    }
    println!("wrote {} files to {}", outcome.files.len(), spec.outdir.display());
    Ok(!outcome.any_diverged())
}

fn print_rows(rows: &[experiments::ClassificationRow]) {
    println!("{:<12} {:>14} {:>14} {:>14}", "model", "finite_regret", "delta", "ei");
    for r in rows {
        println!(
            "{:<12} {:>14} {:>14} {:>14}",
            r.model.name(),
            r.finite_regret_evidence.as_str(),
            r.delta_evidence.as_str(),
            r.ei_evidence.as_str()
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Classify { indir } => classify_dir(&indir).map(|(rows, files)| {
            print_rows(&rows);
            for f in files {
                println!("wrote {}", f.display());
            }
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_DIVERGED),
        Err(e @ Error::IntegrationDiverged { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DIVERGED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
