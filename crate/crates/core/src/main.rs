use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{Days, Months, NaiveDate};
use clap::{Parser, Subcommand};

use potrend::config::PipelineConfig;
use potrend::pipeline::{write_synthetic, Pipeline, TrajectoryRequest};
use potrend::{Error, Result};

/// Weekly stock-index trend prediction from news sentiment.
#[derive(Debug, Parser)]
#[command(name = "potrend", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set pot.lags=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Run even if upstream artifacts no longer match their manifests.
    #[arg(long, global = true)]
    force: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, clean and label the news file.
    Ingest,
    /// Build weekly anchors, changes and labels from the price file.
    Label,
    /// Select the POT vocabulary and compute weekly POT models.
    Pot {
        /// Also write the POT trajectory of this word.
        #[arg(long, requires_all = ["from", "to"])]
        word: Option<String>,
        /// Start of the trajectory, YYYY-MM or YYYY-MM-DD.
        #[arg(long, value_parser = parse_from)]
        from: Option<NaiveDate>,
        /// End of the trajectory, YYYY-MM or YYYY-MM-DD.
        #[arg(long, value_parser = parse_to)]
        to: Option<NaiveDate>,
    },
    /// Train the article sentiment extractor.
    TrainExtractor,
    /// Score articles and aggregate weekly sentiment.
    Score,
    /// Train the weekly trend classifier.
    TrainSummarizer,
    /// Evaluate on the held-out weeks and write reports.
    Evaluate,
    /// Write plot-ready CSVs from existing artifacts.
    ExportPlotData {
        /// Words whose POT trajectories to export. Repeatable.
        #[arg(long)]
        word: Vec<String>,
    },
    /// Run every stage in order.
    Run,
    /// Write a synthetic corpus and a matching configuration.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the effective configuration.
    ShowConfig,
}

fn parse_date(s: &str) -> std::result::Result<(NaiveDate, bool), String> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok((d, false));
    }
    NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d")
        .map(|d| (d, true))
        .map_err(|_| format!("{s:?} is not YYYY-MM or YYYY-MM-DD"))
}

fn parse_from(s: &str) -> std::result::Result<NaiveDate, String> {
    parse_date(s).map(|(d, _)| d)
}

/// A bare month means its last day.
fn parse_to(s: &str) -> std::result::Result<NaiveDate, String> {
    match parse_date(s)? {
        (d, true) => Ok(d + Months::new(1) - Days::new(1)),
        (d, false) => Ok(d),
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = PipelineConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::ShowConfig => {
            print!("{}", config.to_toml());
            return Ok(());
        }
        Command::Synth { out } => {
            let s = write_synthetic(&config.synth, &out)?;
            println!(
                "synth: {} articles over {} weeks in {}; run with --config {}",
                s.articles,
                s.weeks,
                out.display(),
                s.config_path.display()
            );
            return Ok(());
        }
        _ => {}
    }
    let pipeline = Pipeline::open(config, cli.force)?;
    let lines = match cli.command {
        Command::Ingest => vec![pipeline.ingest()?],
        Command::Label => vec![pipeline.label()?],
        Command::Pot { word, from, to } => {
            let request = match (word, from, to) {
                (Some(word), Some(from), Some(to)) => {
                    if from > to {
                        return Err(Error::Config(format!("--from {from} is after --to {to}")));
                    }
                    Some(TrajectoryRequest { word, from, to })
                }
                _ => None,
            };
            vec![pipeline.pot(request.as_ref())?]
        }
        Command::TrainExtractor => vec![pipeline.train_extractor()?],
        Command::Score => vec![pipeline.score()?],
        Command::TrainSummarizer => vec![pipeline.train_summarizer()?],
        Command::Evaluate => vec![pipeline.evaluate()?],
        Command::ExportPlotData { word } => vec![pipeline.export_plot_data(&word)?],
        Command::Run => pipeline.run_all()?,
        Command::Synth { .. } | Command::ShowConfig => unreachable!("handled above"),
    };
    for line in lines {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
