use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beacon::config::load_config;
use beacon::metrics::MetricReport;
use beacon::models::Family;
use beacon::pipeline::{render_comparison, render_monitor, Options, Pipeline, StationData};
use beacon::report::EvaluationTable;
use beacon::Result;

const EXIT_FAULT: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "beacon", version, about = "Lighthouse light-sensor fault detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, short, global = true, env = "BEACON_CONFIG")]
    config: Option<PathBuf>,

    /// Restrict to one configured station.
    #[arg(long, global = true)]
    station: Option<String>,

    /// Restrict to one model family (dt, rf, gb, mlp).
    #[arg(long, global = true)]
    family: Option<Family>,

    /// Search an evenly spaced subset of each grid.
    #[arg(long, global = true)]
    fast_grid: bool,

    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Generate synthetic station datasets.
    Generate,
    /// Grid-search hyperparameters with k-fold cross-validation.
    Tune,
    /// Fit models on each training split.
    Train,
    /// Score fitted models on each test split.
    Evaluate,
    /// Friedman test and post hoc comparison of the evaluated families.
    Compare,
    /// Write drifted copies of each dataset.
    Drift,
    /// Degradation curves and fault verdicts.
    Monitor,
    /// Every stage in order.
    All,
}

fn print_tables(table: &EvaluationTable) {
    let tables: [(&str, fn(&MetricReport) -> f64); 3] = [
        ("accuracy (%)", |m| m.accuracy),
        ("F1 for class on (%)", |m| m.on.f1),
        ("F1 for class off (%)", |m| m.off.f1),
    ];
    for (title, pick) in tables {
        println!("{}", table.render(title, pick));
    }
}

fn compare(p: &Pipeline, table: &EvaluationTable, required: bool) -> Result<()> {
    if table.stations().len() < 2 || table.families().len() < 2 {
        let msg = "comparison needs at least two stations and two families";
        if required {
            return Err(beacon::Error::Input(msg.into()));
        }
        log::warn!("{msg}; skipping");
        return Ok(());
    }
    print!("{}", render_comparison(&p.compare(table)?));
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| beacon::Error::Config("--config is required".into()))?;
    let config = load_config(config_path)?;
    let options = Options {
        station: cli.station.clone(),
        family: cli.family,
        fast_grid: cli.fast_grid,
        out_dir: cli.out.clone(),
    };
    let p = Pipeline::new(config, options)?;
    let stations: Vec<StationData> = p.load_stations()?;

    match cli.command {
        Command::Generate => {
            for path in p.generate(&stations)? {
                println!("{}", path.display());
            }
        }
        Command::Tune => {
            for ((station, family), t) in p.tune(&stations)? {
                println!(
                    "{station} {family}: cv accuracy {:.4} with {}",
                    t.candidates[t.best_index].mean_accuracy,
                    serde_json::to_string(&t.best).unwrap_or_default()
                );
            }
        }
        Command::Train => {
            for (station, family) in p.train(&stations, None)?.keys() {
                println!("trained {family} for {station}");
            }
        }
        Command::Evaluate => print_tables(&p.evaluate(&stations, None)?),
        Command::Compare => compare(&p, &p.read_evaluation()?, true)?,
        Command::Drift => {
            for r in p.drift(&stations)? {
                println!(
                    "{} min: {} -> {} rows ({} pairs dropped, {} out of coverage)",
                    r.minutes, r.input_rows, r.output_rows, r.dropped_pairs, r.dropped_out_of_coverage
                );
            }
        }
        Command::Monitor => {
            let (reports, summary) = p.monitor(&stations, None)?;
            print!("{}", render_monitor(&reports, &summary));
            return Ok(summary.fault);
        }
        Command::All => {
            p.generate(&stations)?;
            let tuned = p.tune(&stations)?;
            let models = p.train(&stations, Some(&tuned))?;
            let table = p.evaluate(&stations, Some(&models))?;
            print_tables(&table);
            compare(&p, &table, false)?;
            p.drift(&stations)?;
            let (reports, summary) = p.monitor(&stations, Some(&models))?;
            print!("{}", render_monitor(&reports, &summary));
            return Ok(summary.fault);
        }
    }
    Ok(false)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_FAULT),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
