use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stochform::aggregate::{aggregate, parse_grouping};
use stochform::config::{ExperimentConfig, Mode};
use stochform::corpus::ingest_corpus;
use stochform::experiment::{load_records, run_experiment, select_problems};
use stochform::pipeline::{ChatClient, FixtureStore, LiveClient, LiveConfig, RecordingClient, ReplayClient};
use stochform::replay::{verify_replay, DEFAULT_REPLAY_CONFIG};
use stochform::report::{emit_full_report, emit_report, to_csv, to_json, Format};
use stochform_core::detequiv::{compile_spec, parse_compact_spec};
use stochform_core::model::{emit_lp, parse_lp, Model};
use stochform_core::softscore::score_models;
use stochform_core::solver::solve;

#[derive(Parser)]
#[command(name = "stochform", version, about = "Score LLM-generated stochastic optimization models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) an experiment sweep and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the mode set in the config file.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Soft-score a generated LP against a ground truth (.lp or .spec).
    Score {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        generated: PathBuf,
    },
    /// Compile a compact spec into its deterministic-equivalent LP.
    Reformulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an LP file and print the solution as JSON.
    Solve {
        #[arg(long)]
        lp: PathBuf,
    },
    /// Aggregate a records file.
    Report {
        #[arg(long)]
        records: PathBuf,
        /// Comma-separated keys: model, method, category, instance, problem, run.
        #[arg(long = "group-by")]
        group_by: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Write files here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the replay experiment twice and check the outputs are identical.
    ReplayVerify {
        #[arg(long, default_value = DEFAULT_REPLAY_CONFIG)]
        config: PathBuf,
    },
}

type CliResult = Result<(), String>;

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_model(path: &Path) -> Result<Model, String> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "spec") {
        let spec = parse_compact_spec(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        compile_spec(&spec).map_err(|e| format!("{}: {e}", path.display()))
    } else {
        parse_lp(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult {
    println!("{}", serde_json::to_string_pretty(value).map_err(|e| e.to_string())?);
    Ok(())
}

fn cmd_run(config: &Path, mode: Option<Mode>) -> CliResult {
    let mut cfg = ExperimentConfig::load(config).map_err(|e| e.to_string())?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if cfg.temperature != 0.0 {
        eprintln!("warning: running with temperature {}", cfg.temperature);
    }
    let corpus = ingest_corpus(&cfg.corpus).map_err(|e| e.to_string())?;
    let corpus = select_problems(&cfg, corpus).map_err(|e| e.to_string())?;
    let store = FixtureStore::new(&cfg.client.fixtures);
    let live = || -> Result<LiveClient, String> {
        let mut lc = LiveConfig::from_env(&cfg.client.endpoint, &cfg.client.api_key_env).map_err(|e| e.to_string())?;
        lc.requests_per_minute = cfg.client.requests_per_minute;
        Ok(LiveClient::new(lc))
    };
    let client: Box<dyn ChatClient> = match cfg.mode {
        Mode::Replay => Box::new(ReplayClient::new(store)),
        Mode::Live => Box::new(live()?),
        Mode::Record => Box::new(RecordingClient::new(live()?, store)),
    };
    let records = run_experiment(&cfg, &corpus, client.as_ref()).map_err(|e| e.to_string())?;
    let dir = cfg.experiment_dir();
    emit_full_report(&records, &dir.join("report")).map_err(|e| e.to_string())?;
    let failed = records.iter().filter(|r| r.pipeline_error.is_some()).count();
    println!("{} records ({} pipeline failures) in {}", records.len(), failed, dir.display());
    Ok(())
}

fn cmd_score(truth: &Path, generated: &Path) -> CliResult {
    let t = load_model(truth)?;
    let g = load_model(generated)?;
    let ts = solve(&t).map_err(|e| e.to_string())?;
    let gs = solve(&g).map_err(|e| e.to_string())?;
    print_json(&score_models(&t, &g, Some(&ts), Some(&gs)))
}

fn cmd_report(records: &Path, group_by: &str, format: Format, out: Option<&Path>) -> CliResult {
    let grouping = parse_grouping(group_by).map_err(|e| e.to_string())?;
    let records = load_records(records).map_err(|e| e.to_string())?;
    if !records.iter().any(|r| r.is_scored()) {
        return Err("no scored records".into());
    }
    let agg = aggregate(&records, &grouping);
    match out {
        Some(dir) => {
            for p in emit_report(&[agg], dir, &[format]).map_err(|e| e.to_string())? {
                println!("{}", p.display());
            }
        }
        None => match format {
            Format::Csv => print!("{}", to_csv(&agg).map_err(|e| e.to_string())?),
            Format::Json => print!("{}", to_json(&agg).map_err(|e| e.to_string())?),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, mode } => cmd_run(config, *mode),
        Command::Score { truth, generated } => cmd_score(truth, generated),
        Command::Reformulate { spec, out } => load_model(spec).and_then(|m| {
            std::fs::write(out, emit_lp(&m)).map_err(|e| format!("{}: {e}", out.display()))
        }),
        Command::Solve { lp } => load_model(lp).and_then(|m| print_json(&solve(&m).map_err(|e| e.to_string())?)),
        Command::Report { records, group_by, format, out } => cmd_report(records, group_by, *format, out.as_deref()),
        Command::ReplayVerify { config } => verify_replay(config).and_then(|summary| {
            print!("{summary}");
            if summary.passed() {
                Ok(())
            } else {
                Err("replay verification failed".into())
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
