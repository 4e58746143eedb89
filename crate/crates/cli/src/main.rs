//! `rmharness` command-line interface.
//!
//! Subcommands: `eval` (judgment tasks to report + transcripts), `rollout`
//! (reward/advantage records for n trajectories per sample), the data
//! pipeline (`gen-pairs`, `dedup`, `difficulty`, `traj-filter`), and
//! `ifcheck` (one validator against a text file).
//!
//! Exit codes: 0 ok, 1 check-false, 2 usage/config error, 3 endpoint
//! failure or aborted episodes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use rmharness::bench::{count_tasks, load_tasks, BenchTask, Track};
use rmharness::config::HarnessConfig;
use rmharness::datapipe::{
    filter_trajectories, similarity_filter, PairSeed, PreferencePair, TrajectoryRecord,
    DEFAULT_DIFFICULTY_ROLLOUTS, DEFAULT_SIMILARITY_THRESHOLD,
};
use rmharness::ifcheck::{render_verdict, run_check, CheckError, CheckSpec};
use rmharness::memory::MemoryMap;
use rmharness::mock::MockScript;
use rmharness::modelclient::HttpChatClient;
use rmharness::runner::{
    run_difficulty, run_eval, run_gen_pairs, run_rollout, ClientSource, Harness,
};

#[derive(Parser)]
#[command(name = "rmharness", version, about = "Agentic reward-model evaluation harness")]
struct Cli {
    /// Path to the TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replay assistant turns from a mock script instead of an endpoint.
    #[arg(long, global = true)]
    mock: Option<PathBuf>,
    /// Override the configured worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate judgment tasks and write report, results, and transcripts.
    Eval {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long, default_value = "run")]
        out: PathBuf,
        /// Comma-separated track filter, e.g. `FG` or `FG,Doc`.
        #[arg(long)]
        tracks: Option<String>,
        /// Judge each pairwise task twice with swapped candidate order.
        #[arg(long)]
        counterbalance: bool,
    },
    /// Sample n trajectories per task and emit reward/advantage records.
    Rollout {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(short, long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        stage: u8,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Generate flawed negatives for (question, context, positive) seeds.
    GenPairs {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drop pairs whose responses are near-duplicates.
    Dedup {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SIMILARITY_THRESHOLD)]
        threshold: f64,
    },
    /// Drop tasks the model solves in all sampled rollouts.
    Difficulty {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long, default_value = "run")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIFFICULTY_ROLLOUTS)]
        rollouts: usize,
    },
    /// Keep episodes that are well-formatted, correct, and tool-using.
    TrajFilter {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one check spec against a text file.
    Ifcheck {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        text: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<HarnessConfig> {
    let mut cfg = match &cli.config {
        Some(path) => HarnessConfig::load(path).context("loading config")?,
        None => HarnessConfig::default(),
    };
    if let Some(workers) = cli.workers {
        cfg.run.workers = workers.max(1);
    }
    Ok(cfg)
}

fn build_harness(cli: &Cli, cfg: &HarnessConfig) -> Result<Harness> {
    let source = match &cli.mock {
        Some(path) => {
            let script = MockScript::load(path).context("loading mock script")?;
            ClientSource::Mock(Arc::new(script))
        }
        None => {
            if cfg.endpoint.url.is_empty() {
                bail!("no endpoint url configured; set [endpoint].url or pass --mock <script>");
            }
            ClientSource::Http(Arc::new(HttpChatClient::new(cfg.endpoint_config())))
        }
    };
    let mut harness = Harness::from_config(cfg, source);
    if let Some(workers) = cli.workers {
        harness.workers = workers.max(1);
    }
    Ok(harness)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let content =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<T: serde::Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn parse_tracks(spec: &str) -> Result<Vec<Track>> {
    spec.split(',')
        .map(|t| match t.trim() {
            "FG" => Ok(Track::Fg),
            "Doc" => Ok(Track::Doc),
            "IF" => Ok(Track::If),
            other => bail!("unknown track {other:?} (expected FG, Doc, IF)"),
        })
        .collect()
}

fn load_bench_tasks(path: &Path) -> Result<Vec<BenchTask>> {
    let tasks = load_tasks(path).map_err(|e| anyhow::anyhow!("{e}"))?;
    let counts = count_tasks(&tasks);
    eprintln!(
        "loaded {} tasks ({})",
        counts.total,
        counts
            .per_track
            .iter()
            .map(|(t, n)| format!("{t}: {n}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(tasks)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Eval { tasks, out, tracks, counterbalance } => {
            let mut tasks = load_bench_tasks(tasks)?;
            if let Some(spec) = tracks {
                let wanted = parse_tracks(spec)?;
                tasks.retain(|t| wanted.contains(&t.track));
            }
            let mut harness = build_harness(&cli, &cfg)?;
            harness.counterbalance = harness.counterbalance || *counterbalance;
            fs::create_dir_all(out)?;
            let run = run_eval(&tasks, &harness, out)?;
            println!("{}", render_report(&run.report));
            if run.aborted > 0 {
                eprintln!("{} episode(s) aborted", run.aborted);
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rollout { tasks, n, stage, out } => {
            let tasks = load_bench_tasks(tasks)?;
            let harness = build_harness(&cli, &cfg)?;
            fs::create_dir_all(out)?;
            let run = run_rollout(&tasks, &harness, *n, *stage, out)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            println!(
                "wrote {} rollout records for {} tasks to {}",
                run.records.len(),
                tasks.len(),
                out.display()
            );
            if run.aborted > 0 {
                eprintln!("{} rollout(s) aborted", run.aborted);
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenPairs { samples, out } => {
            let seeds: Vec<PairSeed> = read_jsonl(samples)?;
            let harness = build_harness(&cli, &cfg)?;
            let (pairs, dropped) =
                run_gen_pairs(&seeds, &harness, out).map_err(|e| anyhow::anyhow!("{e}"))?;
            println!("kept {} pairs, dropped {dropped}", pairs.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Dedup { pairs, out, threshold } => {
            let input: Vec<PreferencePair> = read_jsonl(pairs)?;
            let before = input.len();
            let kept = similarity_filter(input, *threshold);
            write_jsonl(out, &kept)?;
            println!("kept {} of {before} pairs", kept.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Difficulty { tasks, out, rollouts } => {
            let tasks = load_bench_tasks(tasks)?;
            let harness = build_harness(&cli, &cfg)?;
            fs::create_dir_all(out)?;
            let (kept, records) = run_difficulty(tasks, &harness, *rollouts, out)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let skipped = records.iter().filter(|r| r.error.is_some()).count();
            println!("kept {} of {} samples", kept.len(), records.len());
            if skipped > 0 {
                eprintln!("{skipped} sample(s) skipped on client errors");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::TrajFilter { records, out } => {
            let input: Vec<TrajectoryRecord> = read_jsonl(records)?;
            let before = input.len();
            let kept = filter_trajectories(input);
            write_jsonl(out, &kept)?;
            println!("kept {} of {before} trajectories", kept.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Ifcheck { spec, text } => {
            let raw = fs::read_to_string(spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let spec: CheckSpec = serde_json::from_str(&raw).context("parsing check spec")?;
            let content =
                fs::read_to_string(text).with_context(|| format!("reading {}", text.display()))?;
            let mut memory = MemoryMap::new();
            memory
                .bind_text(spec.text_key(), content)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            match run_check(&spec, &memory) {
                Ok(pass) => {
                    println!("{}", render_verdict(pass));
                    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
                }
                Err(e @ CheckError::Spec(_)) => {
                    eprintln!("error: {e}");
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(anyhow::anyhow!("{e}")),
            }
        }
    }
}

/// Human-readable table: per-track and per-mode accuracy plus the failure
/// histogram.
fn render_report(report: &rmharness::bench::Report) -> String {
    let mut out = String::new();
    out.push_str("track     correct  total  accuracy\n");
    for (track, stats) in &report.per_track {
        out.push_str(&format!(
            "{track:<9} {:>7}  {:>5}  {:>8.4}\n",
            stats.correct, stats.total, stats.accuracy
        ));
    }
    out.push_str(&format!(
        "overall (macro avg over tracks): {:.4} [{} / {} correct]\n",
        report.overall, report.correct, report.total
    ));
    out.push_str("\nmode       correct  total  accuracy\n");
    for (mode, stats) in &report.per_mode {
        out.push_str(&format!(
            "{mode:<10} {:>7}  {:>5}  {:>8.4}\n",
            stats.correct, stats.total, stats.accuracy
        ));
    }
    if !report.failures.is_empty() {
        out.push_str("\nfailures: ");
        let parts: Vec<String> =
            report.failures.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&parts.join(", "));
        out.push('\n');
    }
    out
}
