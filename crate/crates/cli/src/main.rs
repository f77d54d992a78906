//! `clawforge`: generate task snapshots, run agents over them, and report.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use clawforge::agents::AgentConfig;
use clawforge::generator::{
    builtin_templates, generate_snapshot, load_snapshot, load_templates, parse_counts, write_snapshot, PromptStyle,
    SnapshotConfig,
};
use clawforge::report::{ReportFormat, RunReport};
use clawforge::rollout::{read_records, ResultsLog, DEFAULT_BUDGET};
use clawforge::runner::{home_dir, run_batch};

#[derive(Debug, Parser)]
#[command(name = "clawforge", version, about = "Generate, run and score stateful CLI workflow tasks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Compile scenario templates into a self-validated task snapshot.
    Generate {
        /// Directory of scenario templates (defaults to the built-in set).
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Output directory for the snapshot.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tasks per family, e.g. `all=2` or `all=1,inbox=3`.
        #[arg(long, default_value = "all=1")]
        counts: String,
        /// Comma-separated prompt styles.
        #[arg(long, value_delimiter = ',', default_value = "directive,conversational")]
        styles: Vec<PromptStyle>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Run an agent over every task in a snapshot.
    Run {
        #[arg(long)]
        snapshot: PathBuf,
        /// replay, inspect_then_act, skip_inspection, random_valid[:seed],
        /// bridge:<command> or bridge:tcp://host:port
        #[arg(long)]
        agent: AgentConfig,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        /// Episodes to run concurrently (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Results log; episode records are appended, one JSON object per line.
        #[arg(long)]
        out: PathBuf,
        /// Also write the JSON run report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "run")]
        label: String,
        /// Seconds to wait for each reply from a bridged agent.
        #[arg(long)]
        timeout_secs: Option<u64>,
    },
    /// Render report tables from a results log.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "md")]
        format: ReportFormat,
        #[arg(long, default_value = "run")]
        label: String,
    },
}

fn generate(
    templates: Option<PathBuf>,
    out: PathBuf,
    seed: u64,
    counts: &str,
    styles: Vec<PromptStyle>,
    jobs: usize,
) -> Result<()> {
    let templates = match templates {
        Some(dir) => load_templates(&dir)?,
        None => builtin_templates(),
    };
    if styles.is_empty() {
        bail!("--styles must name at least one prompt style");
    }
    let config = SnapshotConfig {
        seed,
        counts: parse_counts(counts)?,
        styles,
    };
    let snapshot = generate_snapshot(&templates, &config, jobs)?;
    write_snapshot(&snapshot, &out)?;
    println!(
        "wrote {} tasks to {} (manifest sha256 {})",
        snapshot.tasks.len(),
        out.display(),
        snapshot.manifest_digest()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    snapshot: PathBuf,
    mut agent: AgentConfig,
    budget: usize,
    jobs: usize,
    out: PathBuf,
    report: Option<PathBuf>,
    label: String,
    timeout_secs: Option<u64>,
) -> Result<()> {
    if budget == 0 {
        bail!("--budget must be at least 1");
    }
    if let Some(secs) = timeout_secs {
        agent.timeout = Duration::from_secs(secs);
    }
    let snapshot = load_snapshot(&snapshot).context("loading snapshot")?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
    let root = home_dir().join("runs").join(format!("{label}-{}-{stamp}", std::process::id()));
    let records = run_batch(&snapshot.tasks, &agent, budget, jobs, &root)?;
    let log = ResultsLog::open(&out).with_context(|| format!("opening {}", out.display()))?;
    for r in &records {
        log.append(r)?;
    }
    let rep = RunReport::build(&label, &records)?;
    if let Some(path) = report {
        fs::write(&path, rep.render(ReportFormat::Json)?).with_context(|| format!("writing {}", path.display()))?;
    }
    let t = &rep.totals;
    println!(
        "{} episodes: strict_accuracy {} mean_partial {} (records: {}, episodes: {})",
        t.tasks,
        t.strict_accuracy,
        t.mean_partial,
        out.display(),
        root.display()
    );
    Ok(())
}

fn report(records: PathBuf, format: ReportFormat, label: String) -> Result<()> {
    let recs = read_records(&records).with_context(|| format!("reading {}", records.display()))?;
    print!("{}", RunReport::build(&label, &recs)?.render(format)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Generate {
            templates,
            out,
            seed,
            counts,
            styles,
            jobs,
        } => generate(templates, out, seed, &counts, styles, jobs),
        Cmd::Run {
            snapshot,
            agent,
            budget,
            jobs,
            out,
            report: rep,
            label,
            timeout_secs,
        } => run(snapshot, agent, budget, jobs, out, rep, label, timeout_secs),
        Cmd::Report { records, format, label } => report(records, format, label),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
