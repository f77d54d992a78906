//! Episode rollout: one agent, one task, one command per step.
//!
//! The driver materializes the task's initial state into a fresh episode
//! directory, shows the agent an observation, executes the single line it
//! replies with, and repeats until the agent stops, the step budget runs
//! out, or a stop rule fires. The finished episode is scored with the
//! task's checks against the state it ended in.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::command::route::command_hints;
use crate::command::{parse_command, Engine, ExecutionResult, EXIT_USAGE};
use crate::evaluator::{build_eval_state, run_checks, EvalError, HistoryEntry, Verdict};
use crate::generator::{Ability, PromptStyle, TaskSpec};
use crate::state::{materialize_state, persist_state, GatewayState, StateError, WorkflowState};

/// Step budget used when the caller does not choose one.
pub const DEFAULT_BUDGET: usize = 25;

/// This many usage errors (exit 2) in a row end the episode.
pub const MAX_CONSECUTIVE_USAGE_ERRORS: usize = 3;

/// What the agent sees before choosing its next command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub task_id: String,
    pub step: usize,
    /// Only present on the first step.
    pub instruction: Option<String>,
    pub config: BTreeMap<String, String>,
    pub gateway: GatewayState,
    pub hints: String,
    pub last_stdout: Option<String>,
    pub last_stderr: Option<String>,
    pub last_exit: Option<i32>,
    /// Every command executed so far, with its exit code.
    pub transcript: Vec<HistoryEntry>,
}

impl Observation {
    pub fn digest(&self) -> String {
        canonical::sha256_hex(canonical::to_line(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderEventKind {
    /// The provider behind the agent failed outright.
    Failure,
    /// The provider misbehaved but the agent carried on.
    Impacted,
}

/// One reply from an agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentReply {
    pub line: String,
    /// Provider signals raised while producing this reply.
    pub provider_events: Vec<ProviderEventKind>,
}

impl AgentReply {
    pub fn line(line: impl Into<String>) -> Self {
        Self {
            line: line.into(),
            provider_events: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("malformed agent reply: {0}")]
    Malformed(String),
    #[error("agent did not reply within {0:?}")]
    Timeout(std::time::Duration),
    #[error("agent disconnected: {0}")]
    Disconnected(String),
    #[error("agent i/o: {0}")]
    Io(#[from] io::Error),
}

/// Anything that can pick the next command from an observation.
pub trait Agent: Send {
    fn next_command(&mut self, obs: &Observation) -> Result<AgentReply, AgentError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The agent said `done`.
    AgentDone,
    /// The agent said `exit` or `quit`.
    ControlCommand,
    BudgetExhausted,
    /// Too many consecutive usage errors, or the agent adapter failed.
    StopRule,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderCounters {
    pub failures: usize,
    pub impacted: usize,
}

impl ProviderCounters {
    fn record(&mut self, kind: ProviderEventKind) {
        match kind {
            ProviderEventKind::Failure => self.failures += 1,
            ProviderEventKind::Impacted => self.impacted += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub observation_digest: String,
    pub command: String,
    pub result: ExecutionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub task_id: String,
    pub scenario: String,
    pub primary_ability: Ability,
    pub prompt_style: PromptStyle,
    /// Length of the task's reference trajectory.
    pub reference_length: usize,
    pub steps: Vec<StepRecord>,
    pub stop_reason: StopReason,
    pub verdict: Verdict,
    /// Agent turns that were executed as commands (control words excluded).
    pub executed_steps: usize,
    pub provider_events: ProviderCounters,
}

#[derive(Debug, thiserror::Error)]
pub enum RolloutError {
    #[error("step budget must be at least 1")]
    ZeroBudget,
    #[error("task {task}: {source}")]
    State {
        task: String,
        #[source]
        source: StateError,
    },
    #[error("task {task}: {source}")]
    Checks {
        task: String,
        #[source]
        source: EvalError,
    },
}

fn observe(task: &TaskSpec, state: &WorkflowState, steps: &[StepRecord]) -> Observation {
    let last = steps.last().map(|s| &s.result);
    Observation {
        task_id: task.id.clone(),
        step: steps.len(),
        instruction: steps.is_empty().then(|| task.instruction.clone()),
        config: state.config.entries.clone(),
        gateway: state.gateway.state,
        hints: command_hints(),
        last_stdout: last.map(|r| r.stdout.clone()),
        last_stderr: last.map(|r| r.stderr.clone()),
        last_exit: last.map(|r| r.exit_code),
        transcript: steps
            .iter()
            .map(|s| HistoryEntry {
                command: s.command.clone(),
                exit_code: s.result.exit_code,
            })
            .collect(),
    }
}

/// Runs one episode of `task` with `agent` in the fresh directory `workdir`.
///
/// The final state is left in `workdir` for inspection.
pub fn run_episode(
    task: &TaskSpec,
    agent: &mut dyn Agent,
    budget: usize,
    workdir: &Path,
) -> Result<EpisodeRecord, RolloutError> {
    if budget == 0 {
        return Err(RolloutError::ZeroBudget);
    }
    let state_err = |source| RolloutError::State {
        task: task.id.clone(),
        source,
    };
    let mut state =
        materialize_state(&WorkflowState::base(), &task.initial_state_overrides, workdir).map_err(state_err)?;
    let engine = Engine::default();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut provider = ProviderCounters::default();
    let mut usage_streak = 0;

    let stop_reason = loop {
        if steps.len() >= budget {
            break StopReason::BudgetExhausted;
        }
        let obs = observe(task, &state, &steps);
        let reply = match agent.next_command(&obs) {
            Ok(r) => r,
            Err(_) => {
                provider.record(ProviderEventKind::Failure);
                break StopReason::StopRule;
            }
        };
        for kind in &reply.provider_events {
            provider.record(*kind);
        }
        let result = match parse_command(&reply.line) {
            Ok(cmd) => match cmd.control_word() {
                Some("done") => break StopReason::AgentDone,
                Some(_) => break StopReason::ControlCommand,
                None => engine.execute(&cmd, &mut state),
            },
            Err(_) => engine.execute_line(&reply.line, &mut state),
        };
        usage_streak = if result.exit_code == EXIT_USAGE { usage_streak + 1 } else { 0 };
        steps.push(StepRecord {
            observation_digest: obs.digest(),
            command: reply.line,
            result,
        });
        if usage_streak >= MAX_CONSECUTIVE_USAGE_ERRORS {
            break StopReason::StopRule;
        }
    };

    persist_state(&state, workdir).map_err(state_err)?;
    let eval = build_eval_state(steps.iter().map(|s| (s.command.as_str(), &s.result)), &state);
    let verdict = run_checks(&eval, &task.checks).map_err(|source| RolloutError::Checks {
        task: task.id.clone(),
        source,
    })?;
    Ok(EpisodeRecord {
        task_id: task.id.clone(),
        scenario: task.metadata.scenario.clone(),
        primary_ability: task.metadata.primary_ability,
        prompt_style: task.prompt_style,
        reference_length: task.gt_length(),
        executed_steps: steps.len(),
        steps,
        stop_reason,
        verdict,
        provider_events: provider,
    })
}

/// Append-only newline-delimited JSON log of episode records.
///
/// Each record is written with a single `write_all` on a file opened in
/// append mode, so whole lines from concurrent writers never interleave.
#[derive(Debug)]
pub struct ResultsLog {
    path: PathBuf,
    file: Mutex<fs::File>,
}

impl ResultsLog {
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &EpisodeRecord) -> io::Result<()> {
        let mut line = canonical::to_line(record);
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

/// Reads every record from a results log, skipping blank lines.
pub fn read_records(path: &Path) -> io::Result<Vec<EpisodeRecord>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), n + 1))
        })?;
        out.push(rec);
    }
    Ok(out)
}
