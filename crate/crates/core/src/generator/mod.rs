//! Compiles scenario templates into executable, self-validated task specs.

pub mod slots;
pub mod template;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Duration;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use slots::SlotAssignment;
pub use template::{Ability, Notes, PromptStyle, ScenarioTemplate};

use crate::canonical;
use crate::command::{Engine, ExecutionResult};
use crate::evaluator::{build_eval_state, run_checks, validate_checks, CheckSpec, EvalError, Verdict};
use crate::state::{materialize_state, Clock, ForecastDay, StateError, StateOverrides, WorkflowState};
use template::{guard_holds, render, render_json, toml_to_json};

/// Scenario families in inventory order.
pub const FAMILIES: [&str; 17] = [
    "inbox",
    "release_recovery_runbook",
    "channel_incident_recovery",
    "daily_operations_commitment_loop",
    "release_gate",
    "delivery_update",
    "operations_review",
    "existing_state",
    "duplicate_avoidance",
    "multi_source_decision",
    "state_repair",
    "completion_gap",
    "branch_resolution",
    "already_done_skip",
    "wrong_state_replacement",
    "interrupted_workflow_resume",
    "contradictory_source_resolution",
];

/// Task ids are this prefix followed by a 1-based sequence number.
pub const TASK_ID_PREFIX: &str = "hard_decision_workflow_";

pub const STATE_MODE: &str = "mock";

const BUILTIN_TEMPLATES: [(&str, &str); 17] = [
    ("inbox", include_str!("../../templates/inbox.toml")),
    ("release_recovery_runbook", include_str!("../../templates/release_recovery_runbook.toml")),
    ("channel_incident_recovery", include_str!("../../templates/channel_incident_recovery.toml")),
    (
        "daily_operations_commitment_loop",
        include_str!("../../templates/daily_operations_commitment_loop.toml"),
    ),
    ("release_gate", include_str!("../../templates/release_gate.toml")),
    ("delivery_update", include_str!("../../templates/delivery_update.toml")),
    ("operations_review", include_str!("../../templates/operations_review.toml")),
    ("existing_state", include_str!("../../templates/existing_state.toml")),
    ("duplicate_avoidance", include_str!("../../templates/duplicate_avoidance.toml")),
    ("multi_source_decision", include_str!("../../templates/multi_source_decision.toml")),
    ("state_repair", include_str!("../../templates/state_repair.toml")),
    ("completion_gap", include_str!("../../templates/completion_gap.toml")),
    ("branch_resolution", include_str!("../../templates/branch_resolution.toml")),
    ("already_done_skip", include_str!("../../templates/already_done_skip.toml")),
    ("wrong_state_replacement", include_str!("../../templates/wrong_state_replacement.toml")),
    (
        "interrupted_workflow_resume",
        include_str!("../../templates/interrupted_workflow_resume.toml"),
    ),
    (
        "contradictory_source_resolution",
        include_str!("../../templates/contradictory_source_resolution.toml"),
    ),
];

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("template {origin}: {reason}")]
    Template { origin: String, reason: String },
    #[error("template {family}: slot {slot:?} has no grounding table")]
    UnknownSlot { family: String, slot: String },
    #[error("unknown scenario family {0:?}")]
    UnknownFamily(String),
    #[error("duplicate template for family {0:?}")]
    DuplicateFamily(String),
    #[error("{family} (seed {seed}): {reason}")]
    Render { family: String, seed: u64, reason: String },
    #[error("{family} (seed {seed}): state overrides rejected: {source}")]
    Overrides {
        family: String,
        seed: u64,
        #[source]
        source: StateError,
    },
    #[error("{family} (seed {seed}): check suite rejected: {source}")]
    Checks {
        family: String,
        seed: u64,
        #[source]
        source: EvalError,
    },
    #[error(
        "{family} (seed {seed}): reference trajectory does not close the task; \
         failed checks: [{}]; failed commands: [{}]\n{transcript}",
        failed_checks.join(", "),
        failed_commands.join(", ")
    )]
    SelfValidation {
        family: String,
        seed: u64,
        failed_checks: Vec<String>,
        failed_commands: Vec<String>,
        transcript: String,
    },
    #[error("task {id}: {source}")]
    InSnapshot {
        id: String,
        #[source]
        source: Box<GenError>,
    },
    #[error("bad counts spec {spec:?}: {reason}")]
    Counts { spec: String, reason: String },
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> GenError {
    GenError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// The 17 templates shipped with the crate, in inventory order.
pub fn builtin_templates() -> Vec<ScenarioTemplate> {
    BUILTIN_TEMPLATES
        .iter()
        .map(|(name, text)| {
            ScenarioTemplate::from_toml(text, &format!("builtin:{name}"))
                .unwrap_or_else(|e| panic!("builtin template {name} is invalid: {e}"))
        })
        .collect()
}

/// Loads every `*.toml` template in `dir`, ordered by inventory position.
pub fn load_templates(dir: &Path) -> Result<Vec<ScenarioTemplate>, GenError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let mut templates = Vec::new();
    for p in paths {
        let t = ScenarioTemplate::from_file(&p)?;
        if !FAMILIES.contains(&t.family.as_str()) {
            return Err(GenError::UnknownFamily(t.family));
        }
        if templates.iter().any(|x: &ScenarioTemplate| x.family == t.family) {
            return Err(GenError::DuplicateFamily(t.family));
        }
        templates.push(t);
    }
    templates.sort_by_key(|t| family_index(&t.family));
    Ok(templates)
}

fn family_index(family: &str) -> usize {
    FAMILIES.iter().position(|f| *f == family).unwrap_or(usize::MAX)
}

pub fn ground_slots(tmpl: &ScenarioTemplate, seed: u64) -> Result<SlotAssignment, GenError> {
    slots::draw(&tmpl.family, &tmpl.slots, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetadata {
    pub scenario: String,
    pub display_name: String,
    pub primary_ability: Ability,
    pub ability_tags: Vec<String>,
    pub realism_tags: Vec<String>,
    pub notes: Notes,
    /// Reserved for serving-layer annotations; empty at generation time.
    pub provider: BTreeMap<String, String>,
    pub slots: SlotAssignment,
    pub state_mode: String,
    /// Commands an agent that skips inspection would emit.
    pub naive_trajectory: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub instruction: String,
    pub prompt_style: PromptStyle,
    pub initial_state_overrides: StateOverrides,
    pub reference_trajectory: Vec<String>,
    pub checks: Vec<CheckSpec>,
    pub metadata: TaskMetadata,
}

impl TaskSpec {
    pub fn gt_length(&self) -> usize {
        self.reference_trajectory.len()
    }

    pub fn initial_state(&self) -> Result<WorkflowState, StateError> {
        let mut s = WorkflowState::base();
        self.initial_state_overrides.apply(&mut s)?;
        Ok(s)
    }

    pub fn to_canonical(&self) -> String {
        canonical::to_string(self)
    }
}

fn render_steps(steps: &[template::Step], slots: &SlotAssignment) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for s in steps {
        if guard_holds(s.when.as_deref(), slots)? {
            out.push(render(&s.cmd, slots)?);
        }
    }
    Ok(out)
}

const RISKY_SUMMARY: &str = "Severe thunderstorms, transit disruption likely";
const CALM_SUMMARY: &str = "Mild and dry, light wind";
const LATER_SUMMARY: &str = "Partly cloudy";

fn build_overrides(tmpl: &ScenarioTemplate, slots: &SlotAssignment) -> Result<StateOverrides, String> {
    let raw = toml_to_json(&toml::Value::Table(tmpl.overrides.clone()));
    let rendered = render_json(&raw, slots)?.unwrap_or_default();
    let mut ov: StateOverrides =
        serde_json::from_value(rendered).map_err(|e| format!("override recipe: {e}"))?;
    if let Some(zone) = slots.city_zone() {
        ov.clock = Some(Clock::anchor(zone));
        if let Some(recipe) = &tmpl.forecast {
            let city = slots.get("city").expect("zone implies city");
            let risky = match &recipe.risky_when {
                Some(g) => guard_holds(Some(g), slots)?,
                None => slots.get("forecast_risky") == Some("true"),
            };
            let today = Clock::anchor(zone).now.date();
            for i in 0..recipe.days {
                let first = i == 0;
                ov.forecasts.push(ForecastDay {
                    location: city.to_string(),
                    date: today + Duration::days(i64::from(i)),
                    summary: match (first, risky) {
                        (true, true) => RISKY_SUMMARY,
                        (true, false) => CALM_SUMMARY,
                        _ => LATER_SUMMARY,
                    }
                    .to_string(),
                    risky: first && risky,
                });
            }
        }
    }
    Ok(ov)
}

fn build_checks(tmpl: &ScenarioTemplate, slots: &SlotAssignment) -> Result<Vec<CheckSpec>, String> {
    let mut out = Vec::new();
    for raw in &tmpl.checks {
        let v = toml_to_json(&toml::Value::Table(raw.clone()));
        if let Some(rendered) = render_json(&v, slots)? {
            let id = rendered.get("id").and_then(|x| x.as_str()).unwrap_or("?").to_string();
            out.push(serde_json::from_value(rendered).map_err(|e| format!("check {id}: {e}"))?);
        }
    }
    Ok(out)
}

/// Outcome of replaying a command list from a task's initial state.
#[derive(Debug, Clone)]
pub struct Replay {
    pub results: Vec<(String, ExecutionResult)>,
    pub final_state: WorkflowState,
    pub verdict: Verdict,
}

impl Replay {
    pub fn transcript(&self) -> String {
        let mut t = String::new();
        for (cmd, r) in &self.results {
            let _ = writeln!(t, "$ {cmd}  -> exit {}", r.exit_code);
            for line in r.stderr.lines() {
                let _ = writeln!(t, "  ! {line}");
            }
        }
        t
    }
}

/// Materializes the task into a scratch episode directory and runs
/// `commands` against it, then scores the result.
pub fn replay_commands(task: &TaskSpec, commands: &[String]) -> Result<Replay, GenError> {
    let family = task.metadata.scenario.clone();
    let seed = task.metadata.slots.seed;
    let dir = tempfile::tempdir().map_err(|e| io_err(&std::env::temp_dir(), e))?;
    let mut state = materialize_state(&WorkflowState::base(), &task.initial_state_overrides, dir.path())
        .map_err(|source| GenError::Overrides {
            family: family.clone(),
            seed,
            source,
        })?;
    let engine = Engine::default();
    let results: Vec<(String, ExecutionResult)> = commands
        .iter()
        .map(|c| (c.clone(), engine.execute_line(c, &mut state)))
        .collect();
    let eval = build_eval_state(results.iter().map(|(c, r)| (c.as_str(), r)), &state);
    let verdict = run_checks(&eval, &task.checks).map_err(|source| GenError::Checks { family, seed, source })?;
    Ok(Replay {
        results,
        final_state: state,
        verdict,
    })
}

/// Replays C* and fails unless every command succeeds and every check passes.
pub fn self_validate(task: &TaskSpec) -> Result<Verdict, GenError> {
    let replay = replay_commands(task, &task.reference_trajectory)?;
    let failed_checks: Vec<String> = replay.verdict.failed_checks().map(|c| c.id.clone()).collect();
    let failed_commands: Vec<String> = replay
        .results
        .iter()
        .filter(|(_, r)| !r.succeeded())
        .map(|(c, _)| c.clone())
        .collect();
    if failed_checks.is_empty() && failed_commands.is_empty() && replay.verdict.strict_pass {
        Ok(replay.verdict)
    } else {
        Err(GenError::SelfValidation {
            family: task.metadata.scenario.clone(),
            seed: task.metadata.slots.seed,
            failed_checks,
            failed_commands,
            transcript: replay.transcript(),
        })
    }
}

/// Builds one task from a template without replaying it.
pub fn compile_task(tmpl: &ScenarioTemplate, seed: u64, style: PromptStyle) -> Result<TaskSpec, GenError> {
    let slots = ground_slots(tmpl, seed)?;
    let fail = |reason: String| GenError::Render {
        family: tmpl.family.clone(),
        seed,
        reason,
    };
    let instruction_template = match style {
        PromptStyle::Directive => &tmpl.instructions.directive,
        PromptStyle::Conversational => &tmpl.instructions.conversational,
    };
    let instruction = render(instruction_template, &slots).map_err(fail)?;
    let initial_state_overrides = build_overrides(tmpl, &slots).map_err(fail)?;
    let reference_trajectory = render_steps(&tmpl.reference, &slots).map_err(fail)?;
    let naive_trajectory = render_steps(&tmpl.naive, &slots).map_err(fail)?;
    let checks = build_checks(tmpl, &slots).map_err(fail)?;
    if reference_trajectory.is_empty() {
        return Err(fail("reference trajectory is empty for this assignment".into()));
    }
    validate_checks(&checks).map_err(|source| GenError::Checks {
        family: tmpl.family.clone(),
        seed,
        source,
    })?;
    let mut probe = WorkflowState::base();
    initial_state_overrides
        .apply(&mut probe)
        .map_err(|source| GenError::Overrides {
            family: tmpl.family.clone(),
            seed,
            source,
        })?;
    Ok(TaskSpec {
        id: format!("{}_{seed}_{style}", tmpl.family),
        instruction,
        prompt_style: style,
        initial_state_overrides,
        reference_trajectory,
        checks,
        metadata: TaskMetadata {
            scenario: tmpl.family.clone(),
            display_name: tmpl.display_name.clone(),
            primary_ability: tmpl.primary_ability,
            ability_tags: tmpl.ability_tags.clone(),
            realism_tags: tmpl.realism_tags.clone(),
            notes: Notes {
                public: render(&tmpl.notes.public, &slots).map_err(fail)?,
                hidden: render(&tmpl.notes.hidden, &slots).map_err(fail)?,
            },
            provider: BTreeMap::new(),
            slots,
            state_mode: STATE_MODE.to_string(),
            naive_trajectory,
        },
    })
}

/// Builds one task and proves it closable by replaying its reference
/// trajectory.
pub fn generate_task(tmpl: &ScenarioTemplate, seed: u64, style: PromptStyle) -> Result<TaskSpec, GenError> {
    let task = compile_task(tmpl, seed, style)?;
    self_validate(&task)?;
    Ok(task)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotConfig {
    pub seed: u64,
    /// Tasks per family (before multiplying by styles).
    pub counts: BTreeMap<String, usize>,
    pub styles: Vec<PromptStyle>,
}

impl SnapshotConfig {
    pub fn uniform(count: usize, seed: u64, styles: &[PromptStyle]) -> Self {
        Self {
            seed,
            counts: FAMILIES.iter().map(|f| (f.to_string(), count)).collect(),
            styles: styles.to_vec(),
        }
    }

    pub fn total_tasks(&self) -> usize {
        self.counts.values().sum::<usize>() * self.styles.len()
    }
}

/// Parses `all=2,inbox=3`-style count specs. `all` sets every family; later
/// entries override earlier ones; families not mentioned get zero.
pub fn parse_counts(spec: &str) -> Result<BTreeMap<String, usize>, GenError> {
    let err = |reason: String| GenError::Counts {
        spec: spec.to_string(),
        reason,
    };
    let mut counts: BTreeMap<String, usize> = FAMILIES.iter().map(|f| (f.to_string(), 0)).collect();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, n) = part
            .split_once('=')
            .ok_or_else(|| err(format!("{part:?} is not family=count")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| err(format!("{:?} is not a count", n.trim())))?;
        let name = name.trim();
        if name == "all" {
            counts.values_mut().for_each(|c| *c = n);
        } else if let Some(c) = counts.get_mut(name) {
            *c = n;
        } else {
            return Err(err(format!("unknown family {name:?}")));
        }
    }
    Ok(counts)
}

/// Seed for the `index`-th instance of a family within a snapshot.
pub fn instance_seed(snapshot_seed: u64, family: &str, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(snapshot_seed.to_le_bytes());
    h.update(family.as_bytes());
    h.update((index as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub file: String,
    pub sha256: String,
    pub scenario: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: ManifestConfig,
    pub tasks: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestConfig {
    pub seed: u64,
    pub counts: BTreeMap<String, usize>,
    pub styles: Vec<PromptStyle>,
    pub state_mode: String,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub tasks: Vec<TaskSpec>,
    pub manifest: Manifest,
}

impl Snapshot {
    pub fn manifest_text(&self) -> String {
        canonical::to_string(&self.manifest)
    }

    pub fn manifest_digest(&self) -> String {
        canonical::sha256_hex(self.manifest_text())
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TASKS_DIR: &str = "tasks";

/// Generates every task the config asks for, numbering them in inventory
/// order, then by instance, then by style.
pub fn generate_snapshot(
    templates: &[ScenarioTemplate],
    config: &SnapshotConfig,
    jobs: usize,
) -> Result<Snapshot, GenError> {
    for family in config.counts.keys() {
        if !FAMILIES.contains(&family.as_str()) {
            return Err(GenError::UnknownFamily(family.clone()));
        }
    }
    let mut plan = Vec::new();
    for family in FAMILIES {
        let count = config.counts.get(family).copied().unwrap_or(0);
        if count == 0 {
            continue;
        }
        let tmpl = templates
            .iter()
            .find(|t| t.family == family)
            .ok_or_else(|| GenError::Template {
                origin: family.to_string(),
                reason: "no template loaded for this family".into(),
            })?;
        for index in 0..count {
            let seed = instance_seed(config.seed, family, index);
            for style in &config.styles {
                let id = format!("{TASK_ID_PREFIX}{}", plan.len() + 1);
                plan.push((id, tmpl, seed, *style));
            }
        }
    }
    let generated = crate::par::map(&plan, jobs, |(id, tmpl, seed, style)| {
        generate_task(tmpl, *seed, *style)
            .map(|mut t| {
                t.id = id.clone();
                t
            })
            .map_err(|e| GenError::InSnapshot {
                id: id.clone(),
                source: Box::new(e),
            })
    });
    let tasks = generated.into_iter().collect::<Result<Vec<_>, _>>()?;
    let entries = tasks
        .iter()
        .map(|t| ManifestEntry {
            id: t.id.clone(),
            file: format!("{TASKS_DIR}/{}.json", t.id),
            sha256: canonical::sha256_hex(t.to_canonical()),
            scenario: t.metadata.scenario.clone(),
        })
        .collect();
    Ok(Snapshot {
        tasks,
        manifest: Manifest {
            generator: ManifestConfig {
                seed: config.seed,
                counts: config.counts.clone(),
                styles: config.styles.clone(),
                state_mode: STATE_MODE.to_string(),
            },
            tasks: entries,
        },
    })
}

pub fn write_snapshot(snapshot: &Snapshot, dir: &Path) -> Result<(), GenError> {
    let tasks_dir = dir.join(TASKS_DIR);
    fs::create_dir_all(&tasks_dir).map_err(|e| io_err(&tasks_dir, e))?;
    for t in &snapshot.tasks {
        let path = tasks_dir.join(format!("{}.json", t.id));
        fs::write(&path, t.to_canonical()).map_err(|e| io_err(&path, e))?;
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, snapshot.manifest_text()).map_err(|e| io_err(&path, e))
}

/// Reads a snapshot back, verifying every task file against its digest.
pub fn load_snapshot(dir: &Path) -> Result<Snapshot, GenError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
    let mut tasks = Vec::with_capacity(manifest.tasks.len());
    for entry in &manifest.tasks {
        let path = dir.join(&entry.file);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        if canonical::sha256_hex(&text) != entry.sha256 {
            return Err(io_err(&path, "content digest does not match the manifest"));
        }
        let task: TaskSpec = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
        if task.id != entry.id {
            return Err(io_err(&path, format!("holds task {} but the manifest says {}", task.id, entry.id)));
        }
        tasks.push(task);
    }
    Ok(Snapshot { tasks, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_templates_cover_every_family_in_order() {
        let t = builtin_templates();
        let names: Vec<&str> = t.iter().map(|t| t.family.as_str()).collect();
        assert_eq!(names, FAMILIES);
    }

    #[test]
    fn counts_spec() {
        let c = parse_counts("all=2,inbox=3").unwrap();
        assert_eq!(c["inbox"], 3);
        assert_eq!(c["state_repair"], 2);
        assert_eq!(c.len(), 17);
        let c = parse_counts("completion_gap=1").unwrap();
        assert_eq!(c.values().sum::<usize>(), 1);
        assert!(parse_counts("nope=1").is_err());
        assert!(parse_counts("all=x").is_err());
        assert!(parse_counts("all").is_err());
    }

    #[test]
    fn every_builtin_family_self_validates() {
        for tmpl in builtin_templates() {
            for seed in 0..4 {
                for style in PromptStyle::ALL {
                    if let Err(e) = generate_task(&tmpl, seed, style) {
                        panic!("{e}");
                    }
                }
            }
        }
    }

    #[test]
    fn empty_snapshot_is_valid() {
        let cfg = SnapshotConfig::uniform(0, 1, &PromptStyle::ALL);
        let snap = generate_snapshot(&builtin_templates(), &cfg, 1).unwrap();
        assert!(snap.tasks.is_empty());
        let dir = tempfile::tempdir().unwrap();
        write_snapshot(&snap, dir.path()).unwrap();
        let back = load_snapshot(dir.path()).unwrap();
        assert!(back.tasks.is_empty());
        assert_eq!(back.manifest, snap.manifest);
    }

    #[test]
    fn tampered_task_file_is_rejected() {
        let mut cfg = SnapshotConfig::uniform(0, 3, &[PromptStyle::Directive]);
        cfg.counts.insert("inbox".into(), 1);
        let snap = generate_snapshot(&builtin_templates(), &cfg, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_snapshot(&snap, dir.path()).unwrap();
        let f = dir.path().join("tasks/hard_decision_workflow_1.json");
        let text = fs::read_to_string(&f).unwrap().replace("inbox", "inbax");
        fs::write(&f, text).unwrap();
        assert!(load_snapshot(dir.path()).is_err());
    }
}
