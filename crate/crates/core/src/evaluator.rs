//! Result-first evaluation: a normalized end-of-episode view and the check
//! suite that scores it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::command::{Effect, EffectKind, ExecutionResult};
use crate::state::{normalize_title, ConfigStore, GatewayStatus, TaskStatus, WorkflowState};

/// Maximum number of history entries kept in the evaluation state.
pub const HISTORY_CAP: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub command: String,
    pub exit_code: i32,
}

/// Everything the checks may look at once an episode has finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalState {
    pub config: ConfigStore,
    pub gateway: GatewayStatus,
    pub history: Vec<HistoryEntry>,
    pub last_stdout: Option<String>,
    pub last_stderr: Option<String>,
    pub last_exit: Option<i32>,
    pub effects: Vec<Effect>,
    pub final_state: WorkflowState,
}

/// Builds the evaluation view from the executed commands (in order) and
/// the state the episode ended in.
pub fn build_eval_state<'a>(
    executed: impl IntoIterator<Item = (&'a str, &'a ExecutionResult)>,
    final_state: &WorkflowState,
) -> EvalState {
    let mut history = Vec::new();
    let mut effects = Vec::new();
    let mut last: Option<&ExecutionResult> = None;
    for (command, result) in executed {
        history.push(HistoryEntry {
            command: command.to_string(),
            exit_code: result.exit_code,
        });
        effects.extend(result.effects.iter().cloned());
        last = Some(result);
    }
    if history.len() > HISTORY_CAP {
        history.drain(..history.len() - HISTORY_CAP);
    }
    EvalState {
        config: final_state.config.clone(),
        gateway: final_state.gateway,
        history,
        last_stdout: last.map(|r| r.stdout.clone()),
        last_stderr: last.map(|r| r.stderr.clone()),
        last_exit: last.map(|r| r.exit_code),
        effects,
        final_state: final_state.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckFamily {
    State,
    Effect,
    Output,
}

/// Queryable views of the final state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSurface {
    Tasks,
    Calendar,
    Email,
    Files,
    Cron,
    Weather,
    Channels,
    /// Messages flattened across channels.
    Messages,
    Config,
}

impl StateSurface {
    pub fn fields(self) -> &'static [&'static str] {
        match self {
            Self::Tasks => &["id", "title", "priority", "due", "status"],
            Self::Calendar => &["id", "title", "start", "timezone"],
            Self::Email => &["id", "direction", "from", "to", "subject", "body", "read"],
            Self::Files => &["path", "content"],
            Self::Cron => &["name", "schedule", "message", "active"],
            Self::Weather => &["location", "date", "summary", "risky"],
            Self::Channels => &["channel", "logged_in"],
            Self::Messages => &["channel", "target", "message"],
            Self::Config => &["key", "value"],
        }
    }

    fn records(self, s: &WorkflowState, status: Option<TaskStatus>) -> Vec<BTreeMap<&'static str, String>> {
        fn rec<const N: usize>(pairs: [(&'static str, String); N]) -> BTreeMap<&'static str, String> {
            BTreeMap::from(pairs)
        }
        match self {
            Self::Tasks => s
                .tasks
                .iter()
                .filter(|t| status.is_none_or(|st| t.status == st))
                .map(|t| {
                    rec([
                        ("id", t.id.clone()),
                        ("title", t.title.clone()),
                        ("priority", t.priority.as_str().to_string()),
                        ("due", t.due.map(|d| d.to_string()).unwrap_or_default()),
                        ("status", t.status.as_str().to_string()),
                    ])
                })
                .collect(),
            Self::Calendar => s
                .events
                .iter()
                .map(|e| {
                    rec([
                        ("id", e.id.clone()),
                        ("title", e.title.clone()),
                        ("start", e.start.format(crate::state::minute_time::FORMAT).to_string()),
                        ("timezone", e.timezone.clone()),
                    ])
                })
                .collect(),
            Self::Email => s
                .inbox
                .iter()
                .map(|e| {
                    rec([
                        ("id", e.id.clone()),
                        ("direction", serde_plain(&e.direction)),
                        ("from", e.from.clone()),
                        ("to", e.to.clone()),
                        ("subject", e.subject.clone()),
                        ("body", e.body.clone()),
                        ("read", e.read.to_string()),
                    ])
                })
                .collect(),
            Self::Files => s
                .files
                .iter()
                .map(|f| rec([("path", f.path.clone()), ("content", f.content.clone())]))
                .collect(),
            Self::Cron => s
                .cron_jobs
                .iter()
                .map(|j| {
                    rec([
                        ("name", j.name.clone()),
                        ("schedule", j.schedule.clone()),
                        ("message", j.message.clone()),
                        ("active", j.active.to_string()),
                    ])
                })
                .collect(),
            Self::Weather => s
                .forecasts
                .iter()
                .map(|d| {
                    rec([
                        ("location", d.location.clone()),
                        ("date", d.date.to_string()),
                        ("summary", d.summary.clone()),
                        ("risky", d.risky.to_string()),
                    ])
                })
                .collect(),
            Self::Channels => s
                .channels
                .iter()
                .map(|c| rec([("channel", c.channel.clone()), ("logged_in", c.logged_in.to_string())]))
                .collect(),
            Self::Messages => s
                .channels
                .iter()
                .flat_map(|c| {
                    c.messages.iter().map(|m| {
                        rec([
                            ("channel", c.channel.clone()),
                            ("target", m.target.clone()),
                            ("message", m.message.clone()),
                        ])
                    })
                })
                .collect(),
            Self::Config => s
                .config
                .entries
                .iter()
                .map(|(k, v)| rec([("key", k.clone()), ("value", v.clone())]))
                .collect(),
        }
    }
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateQuery {
    pub surface: StateSurface,
    /// Only meaningful for the task board.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<TaskStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTarget {
    FinalExit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckTarget {
    Effect(EffectKind),
    Output(OutputTarget),
    State(StateQuery),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Exists,
    NotExists,
    CountGte,
    CountEq,
    Equals,
}

impl Predicate {
    fn as_str(self) -> &'static str {
        match self {
            Self::Exists => "exists",
            Self::NotExists => "not_exists",
            Self::CountGte => "count_gte",
            Self::CountEq => "count_eq",
            Self::Equals => "equals",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckArg {
    Int(i64),
    Text(String),
}

fn default_weight() -> f64 {
    1.0
}

fn default_required() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub id: String,
    pub family: CheckFamily,
    pub target: CheckTarget,
    pub predicate: Predicate,
    #[serde(default, rename = "match", skip_serializing_if = "BTreeMap::is_empty")]
    pub matchers: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arg: Option<CheckArg>,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default = "default_required")]
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("a check suite needs at least one check")]
    NoChecks,
    #[error("a check suite needs at least one required check")]
    NoRequiredCheck,
    #[error("check {id}: {reason}")]
    Malformed { id: String, reason: String },
    #[error("cannot aggregate an empty list of verdicts")]
    NoVerdicts,
}

fn malformed(id: &str, reason: impl Into<String>) -> EvalError {
    EvalError::Malformed {
        id: id.to_string(),
        reason: reason.into(),
    }
}

impl CheckSpec {
    fn count_arg(&self) -> Option<usize> {
        match self.arg {
            Some(CheckArg::Int(n)) if n >= 0 => usize::try_from(n).ok(),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let id = self.id.as_str();
        if id.trim().is_empty() {
            return Err(malformed(id, "empty id"));
        }
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(malformed(id, format!("weight must be positive, got {}", self.weight)));
        }
        let (family, fields): (CheckFamily, &[&str]) = match &self.target {
            CheckTarget::Effect(kind) => (CheckFamily::Effect, kind.payload_fields()),
            CheckTarget::State(q) => {
                if q.status.is_some() && q.surface != StateSurface::Tasks {
                    return Err(malformed(id, "a status filter applies only to tasks"));
                }
                (CheckFamily::State, q.surface.fields())
            }
            CheckTarget::Output(_) => (CheckFamily::Output, &[]),
        };
        if family != self.family {
            return Err(malformed(id, format!("target does not belong to the {:?} family", self.family)));
        }
        if let Some(bad) = self.matchers.keys().find(|k| !fields.contains(&k.as_str())) {
            return Err(malformed(id, format!("match field {bad:?} is not part of the target")));
        }
        match (self.predicate, &self.target) {
            (Predicate::Exists | Predicate::NotExists, CheckTarget::Output(_)) => {
                Err(malformed(id, "output checks support only `equals`"))
            }
            (Predicate::Exists | Predicate::NotExists, _) => match self.arg {
                None => Ok(()),
                Some(_) => Err(malformed(id, format!("`{}` takes no argument", self.predicate.as_str()))),
            },
            (Predicate::CountGte | Predicate::CountEq, CheckTarget::Output(_)) => {
                Err(malformed(id, "output checks support only `equals`"))
            }
            (Predicate::CountGte | Predicate::CountEq, _) => match self.count_arg() {
                Some(_) => Ok(()),
                None => Err(malformed(
                    id,
                    format!("`{}` needs a non-negative integer argument", self.predicate.as_str()),
                )),
            },
            (Predicate::Equals, CheckTarget::Output(_)) => {
                if !self.matchers.is_empty() {
                    return Err(malformed(id, "output checks take no match fields"));
                }
                match self.arg {
                    Some(CheckArg::Int(_)) => Ok(()),
                    _ => Err(malformed(id, "`equals` on final_exit needs an integer argument")),
                }
            }
            (Predicate::Equals, CheckTarget::State(q)) => {
                if q.surface != StateSurface::Config || !self.matchers.contains_key("key") {
                    return Err(malformed(id, "`equals` on state needs the config surface and a `key` match"));
                }
                match self.arg {
                    Some(CheckArg::Text(_)) => Ok(()),
                    _ => Err(malformed(id, "`equals` on config needs a text argument")),
                }
            }
            (Predicate::Equals, CheckTarget::Effect(_)) => {
                Err(malformed(id, "effect checks count effects; use exists/not_exists/count_*"))
            }
        }
    }
}

/// True when the normalized `pattern` occurs inside the normalized `value`.
pub fn pattern_matches(pattern: &str, value: &str) -> bool {
    normalize_title(value).contains(&normalize_title(pattern))
}

fn record_matches<'a>(
    matchers: &BTreeMap<String, String>,
    lookup: impl Fn(&str) -> Option<&'a str>,
) -> bool {
    matchers
        .iter()
        .all(|(field, pattern)| lookup(field).is_some_and(|v| pattern_matches(pattern, v)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub passed: bool,
    pub score: f64,
    pub required: bool,
    pub weight: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub strict_pass: bool,
    pub partial_score: f64,
    pub check_results: Vec<CheckResult>,
}

impl Verdict {
    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.check_results.iter().filter(|r| !r.passed)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "strict_pass={} partial={:.4}",
            self.strict_pass, self.partial_score
        )?;
        for r in &self.check_results {
            writeln!(
                f,
                "  [{}] {}{}: {}",
                if r.passed { "pass" } else { "FAIL" },
                r.id,
                if r.required { "" } else { " (optional)" },
                r.detail
            )?;
        }
        Ok(())
    }
}

fn compare_count(predicate: Predicate, count: usize, arg: Option<usize>) -> (bool, String) {
    match predicate {
        Predicate::Exists => (count >= 1, format!("{count} matching, need at least 1")),
        Predicate::NotExists => (count == 0, format!("{count} matching, need none")),
        Predicate::CountGte => {
            let n = arg.unwrap_or(0);
            (count >= n, format!("{count} matching, need >= {n}"))
        }
        Predicate::CountEq => {
            let n = arg.unwrap_or(0);
            (count == n, format!("{count} matching, need exactly {n}"))
        }
        Predicate::Equals => unreachable!("validated before evaluation"),
    }
}

fn evaluate(check: &CheckSpec, s: &EvalState) -> (bool, String) {
    match &check.target {
        CheckTarget::Effect(kind) => {
            let count = s
                .effects
                .iter()
                .filter(|e| e.kind == *kind && record_matches(&check.matchers, |f| e.field(f)))
                .count();
            let (ok, detail) = compare_count(check.predicate, count, check.count_arg());
            (ok, format!("{kind}: {detail}"))
        }
        CheckTarget::State(q) => {
            let records = q.surface.records(&s.final_state, q.status);
            if check.predicate == Predicate::Equals {
                let key = &check.matchers["key"];
                let want = match &check.arg {
                    Some(CheckArg::Text(t)) => t.as_str(),
                    _ => unreachable!("validated before evaluation"),
                };
                return match s.final_state.config.get(key.trim()) {
                    Some(v) => (
                        normalize_title(v) == normalize_title(want),
                        format!("config {key} = {v:?}, want {want:?}"),
                    ),
                    None => (false, format!("config {key} is not set")),
                };
            }
            let count = records
                .iter()
                .filter(|r| record_matches(&check.matchers, |f| r.get(f).map(String::as_str)))
                .count();
            let (ok, detail) = compare_count(check.predicate, count, check.count_arg());
            (ok, format!("{:?} state: {detail}", q.surface).to_lowercase())
        }
        CheckTarget::Output(OutputTarget::FinalExit) => {
            let want = match check.arg {
                Some(CheckArg::Int(n)) => n,
                _ => unreachable!("validated before evaluation"),
            };
            match s.last_exit {
                Some(code) => (i64::from(code) == want, format!("final exit {code}, want {want}")),
                None => (false, format!("no command was executed, want exit {want}")),
            }
        }
    }
}

/// Validates a check suite without evaluating it.
pub fn validate_checks(checks: &[CheckSpec]) -> Result<(), EvalError> {
    if checks.is_empty() {
        return Err(EvalError::NoChecks);
    }
    for c in checks {
        c.validate()?;
    }
    if !checks.iter().any(|c| c.required) {
        return Err(EvalError::NoRequiredCheck);
    }
    Ok(())
}

pub fn run_checks(s: &EvalState, checks: &[CheckSpec]) -> Result<Verdict, EvalError> {
    validate_checks(checks)?;
    let check_results: Vec<CheckResult> = checks
        .iter()
        .map(|c| {
            let (passed, detail) = evaluate(c, s);
            CheckResult {
                id: c.id.clone(),
                passed,
                score: if passed { 1.0 } else { 0.0 },
                required: c.required,
                weight: c.weight,
                detail,
            }
        })
        .collect();
    let total: f64 = check_results.iter().map(|r| r.weight).sum();
    let earned: f64 = check_results.iter().map(|r| r.weight * r.score).sum();
    Ok(Verdict {
        strict_pass: check_results.iter().filter(|r| r.required).all(|r| r.passed),
        partial_score: earned / total,
        check_results,
    })
}

pub fn strict_accuracy(verdicts: &[Verdict]) -> Result<f64, EvalError> {
    if verdicts.is_empty() {
        return Err(EvalError::NoVerdicts);
    }
    let passes = verdicts.iter().filter(|v| v.strict_pass).count();
    Ok(passes as f64 / verdicts.len() as f64)
}

pub fn mean_partial(verdicts: &[Verdict]) -> Result<f64, EvalError> {
    if verdicts.is_empty() {
        return Err(EvalError::NoVerdicts);
    }
    Ok(verdicts.iter().map(|v| v.partial_score).sum::<f64>() / verdicts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn effect(kind: EffectKind, fields: &[(&'static str, &str)]) -> Effect {
        Effect::new(kind, fields.iter().map(|(k, v)| (*k, v.to_string())))
    }

    fn eval_with(effects: Vec<Effect>, last_exit: Option<i32>) -> EvalState {
        let mut s = build_eval_state([], &WorkflowState::base());
        s.effects = effects;
        s.last_exit = last_exit;
        s
    }

    fn check(id: &str, target: CheckTarget, predicate: Predicate) -> CheckSpec {
        let family = match target {
            CheckTarget::Effect(_) => CheckFamily::Effect,
            CheckTarget::State(_) => CheckFamily::State,
            CheckTarget::Output(_) => CheckFamily::Output,
        };
        CheckSpec {
            id: id.into(),
            family,
            target,
            predicate,
            matchers: BTreeMap::new(),
            arg: None,
            weight: 1.0,
            required: true,
        }
    }

    fn final_exit_zero(id: &str) -> CheckSpec {
        CheckSpec {
            arg: Some(CheckArg::Int(0)),
            ..check(id, CheckTarget::Output(OutputTarget::FinalExit), Predicate::Equals)
        }
    }

    #[test]
    fn handoff_path_containment() {
        let mut c = check("handoff", CheckTarget::Effect(EffectKind::FilesCreated), Predicate::CountGte);
        c.arg = Some(CheckArg::Int(1));
        c.matchers.insert("path".into(), "handoff".into());
        let s = eval_with(
            vec![effect(EffectKind::FilesCreated, &[("path", "/ops/release-handoff.txt")])],
            Some(0),
        );
        assert!(run_checks(&s, &[c.clone()]).unwrap().strict_pass);
        let s = eval_with(vec![effect(EffectKind::FilesCreated, &[("path", "/ops/notes.txt")])], Some(0));
        assert!(!run_checks(&s, &[c]).unwrap().strict_pass);
    }

    #[test]
    fn duplicate_guard() {
        let mut c = check("no_dup", CheckTarget::Effect(EffectKind::TasksCreated), Predicate::NotExists);
        c.matchers.insert("title".into(), "berlin budget follow-up".into());
        let dup = eval_with(
            vec![effect(EffectKind::TasksCreated, &[("title", "Berlin  Budget follow-up"), ("priority", "high")])],
            Some(0),
        );
        let v = run_checks(&dup, &[c.clone()]).unwrap();
        assert!(!v.strict_pass);
        assert_eq!(v.partial_score, 0.0);
        assert!(run_checks(&eval_with(vec![], Some(0)), &[c]).unwrap().strict_pass);
    }

    #[test]
    fn weighted_partial_credit() {
        let mut a = final_exit_zero("a");
        a.weight = 2.0;
        let mut b = final_exit_zero("b");
        b.arg = Some(CheckArg::Int(1));
        let c = final_exit_zero("c");
        let v = run_checks(&eval_with(vec![], Some(0)), &[a, b, c]).unwrap();
        assert!(!v.strict_pass);
        assert!((v.partial_score - 0.75).abs() < 1e-12);
    }

    #[test]
    fn optional_checks_do_not_gate_strict_pass() {
        let a = final_exit_zero("a");
        let mut b = final_exit_zero("b");
        b.arg = Some(CheckArg::Int(7));
        b.required = false;
        let v = run_checks(&eval_with(vec![], Some(0)), &[a, b]).unwrap();
        assert!(v.strict_pass);
        assert_eq!(v.partial_score, 0.5);
    }

    #[test]
    fn missing_final_exit_fails() {
        let v = run_checks(&eval_with(vec![], None), &[final_exit_zero("exit")]).unwrap();
        assert!(!v.strict_pass);
    }

    #[test]
    fn state_queries() {
        let mut st = WorkflowState::base();
        st.tasks.push(crate::state::Task {
            id: "task_seed_1".into(),
            title: "Existing Berlin budget follow-up".into(),
            priority: crate::state::Priority::Medium,
            due: None,
            status: TaskStatus::Pending,
        });
        let s = build_eval_state([], &st);
        let mut present = check(
            "present",
            CheckTarget::State(StateQuery {
                surface: StateSurface::Tasks,
                status: Some(TaskStatus::Pending),
            }),
            Predicate::Exists,
        );
        present.matchers.insert("title".into(), "berlin budget".into());
        assert!(run_checks(&s, &[present.clone()]).unwrap().strict_pass);
        present.target = CheckTarget::State(StateQuery {
            surface: StateSurface::Tasks,
            status: Some(TaskStatus::Completed),
        });
        assert!(!run_checks(&s, &[present]).unwrap().strict_pass);

        let mut model = check(
            "model",
            CheckTarget::State(StateQuery {
                surface: StateSurface::Config,
                status: None,
            }),
            Predicate::Equals,
        );
        model.matchers.insert("key".into(), "agent.model".into());
        model.arg = Some(CheckArg::Text("openclaw/default".into()));
        assert!(run_checks(&s, &[model.clone()]).unwrap().strict_pass);
        model.arg = Some(CheckArg::Text("openclaw/default-2".into()));
        assert!(!run_checks(&s, &[model]).unwrap().strict_pass);
    }

    #[test]
    fn malformed_suites_are_rejected() {
        let s = eval_with(vec![], Some(0));
        assert_eq!(run_checks(&s, &[]), Err(EvalError::NoChecks));
        let mut opt = final_exit_zero("opt");
        opt.required = false;
        assert_eq!(run_checks(&s, &[opt]), Err(EvalError::NoRequiredCheck));

        let mut cases = Vec::new();
        let mut c = final_exit_zero("weight");
        c.weight = 0.0;
        cases.push(c);
        cases.push(check("count_no_arg", CheckTarget::Effect(EffectKind::TasksCreated), Predicate::CountGte));
        let mut c = check("bad_field", CheckTarget::Effect(EffectKind::FilesCreated), Predicate::Exists);
        c.matchers.insert("title".into(), "x".into());
        cases.push(c);
        let mut c = final_exit_zero("family");
        c.family = CheckFamily::State;
        cases.push(c);
        cases.push(check("eq_effect", CheckTarget::Effect(EffectKind::ModelSet), Predicate::Equals));
        cases.push(check(
            "status_on_files",
            CheckTarget::State(StateQuery {
                surface: StateSurface::Files,
                status: Some(TaskStatus::Pending),
            }),
            Predicate::Exists,
        ));
        let mut c = check("neg", CheckTarget::Effect(EffectKind::TasksCreated), Predicate::CountEq);
        c.arg = Some(CheckArg::Int(-1));
        cases.push(c);
        for c in cases {
            let id = c.id.clone();
            match run_checks(&s, &[c]) {
                Err(EvalError::Malformed { id: got, .. }) => assert_eq!(got, id),
                other => panic!("{id}: {other:?}"),
            }
        }
    }

    #[test]
    fn aggregate_accuracy() {
        let v = |p: bool| Verdict {
            strict_pass: p,
            partial_score: if p { 1.0 } else { 0.5 },
            check_results: vec![],
        };
        let vs = [v(true), v(false), v(true), v(false)];
        assert_eq!(strict_accuracy(&vs).unwrap(), 0.5);
        assert_eq!(mean_partial(&vs).unwrap(), 0.75);
        assert_eq!(strict_accuracy(&[]), Err(EvalError::NoVerdicts));
        assert_eq!(mean_partial(&[]), Err(EvalError::NoVerdicts));
    }

    #[test]
    fn history_keeps_newest_entries() {
        let results: Vec<(String, ExecutionResult)> = (0..60)
            .map(|i| (format!("tasks list --status pending #{i}"), ExecutionResult::ok(String::new(), vec![])))
            .collect();
        let s = build_eval_state(results.iter().map(|(c, r)| (c.as_str(), r)), &WorkflowState::base());
        assert_eq!(s.history.len(), HISTORY_CAP);
        assert_eq!(s.history[0].command, results[10].0);
        assert_eq!(s.history.last().unwrap().command, results[59].0);
    }

    #[test]
    fn check_json_shape() {
        let json = r#"{"id":"handoff","family":"effect","target":"files_created","predicate":"count_gte","match":{"path":"handoff"},"arg":1}"#;
        let c: CheckSpec = serde_json::from_str(json).unwrap();
        assert_eq!(c.target, CheckTarget::Effect(EffectKind::FilesCreated));
        assert_eq!(c.weight, 1.0);
        assert!(c.required);
        let exit: CheckSpec = serde_json::from_str(
            r#"{"id":"exit","family":"output","target":"final_exit","predicate":"equals","arg":0}"#,
        )
        .unwrap();
        assert_eq!(exit.target, CheckTarget::Output(OutputTarget::FinalExit));
        let state: CheckSpec = serde_json::from_str(
            r#"{"id":"s","family":"state","target":{"surface":"tasks","status":"pending"},"predicate":"exists"}"#,
        )
        .unwrap();
        assert!(matches!(state.target, CheckTarget::State(_)));
        let back: CheckSpec = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
