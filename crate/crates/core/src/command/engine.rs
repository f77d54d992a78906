//! Execution modes and the routed dispatch loop.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::effect::ExecutionResult;
use super::grammar::{parse_command, CommandLine};
use super::route::{bind, route, Command, Surface};
use super::surfaces::{self, Outcome};
use crate::state::WorkflowState;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    /// One in-process backend handles every family.
    Mock,
    /// Each command family is routed to its own registered executor.
    #[default]
    Multi,
    /// Subprocess-backed `openclaw` branch. Not shipped.
    Real,
    /// `Real` plus gateway lifecycle management. Not shipped.
    Hybrid,
}

impl FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(Self::Mock),
            "multi" => Ok(Self::Multi),
            "real" => Ok(Self::Real),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(format!("unknown execution mode {other:?}")),
        }
    }
}

impl fmt::Display for ExecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mock => "mock",
            Self::Multi => "multi",
            Self::Real => "real",
            Self::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("execution mode `{0}` needs an external openclaw backend; register one with Engine::register")]
    BackendRequired(ExecMode),
}

/// A backend for one routed surface. Implementations must leave `state`
/// untouched when they return `Err`; the engine enforces this anyway by
/// running them against a scratch copy.
pub trait SurfaceExecutor: Send + Sync {
    fn execute(&self, cmd: &Command, state: &mut WorkflowState) -> Outcome;
}

struct MockBackend;

impl SurfaceExecutor for MockBackend {
    fn execute(&self, cmd: &Command, state: &mut WorkflowState) -> Outcome {
        surfaces::dispatch(cmd, state)
    }
}

/// Skill adapter bound to a single surface.
struct SkillAdapter {
    surface: Surface,
}

impl SurfaceExecutor for SkillAdapter {
    fn execute(&self, cmd: &Command, state: &mut WorkflowState) -> Outcome {
        if cmd.surface() != self.surface {
            return Err(format!("{} adapter received a {} command", self.surface, cmd.surface()));
        }
        match self.surface {
            Surface::Tasks => surfaces::tasks(cmd, state),
            Surface::Calendar => surfaces::calendar(cmd, state),
            Surface::Email => surfaces::email(cmd, state),
            Surface::File => surfaces::file(cmd, state),
            Surface::Weather => surfaces::weather(cmd, state),
            Surface::Curl => surfaces::curl(cmd),
            _ => surfaces::openclaw(cmd, state),
        }
    }
}

#[derive(Clone)]
pub struct Engine {
    mode: ExecMode,
    routes: BTreeMap<Surface, Arc<dyn SurfaceExecutor>>,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("mode", &self.mode)
            .field("routes", &self.routes.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(ExecMode::Multi).expect("multi mode needs no external backend")
    }
}

impl Engine {
    pub fn new(mode: ExecMode) -> Result<Self, EngineError> {
        let mut routes: BTreeMap<Surface, Arc<dyn SurfaceExecutor>> = BTreeMap::new();
        match mode {
            ExecMode::Mock => {
                let backend: Arc<dyn SurfaceExecutor> = Arc::new(MockBackend);
                for s in Surface::ALL {
                    routes.insert(s, backend.clone());
                }
            }
            ExecMode::Multi => {
                for s in Surface::ALL {
                    routes.insert(s, Arc::new(SkillAdapter { surface: s }));
                }
            }
            ExecMode::Real | ExecMode::Hybrid => return Err(EngineError::BackendRequired(mode)),
        }
        Ok(Self { mode, routes })
    }

    pub fn mode(&self) -> ExecMode {
        self.mode
    }

    /// Replaces the executor for one surface.
    pub fn register(&mut self, surface: Surface, executor: Arc<dyn SurfaceExecutor>) {
        self.routes.insert(surface, executor);
    }

    pub fn execute_line(&self, line: &str, state: &mut WorkflowState) -> ExecutionResult {
        match parse_command(line) {
            Ok(cmd) => self.execute(&cmd, state),
            Err(e) => ExecutionResult::failed(EXIT_USAGE, format!("parse error: {e}\n")),
        }
    }

    /// Routes, binds and runs one command. On any non-zero exit the state
    /// is left exactly as it was.
    pub fn execute(&self, cmd: &CommandLine, state: &mut WorkflowState) -> ExecutionResult {
        if cmd.is_control() {
            return ExecutionResult::failed(
                EXIT_USAGE,
                "control commands end the episode and are not executed\n".to_string(),
            );
        }
        let spec = match route(cmd) {
            Ok(spec) => spec,
            Err(e) => return ExecutionResult::failed(EXIT_USAGE, format!("{e}\n")),
        };
        let bound = match bind(cmd, spec) {
            Ok(b) => b,
            Err(e) => return ExecutionResult::failed(EXIT_USAGE, format!("{e}\n")),
        };
        let Some(executor) = self.routes.get(&spec.surface) else {
            return ExecutionResult::failed(
                EXIT_USAGE,
                format!("unknown command: no executor registered for {}\n", spec.surface),
            );
        };
        let mut scratch = state.clone();
        match executor.execute(&bound, &mut scratch) {
            Ok(out) => {
                if let Err(e) = scratch.validate() {
                    return ExecutionResult::failed(EXIT_FAILED, format!("{e}\n"));
                }
                *state = scratch;
                ExecutionResult::ok(out.stdout, out.effects)
            }
            Err(mut stderr) => {
                if !stderr.ends_with('\n') {
                    stderr.push('\n');
                }
                ExecutionResult::failed(EXIT_FAILED, stderr)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::effect::EffectKind;
    use crate::state::{Priority, StateOverrides, Task, TaskStatus};

    fn seeded() -> WorkflowState {
        let mut s = WorkflowState::base();
        StateOverrides {
            tasks: vec![Task {
                id: "task_seed_1".into(),
                title: "Existing Seattle release follow-up".into(),
                priority: Priority::Low,
                due: None,
                status: TaskStatus::Pending,
            }],
            ..Default::default()
        }
        .apply(&mut s)
        .unwrap();
        s
    }

    #[test]
    fn handoff_file_creation() {
        let engine = Engine::default();
        let mut s = WorkflowState::base();
        let r = engine.execute_line(
            "file create --path '/handoff/berlin-budget-followup.txt' --content 'Berlin budget follow-up handoff note.'",
            &mut s,
        );
        assert_eq!(r.exit_code, 0);
        assert_eq!(r.effects.len(), 1);
        assert_eq!(r.effects[0].kind, EffectKind::FilesCreated);
        assert!(r.effects[0].field("path").unwrap().contains("handoff"));
        let again = engine.execute_line(
            "file create --path '/handoff/berlin-budget-followup.txt' --content 'Berlin budget follow-up handoff note.'",
            &mut s,
        );
        assert_eq!(again.exit_code, 0);
        assert!(again.effects.is_empty());
    }

    #[test]
    fn completing_seeded_task() {
        let engine = Engine::default();
        let mut s = seeded();
        let r = engine.execute_line("tasks complete --title 'Existing Seattle release follow-up'", &mut s);
        assert_eq!(r.exit_code, 0, "{}", r.stderr);
        assert_eq!(r.effects[0].kind, EffectKind::TasksCompleted);
        assert_eq!(s.tasks[0].status, TaskStatus::Completed);
        let r = engine.execute_line("tasks complete --title 'Existing Seattle release follow-up'", &mut s);
        assert_eq!(r.exit_code, 1);
    }

    #[test]
    fn message_requires_login() {
        let engine = Engine::default();
        let mut s = WorkflowState::base();
        let before = s.fingerprint();
        let r = engine.execute_line(
            "openclaw message send --channel discord --target #general --message 'Incident escalation started.'",
            &mut s,
        );
        assert_eq!(r.exit_code, 1);
        assert!(r.stderr.contains("login"));
        assert!(r.effects.is_empty());
        assert_eq!(s.fingerprint(), before);
        assert_eq!(engine.execute_line("openclaw channels login --channel discord", &mut s).exit_code, 0);
        let r = engine.execute_line(
            "openclaw message send --channel discord --target #general --message 'Incident escalation started.'",
            &mut s,
        );
        assert_eq!(r.exit_code, 0);
        assert_eq!(r.effects[0].kind, EffectKind::MessagesSent);
    }

    #[test]
    fn model_switch_updates_config() {
        let engine = Engine::default();
        let mut s = WorkflowState::base();
        let r = engine.execute_line("openclaw models set anthropic/claude-opus-4-6", &mut s);
        assert_eq!(r.exit_code, 0);
        assert_eq!(s.config.get("agent.model"), Some("anthropic/claude-opus-4-6"));
        assert_eq!(r.effects[0].kind, EffectKind::ModelSet);
        assert_eq!(r.effects[0].field("previous"), Some("openclaw/default"));
        let r = engine.execute_line("openclaw config get agent.model", &mut s);
        assert_eq!(r.stdout, "anthropic/claude-opus-4-6\n");
        assert!(r.effects.is_empty());
    }

    #[test]
    fn usage_and_routing_errors_exit_two() {
        let engine = Engine::default();
        let mut s = WorkflowState::base();
        for line in ["frobnicate now", "tasks add --title", "tasks add --priority high", "", "tasks delete", "done"] {
            let r = engine.execute_line(line, &mut s);
            assert_eq!(r.exit_code, EXIT_USAGE, "{line}");
            assert!(r.effects.is_empty());
        }
        assert!(engine.execute_line("frobnicate now", &mut s).stderr.contains("unknown command"));
    }

    #[test]
    fn semantic_errors_exit_one() {
        let engine = Engine::default();
        let mut s = WorkflowState::base();
        let before = s.fingerprint();
        for line in [
            "tasks add --title x --due 2026-13-01",
            "tasks add --title x --priority urgent",
            "calendar add-event --title x --start tomorrow",
            "email read --id email_seed_99",
            "email send --to nobody --subject s --body b",
            "file read --path /nope.txt",
            "file create --path relative.txt --content x",
            "openclaw config get agent.colour",
            "openclaw cron add --name x --cron '99 * * * *' --message m",
            "weather forecast --location Berlin --days 1",
            "calendar today --timezone Mars/Base",
            "curl https://example.org/",
            "openclaw channels login --channel irc",
        ] {
            let r = engine.execute_line(line, &mut s);
            assert_eq!(r.exit_code, EXIT_FAILED, "{line}: {}", r.stdout);
            assert!(!r.stderr.is_empty());
            assert!(r.effects.is_empty());
            assert_eq!(s.fingerprint(), before, "{line}");
        }
    }

    #[test]
    fn calendar_range_is_inclusive() {
        let engine = Engine::default();
        let mut s = WorkflowState::base();
        engine.execute_line("calendar add-event --title 'A' --start 2026-03-10T09:00", &mut s);
        engine.execute_line("calendar add-event --title 'B' --start 2026-03-11T23:59", &mut s);
        let r = engine.execute_line("calendar list --from 2026-03-10 --to 2026-03-10", &mut s);
        assert_eq!(r.stdout.lines().count(), 1);
        assert!(r.stdout.contains("\tA"));
        let r = engine.execute_line("calendar list --from 2026-03-10 --to 2026-03-11", &mut s);
        assert_eq!(r.stdout.lines().count(), 2);
    }

    #[test]
    fn calendar_today_uses_requested_zone() {
        let engine = Engine::default();
        let mut s = WorkflowState::base();
        engine.execute_line("calendar add-event --title 'Early' --start 2026-03-01T07:00", &mut s);
        let r = engine.execute_line("calendar today --timezone Europe/Berlin", &mut s);
        assert!(r.stdout.starts_with("today is 2026-03-01"));
        assert!(r.stdout.contains("Early"));
        let r = engine.execute_line("calendar today --timezone America/Los_Angeles", &mut s);
        assert!(r.stdout.starts_with("today is 2026-02-28"));
        assert!(r.stdout.contains("no events today"));
    }

    #[test]
    fn duplicates_are_permitted_by_executors() {
        let engine = Engine::default();
        let mut s = WorkflowState::base();
        for _ in 0..2 {
            let r = engine.execute_line("tasks add --title 'Same' --priority high", &mut s);
            assert_eq!(r.exit_code, 0);
        }
        assert_eq!(s.tasks.len(), 2);
        assert_ne!(s.tasks[0].id, s.tasks[1].id);
    }

    #[test]
    fn real_modes_need_a_backend() {
        assert!(matches!(Engine::new(ExecMode::Real), Err(EngineError::BackendRequired(_))));
        assert!(matches!(Engine::new(ExecMode::Hybrid), Err(EngineError::BackendRequired(_))));
        assert_eq!("multi".parse::<ExecMode>(), Ok(ExecMode::Multi));
    }

    #[test]
    fn mock_and_multi_agree() {
        let mock = Engine::new(ExecMode::Mock).unwrap();
        let multi = Engine::new(ExecMode::Multi).unwrap();
        let mut a = WorkflowState::base();
        let mut b = WorkflowState::base();
        for line in [
            "tasks add --title 'x' --due 2026-03-08",
            "openclaw channels login --channel slack",
            "openclaw message send --channel slack --target ops --message hi",
            "openclaw channels list --json",
            "curl https://status.example.com/api/health",
            "openclaw security audit",
        ] {
            assert_eq!(mock.execute_line(line, &mut a), multi.execute_line(line, &mut b), "{line}");
        }
        assert_eq!(a, b);
    }

    #[test]
    fn registered_executor_overrides_route() {
        struct Fixed;
        impl SurfaceExecutor for Fixed {
            fn execute(&self, _: &Command, _: &mut WorkflowState) -> Outcome {
                Ok(surfaces::Output {
                    stdout: "from real backend\n".into(),
                    effects: Vec::new(),
                })
            }
        }
        let mut engine = Engine::default();
        engine.register(Surface::OpenclawSecurity, Arc::new(Fixed));
        let mut s = WorkflowState::base();
        let r = engine.execute_line("openclaw security audit", &mut s);
        assert_eq!(r.stdout, "from real backend\n");
    }
}
