//! Built-in agents: reference replay, scripted baselines, a grammar fuzzer,
//! and the bridge that drives an external agent over the wire protocol.

use std::fmt;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Child, ChildStdin, Command as Process, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::command::route::{self, VerbSpec, VERBS};
use crate::command::surfaces::CURL_FIXTURES;
use crate::command::{parse_command, CommandLine};
use crate::generator::slots::slot_table;
use crate::generator::TaskSpec;
use crate::protocol::{self, AgentMessage, DriverMessage};
use crate::rollout::{Agent, AgentError, AgentReply, Observation};
use crate::state::normalize_title;
use crate::zones::CITIES;

/// How long the bridge waits for an external agent's reply by default.
pub const DEFAULT_BRIDGE_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, thiserror::Error)]
pub enum AgentBuildError {
    #[error("task {0} has an empty reference trajectory")]
    EmptyReference(String),
    #[error("unknown agent spec {0:?} (expected replay, inspect_then_act, skip_inspection, random_valid[:seed], bridge:<command> or bridge:tcp://host:port)")]
    UnknownSpec(String),
    #[error("cannot start bridged agent {endpoint}: {source}")]
    Spawn {
        endpoint: String,
        #[source]
        source: io::Error,
    },
}

fn is_mutation(line: &str) -> bool {
    parse_command(line)
        .ok()
        .and_then(|c| route::route(&c).ok())
        .is_some_and(|spec| !spec.read_only)
}

/// Emits the reference trajectory in order, then `done`.
#[derive(Debug, Clone)]
pub struct ReplayAgent {
    commands: Vec<String>,
    next: usize,
}

impl ReplayAgent {
    pub fn new(task: &TaskSpec) -> Result<Self, AgentBuildError> {
        if task.reference_trajectory.is_empty() {
            return Err(AgentBuildError::EmptyReference(task.id.clone()));
        }
        Ok(Self::from_commands(task.reference_trajectory.clone()))
    }

    fn from_commands(commands: Vec<String>) -> Self {
        Self { commands, next: 0 }
    }
}

impl Agent for ReplayAgent {
    fn next_command(&mut self, _obs: &Observation) -> Result<AgentReply, AgentError> {
        let line = self.commands.get(self.next).cloned().unwrap_or_else(|| "done".into());
        self.next += 1;
        Ok(AgentReply::line(line))
    }
}

/// Acts without looking: emits only the mutating commands of the task's
/// naive recipe, then `done`.
pub fn skip_inspection(task: &TaskSpec) -> ReplayAgent {
    ReplayAgent::from_commands(
        task.metadata
            .naive_trajectory
            .iter()
            .filter(|c| is_mutation(c))
            .cloned()
            .collect(),
    )
}

/// Looks at the task board, calendar, cron jobs and target files first,
/// then emits the naive recipe's mutations, skipping any creation whose
/// title, name or path already showed up during inspection.
#[derive(Debug, Clone)]
pub struct InspectThenActAgent {
    probes: Vec<String>,
    plan: Vec<String>,
    seen: String,
    turn: usize,
    acting: Option<std::vec::IntoIter<String>>,
}

/// Flag whose value identifies what a creation command would create.
fn creation_key(cmd: &CommandLine) -> Option<&str> {
    let spec = route::route(cmd).ok()?;
    match (spec.surface.family(), spec.path) {
        ("tasks", ["add"]) | ("calendar", ["add-event"]) => cmd.flag("title"),
        ("openclaw", ["cron", "add"]) => cmd.flag("name"),
        ("file", ["create"]) => cmd.flag("path"),
        _ => None,
    }
}

impl InspectThenActAgent {
    pub fn new(task: &TaskSpec) -> Self {
        let plan: Vec<String> = task
            .metadata
            .naive_trajectory
            .iter()
            .filter(|c| is_mutation(c))
            .cloned()
            .collect();
        let mut probes: Vec<String> = [
            "tasks list --status all",
            "calendar list",
            "openclaw cron list",
        ]
        .map(String::from)
        .to_vec();
        for line in &plan {
            if let Ok(cmd) = parse_command(line) {
                if let ("file", Some(path)) = (cmd.family.as_str(), cmd.flag("path")) {
                    probes.push(format!("file read --path '{path}'"));
                }
            }
        }
        Self {
            probes,
            plan,
            seen: String::new(),
            turn: 0,
            acting: None,
        }
    }

    /// True when some inspected line mentions every word of the creation's
    /// key, e.g. `berlin-ops-check` against `berlin-daily-ops-check`.
    fn already_present(&self, line: &str) -> bool {
        let Ok(cmd) = parse_command(line) else { return false };
        let Some(key) = creation_key(&cmd) else { return false };
        let wanted = words(key);
        !wanted.is_empty()
            && self.seen.lines().any(|seen| {
                let have = words(seen);
                wanted.iter().all(|w| have.contains(w))
            })
    }
}

fn words(text: &str) -> Vec<String> {
    normalize_title(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

impl Agent for InspectThenActAgent {
    fn next_command(&mut self, obs: &Observation) -> Result<AgentReply, AgentError> {
        if self.turn > 0 && self.turn <= self.probes.len() && obs.last_exit == Some(0) {
            let probe = &self.probes[self.turn - 1];
            let out = obs.last_stdout.as_deref().unwrap_or_default();
            // A successful file read proves the file exists.
            let note = probe.strip_prefix("file read --path ").map(|p| p.trim_matches('\''));
            self.seen.push_str(note.unwrap_or(out));
            self.seen.push('\n');
        }
        self.turn += 1;
        if let Some(probe) = self.probes.get(self.turn - 1) {
            return Ok(AgentReply::line(probe.clone()));
        }
        if self.acting.is_none() {
            let todo: Vec<String> = self.plan.iter().filter(|l| !self.already_present(l)).cloned().collect();
            self.acting = Some(todo.into_iter());
        }
        let next = self.acting.as_mut().and_then(Iterator::next);
        Ok(AgentReply::line(next.unwrap_or_else(|| "done".into())))
    }
}

/// Seeded fuzzer: every line it emits is a well-formed command built from
/// the verb table, with values drawn from the grounding tables.
#[derive(Debug, Clone)]
pub struct RandomValidAgent {
    rng: ChaCha8Rng,
}

impl RandomValidAgent {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed derived from a run seed and a task id.
    pub fn for_task(seed: u64, task_id: &str) -> Self {
        let mut h = Sha256::new();
        h.update(task_id.as_bytes());
        h.update(seed.to_le_bytes());
        Self {
            rng: ChaCha8Rng::from_seed(h.finalize().into()),
        }
    }

    pub fn next_line(&mut self) -> String {
        let spec: &VerbSpec = VERBS.choose(&mut self.rng).expect("verb table is non-empty");
        let mut parts = vec![spec.surface.family().to_string()];
        parts.extend(spec.path.iter().map(|s| s.to_string()));
        for p in spec.positionals {
            parts.push(quote(&self.value(spec, p)));
        }
        for f in spec.required {
            parts.push(format!("--{f}"));
            parts.push(quote(&self.value(spec, f)));
        }
        for f in spec.optional {
            if self.rng.gen_bool(0.5) {
                parts.push(format!("--{f}"));
                parts.push(quote(&self.value(spec, f)));
            }
        }
        for s in spec.switches {
            if self.rng.gen_bool(0.5) {
                parts.push(format!("--{s}"));
            }
        }
        parts.join(" ")
    }

    fn pick(&mut self, xs: &[&str]) -> String {
        xs.choose(&mut self.rng).expect("non-empty choice").to_string()
    }

    fn table(&mut self, name: &str) -> String {
        let t = slot_table(name).expect("known grounding table");
        t.choose(&mut self.rng).expect("non-empty table").clone()
    }

    fn date(&mut self) -> String {
        if self.rng.gen_bool(0.2) {
            "2026-03-01".into()
        } else {
            self.table("due_date")
        }
    }

    fn value(&mut self, spec: &VerbSpec, name: &str) -> String {
        let city = CITIES.choose(&mut self.rng).expect("cities").name;
        match name {
            "status" => self.pick(&["pending", "completed", "all"]),
            "query" => {
                let topic = self.table("topic");
                self.pick(&[city, &topic, "review", "Existing"])
            }
            "title" => {
                let topic = self.table("topic");
                let pool = [
                    format!("{city} {topic} follow-up"),
                    format!("{city} ops next step"),
                    format!("Existing {city} release follow-up"),
                    format!("{city} release sync"),
                ];
                pool.choose(&mut self.rng).expect("pool").clone()
            }
            "priority" => self.pick(&["low", "medium", "high"]),
            "to" if spec.surface.family() == "email" => self.table("recipient"),
            "due" | "from" | "to" => self.date(),
            "timezone" => {
                let zone = CITIES.choose(&mut self.rng).expect("cities").zone;
                zone.to_string()
            }
            "start" => format!("{}T{}", self.date(), self.table("start_time")),
            "id" => {
                let n = self.rng.gen_range(1..=6);
                format!("email_seed_{n}")
            }
            "subject" => format!("{city} {} update", self.table("topic")),
            "body" | "content" => format!("Notes for {city}: {}.", self.table("topic")),
            "path" => {
                let slug = city.to_ascii_lowercase().replace(' ', "-");
                self.pick(&[
                    &format!("/handoff/{slug}-followup.txt"),
                    "/ops/release-handoff.txt",
                    "/ops/delivery-policy.txt",
                ])
            }
            "location" => city.to_string(),
            "days" => self.rng.gen_range(1..=3).to_string(),
            "key" => self.pick(&["agent.model", "agent.name", "gateway.port", "agent.missing"]),
            "model" => self.table("model"),
            "name" => format!("fuzz-check-{}", self.rng.gen_range(1..=4)),
            "cron" => self.table("cron_schedule"),
            "message" => format!("Run {city} daily ops check"),
            "channel" => self.pick(&["discord", "slack", "telegram", "irc"]),
            "target" => self.table("target"),
            "url" => {
                let (url, _) = CURL_FIXTURES.choose(&mut self.rng).expect("fixtures");
                url.to_string()
            }
            _ => self.table("topic"),
        }
    }
}

fn quote(v: &str) -> String {
    format!("'{}'", v.replace('\'', "'\"'\"'"))
}

impl Agent for RandomValidAgent {
    fn next_command(&mut self, _obs: &Observation) -> Result<AgentReply, AgentError> {
        Ok(AgentReply::line(self.next_line()))
    }
}

/// Where a bridged agent lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// A shell command line, spawned with the protocol on its stdin/stdout.
    Process(String),
    /// `host:port` of an agent listening for a TCP connection.
    Tcp(String),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Process(cmd) => f.write_str(cmd),
            Endpoint::Tcp(addr) => write!(f, "tcp://{addr}"),
        }
    }
}

/// Forwards observations to an external agent and relays its replies.
pub struct BridgeAgent {
    writer: Box<dyn Write + Send>,
    replies: Receiver<io::Result<String>>,
    timeout: Duration,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl fmt::Debug for BridgeAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BridgeAgent")
            .field("timeout", &self.timeout)
            .field("child", &self.child.as_ref().map(Child::id))
            .finish()
    }
}

fn spawn_reader<R: io::Read + Send + 'static>(stream: R) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stream).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    rx
}

impl BridgeAgent {
    pub fn connect(endpoint: &Endpoint, timeout: Duration) -> Result<Self, AgentBuildError> {
        let spawn_err = |source| AgentBuildError::Spawn {
            endpoint: endpoint.to_string(),
            source,
        };
        match endpoint {
            Endpoint::Process(cmdline) => {
                let mut child = Process::new("sh")
                    .arg("-c")
                    .arg(cmdline)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(spawn_err)?;
                let stdin: ChildStdin = child.stdin.take().expect("stdin is piped");
                let stdout = child.stdout.take().expect("stdout is piped");
                Ok(Self {
                    writer: Box::new(stdin),
                    replies: spawn_reader(stdout),
                    timeout,
                    child: Some(child),
                    socket: None,
                })
            }
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(spawn_err)?;
                let reader = stream.try_clone().map_err(spawn_err)?;
                let socket = stream.try_clone().map_err(spawn_err)?;
                Ok(Self {
                    writer: Box::new(stream),
                    replies: spawn_reader(reader),
                    timeout,
                    child: None,
                    socket: Some(socket),
                })
            }
        }
    }
}

impl Agent for BridgeAgent {
    fn next_command(&mut self, obs: &Observation) -> Result<AgentReply, AgentError> {
        let msg = protocol::encode(&DriverMessage::Observation(obs.clone()));
        self.writer
            .write_all(msg.as_bytes())
            .and_then(|()| self.writer.flush())
            .map_err(|e| AgentError::Disconnected(e.to_string()))?;
        let mut provider_events = Vec::new();
        loop {
            let line = match self.replies.recv_timeout(self.timeout) {
                Ok(line) => line?,
                Err(RecvTimeoutError::Timeout) => return Err(AgentError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(AgentError::Disconnected("stream closed".into()))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            match protocol::decode_agent(&line).map_err(|e| AgentError::Malformed(format!("{e}: {line}")))? {
                AgentMessage::ProviderEvent { kind } => provider_events.push(kind),
                AgentMessage::Command { line } => return Ok(AgentReply { line, provider_events }),
                AgentMessage::Stop => {
                    return Ok(AgentReply {
                        line: protocol::STOP_LINE.into(),
                        provider_events,
                    })
                }
            }
        }
    }
}

impl Drop for BridgeAgent {
    fn drop(&mut self) {
        // The reader thread holds its own handle; shutting the socket down
        // is what tells the peer the episode is over.
        if let Some(socket) = self.socket.take() {
            let _ = socket.shutdown(Shutdown::Both);
        }
        if let Some(mut child) = self.child.take() {
            // Closing stdin lets a well-behaved agent exit on its own.
            self.writer = Box::new(io::sink());
            for _ in 0..50 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Replay,
    InspectThenAct,
    SkipInspection,
    RandomValid,
    Bridge,
}

/// A parsed `--agent` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub seed: u64,
    pub endpoint: Option<Endpoint>,
    pub timeout: Duration,
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            seed: 0,
            endpoint: None,
            timeout: DEFAULT_BRIDGE_TIMEOUT,
        }
    }

    /// Builds a fresh agent for one episode of `task`.
    pub fn build(&self, task: &TaskSpec) -> Result<Box<dyn Agent>, AgentBuildError> {
        Ok(match self.kind {
            AgentKind::Replay => Box::new(ReplayAgent::new(task)?),
            AgentKind::InspectThenAct => Box::new(InspectThenActAgent::new(task)),
            AgentKind::SkipInspection => Box::new(skip_inspection(task)),
            AgentKind::RandomValid => Box::new(RandomValidAgent::for_task(self.seed, &task.id)),
            AgentKind::Bridge => {
                let endpoint = self.endpoint.as_ref().ok_or_else(|| AgentBuildError::UnknownSpec("bridge".into()))?;
                Box::new(BridgeAgent::connect(endpoint, self.timeout)?)
            }
        })
    }
}

impl FromStr for AgentConfig {
    type Err = AgentBuildError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || AgentBuildError::UnknownSpec(s.to_string());
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let kind = match head {
            "replay" => AgentKind::Replay,
            "inspect_then_act" => AgentKind::InspectThenAct,
            "skip_inspection" => AgentKind::SkipInspection,
            "random_valid" => AgentKind::RandomValid,
            "bridge" => AgentKind::Bridge,
            _ => return Err(unknown()),
        };
        let mut cfg = AgentConfig::new(kind);
        match (kind, rest) {
            (AgentKind::RandomValid, Some(seed)) => cfg.seed = seed.parse().map_err(|_| unknown())?,
            (AgentKind::Bridge, Some(target)) if !target.trim().is_empty() => {
                cfg.endpoint = Some(match target.strip_prefix("tcp://") {
                    Some(addr) => Endpoint::Tcp(addr.to_string()),
                    None => Endpoint::Process(target.to_string()),
                });
            }
            (AgentKind::Bridge, _) => return Err(unknown()),
            (_, None) => {}
            (_, Some(_)) => return Err(unknown()),
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::Engine;
    use crate::generator::{builtin_templates, generate_task, PromptStyle};
    use crate::rollout::{run_episode, StopReason, DEFAULT_BUDGET};
    use crate::state::WorkflowState;

    fn task(family: &str, seed: u64) -> TaskSpec {
        let t = builtin_templates().into_iter().find(|t| t.family == family).unwrap();
        generate_task(&t, seed, PromptStyle::Directive).unwrap()
    }

    fn run(task: &TaskSpec, cfg: &str) -> crate::rollout::EpisodeRecord {
        let mut agent = cfg.parse::<AgentConfig>().unwrap().build(task).unwrap();
        let dir = tempfile::tempdir().unwrap();
        run_episode(task, agent.as_mut(), DEFAULT_BUDGET, dir.path()).unwrap()
    }

    #[test]
    fn replay_closes_every_family() {
        for family in crate::generator::FAMILIES {
            let t = task(family, 11);
            let rec = run(&t, "replay");
            assert!(rec.verdict.strict_pass, "{family}: {}", rec.verdict);
            assert_eq!(rec.stop_reason, StopReason::AgentDone);
        }
    }

    #[test]
    fn skip_inspection_only_mutates() {
        let t = task("interrupted_workflow_resume", 2);
        let rec = run(&t, "skip_inspection");
        assert!(rec.steps.iter().all(|s| is_mutation(&s.command)));
        assert!(!rec.verdict.strict_pass);
    }

    #[test]
    fn inspect_then_act_avoids_recreating_seeded_items() {
        for family in ["duplicate_avoidance", "interrupted_workflow_resume"] {
            let t = task(family, 5);
            let rec = run(&t, "inspect_then_act");
            let dup = rec
                .verdict
                .check_results
                .iter()
                .filter(|c| c.id.starts_with("no_duplicate"))
                .all(|c| c.passed);
            assert!(dup, "{family}: {}", rec.verdict);
        }
    }

    #[test]
    fn random_valid_is_deterministic_and_always_parses() {
        let mut a = RandomValidAgent::new(9);
        let mut b = RandomValidAgent::new(9);
        let engine = Engine::default();
        let mut state = WorkflowState::base();
        for _ in 0..2000 {
            let line = a.next_line();
            assert_eq!(line, b.next_line());
            let r = engine.execute_line(&line, &mut state);
            assert!(r.exit_code == 0 || r.exit_code == 1, "{line}: {}", r.stderr);
        }
    }

    #[test]
    fn agent_specs() {
        assert_eq!("replay".parse::<AgentConfig>().unwrap().kind, AgentKind::Replay);
        assert_eq!("random_valid:42".parse::<AgentConfig>().unwrap().seed, 42);
        assert_eq!(
            "bridge:tcp://127.0.0.1:9000".parse::<AgentConfig>().unwrap().endpoint,
            Some(Endpoint::Tcp("127.0.0.1:9000".into()))
        );
        assert_eq!(
            "bridge:python3 agent.py".parse::<AgentConfig>().unwrap().endpoint,
            Some(Endpoint::Process("python3 agent.py".into()))
        );
        for bad in ["bridge", "bridge:", "replay:1", "random_valid:x", "llm"] {
            assert!(bad.parse::<AgentConfig>().is_err(), "{bad}");
        }
    }

    #[test]
    fn replay_rejects_empty_reference() {
        let mut t = task("inbox", 1);
        t.reference_trajectory.clear();
        assert!(matches!(ReplayAgent::new(&t), Err(AgentBuildError::EmptyReference(_))));
    }
}
