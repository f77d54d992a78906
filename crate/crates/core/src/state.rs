//! Simulated workflow surfaces, override materialization and the on-disk
//! episode directory format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize};

use crate::canonical;
use crate::cron;
use crate::zones;

pub const DEFAULT_ZONE: &str = "Europe/Berlin";

/// Surface file names, in the order they are written.
pub const SURFACE_FILES: [&str; 9] = [
    "tasks.json",
    "calendar.json",
    "email.json",
    "files.json",
    "cron.json",
    "weather.json",
    "channels.json",
    "config.json",
    "clock.json",
];

pub const SUPPORTED_CHANNELS: &[&str] = &["discord", "slack", "telegram"];

#[derive(Debug, thiserror::Error)]
pub enum StateError {
    #[error("invalid {surface} record {record}: {reason}")]
    Invalid {
        surface: &'static str,
        record: String,
        reason: String,
    },
    #[error("episode directory {0} is not empty")]
    DirNotEmpty(PathBuf),
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed {path}: {source}")]
    Decode {
        path: PathBuf,
        source: serde_json::Error,
    },
}

fn invalid(surface: &'static str, record: impl Into<String>, reason: impl Into<String>) -> StateError {
    StateError::Invalid {
        surface,
        record: record.into(),
        reason: reason.into(),
    }
}

/// Serde adapter for minute-precision local datetimes (`2026-03-10T09:00`).
pub mod minute_time {
    use chrono::NaiveDateTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub const FORMAT: &str = "%Y-%m-%dT%H:%M";

    pub fn parse(s: &str) -> Option<NaiveDateTime> {
        NaiveDateTime::parse_from_str(s.trim(), FORMAT).ok()
    }

    pub fn serialize<S: Serializer>(t: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.format(FORMAT).to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).ok_or_else(|| serde::de::Error::custom(format!("bad datetime {raw:?}")))
    }
}

/// Accepts `true`/`false` either as booleans or as their string spellings,
/// which is what rendered template recipes produce.
fn lenient_bool<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Bool(bool),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Bool(b) => Ok(b),
        Raw::Text(t) => match t.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(serde::de::Error::custom(format!("expected boolean, got {other:?}"))),
        },
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    Low,
    Medium,
    High,
}

impl Priority {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Some(Self::Low),
            "medium" => Some(Self::Medium),
            "high" => Some(Self::High),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Completed,
}

impl TaskStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pending => "pending",
            Self::Completed => "completed",
        }
    }
}

fn default_priority() -> Priority {
    Priority::Medium
}

fn default_status() -> TaskStatus {
    TaskStatus::Pending
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub title: String,
    #[serde(default = "default_priority")]
    pub priority: Priority,
    #[serde(default)]
    pub due: Option<NaiveDate>,
    #[serde(default = "default_status")]
    pub status: TaskStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarEvent {
    pub id: String,
    pub title: String,
    #[serde(with = "minute_time")]
    pub start: NaiveDateTime,
    pub timezone: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Inbound,
    Outbound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Email {
    pub id: String,
    pub direction: Direction,
    pub from: String,
    pub to: String,
    pub subject: String,
    #[serde(default)]
    pub body: String,
    #[serde(default, deserialize_with = "lenient_bool")]
    pub read: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    #[serde(default)]
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CronJob {
    pub name: String,
    pub schedule: String,
    pub message: String,
    #[serde(default = "default_true", deserialize_with = "lenient_bool")]
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastDay {
    pub location: String,
    pub date: NaiveDate,
    pub summary: String,
    #[serde(deserialize_with = "lenient_bool")]
    pub risky: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMessage {
    pub target: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelState {
    pub channel: String,
    pub logged_in: bool,
    #[serde(default)]
    pub messages: Vec<ChannelMessage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayState {
    Ready,
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStatus {
    pub state: GatewayState,
}

impl Default for GatewayStatus {
    fn default() -> Self {
        Self {
            state: GatewayState::Ready,
        }
    }
}

/// Dotted configuration keys (`agent.model`) to text values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigStore {
    pub entries: BTreeMap<String, String>,
}

impl ConfigStore {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn is_valid_key(key: &str) -> bool {
        !key.is_empty()
            && key.split('.').count() >= 2
            && key.split('.').all(|part| {
                let mut chars = part.chars();
                matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
                    && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            })
    }
}

/// The virtual "now" of an episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clock {
    #[serde(with = "minute_time")]
    pub now: NaiveDateTime,
    pub timezone: String,
}

impl Clock {
    pub fn anchor(zone: &str) -> Self {
        Self {
            now: NaiveDate::from_ymd_opt(2026, 3, 1)
                .and_then(|d| d.and_hms_opt(8, 0, 0))
                .expect("anchor date is valid"),
            timezone: zone.to_string(),
        }
    }

    /// Today's date as seen from `zone`.
    pub fn date_in(&self, zone: &str) -> Option<NaiveDate> {
        zones::convert(self.now, &self.timezone, zone).map(|t| t.date())
    }
}

impl Default for Clock {
    fn default() -> Self {
        Self::anchor(DEFAULT_ZONE)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowState {
    pub tasks: Vec<Task>,
    pub events: Vec<CalendarEvent>,
    pub inbox: Vec<Email>,
    pub files: Vec<FileEntry>,
    pub cron_jobs: Vec<CronJob>,
    pub forecasts: Vec<ForecastDay>,
    pub channels: Vec<ChannelState>,
    pub config: ConfigStore,
    pub gateway: GatewayStatus,
    pub clock: Clock,
}

impl WorkflowState {
    /// A state with no records at all, on the default clock anchor.
    pub fn empty() -> Self {
        Self {
            tasks: Vec::new(),
            events: Vec::new(),
            inbox: Vec::new(),
            files: Vec::new(),
            cron_jobs: Vec::new(),
            forecasts: Vec::new(),
            channels: Vec::new(),
            config: ConfigStore::default(),
            gateway: GatewayStatus::default(),
            clock: Clock::default(),
        }
    }

    /// The shared base state every task starts from before overrides.
    pub fn base() -> Self {
        let mut s = Self::empty();
        s.inbox = vec![
            Email {
                id: "email_seed_1".into(),
                direction: Direction::Inbound,
                from: "it@example.com".into(),
                to: "me@example.com".into(),
                subject: "Welcome to the operations workspace".into(),
                body: "Your workspace is ready. Tasks, calendar, files and channels are connected."
                    .into(),
                read: true,
            },
            Email {
                id: "email_seed_2".into(),
                direction: Direction::Inbound,
                from: "digest@example.com".into(),
                to: "me@example.com".into(),
                subject: "Weekly digest".into(),
                body: "Nothing urgent this week. Remember to keep handoff notes current.".into(),
                read: false,
            },
        ];
        s.files = vec![FileEntry {
            path: "/README.txt".into(),
            content: "Shared operations workspace. Handoff notes live under /handoff and /ops.\n"
                .into(),
        }];
        s.channels = SUPPORTED_CHANNELS
            .iter()
            .map(|c| ChannelState {
                channel: (*c).to_string(),
                logged_in: false,
                messages: Vec::new(),
            })
            .collect();
        s.config.entries.insert("agent.model".into(), "openclaw/default".into());
        s.config.entries.insert("agent.name".into(), "ops-assistant".into());
        s.config.entries.insert("gateway.port".into(), "18789".into());
        s
    }

    pub fn task_by_title(&self, title: &str, status: TaskStatus) -> Option<usize> {
        let wanted = normalize_title(title);
        self.tasks
            .iter()
            .position(|t| t.status == status && normalize_title(&t.title) == wanted)
    }

    pub fn channel(&self, name: &str) -> Option<&ChannelState> {
        self.channels.iter().find(|c| c.channel.eq_ignore_ascii_case(name))
    }

    pub fn channel_mut(&mut self, name: &str) -> Option<&mut ChannelState> {
        self.channels
            .iter_mut()
            .find(|c| c.channel.eq_ignore_ascii_case(name))
    }

    pub fn file(&self, path: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == path)
    }

    /// Checks every per-surface invariant.
    pub fn validate(&self) -> Result<(), StateError> {
        let mut ids = BTreeSet::new();
        for t in &self.tasks {
            if !ids.insert(t.id.as_str()) {
                return Err(invalid("tasks", &t.id, "duplicate id"));
            }
            if t.id.trim().is_empty() {
                return Err(invalid("tasks", &t.title, "empty id"));
            }
            if t.title.trim().is_empty() {
                return Err(invalid("tasks", &t.id, "empty title"));
            }
        }
        let mut ids = BTreeSet::new();
        for e in &self.events {
            if !ids.insert(e.id.as_str()) {
                return Err(invalid("calendar", &e.id, "duplicate id"));
            }
            if e.title.trim().is_empty() {
                return Err(invalid("calendar", &e.id, "empty title"));
            }
            if !zones::is_supported_zone(&e.timezone) {
                return Err(invalid("calendar", &e.id, format!("unsupported timezone {}", e.timezone)));
            }
        }
        let mut ids = BTreeSet::new();
        for m in &self.inbox {
            if !ids.insert(m.id.as_str()) {
                return Err(invalid("email", &m.id, "duplicate id"));
            }
            if m.direction == Direction::Outbound && m.to.trim().is_empty() {
                return Err(invalid("email", &m.id, "outbound email without recipient"));
            }
        }
        let mut paths = BTreeSet::new();
        for f in &self.files {
            if !f.path.starts_with('/') {
                return Err(invalid("files", &f.path, "path must start with /"));
            }
            if !paths.insert(f.path.as_str()) {
                return Err(invalid("files", &f.path, "duplicate path"));
            }
        }
        let mut names = BTreeSet::new();
        for j in &self.cron_jobs {
            if !names.insert(j.name.as_str()) {
                return Err(invalid("cron", &j.name, "duplicate name"));
            }
            if let Err(e) = cron::validate(&j.schedule) {
                return Err(invalid("cron", &j.name, e.to_string()));
            }
        }
        let mut days = BTreeSet::new();
        for d in &self.forecasts {
            if !days.insert((d.location.to_ascii_lowercase(), d.date)) {
                return Err(invalid("weather", format!("{}@{}", d.location, d.date), "duplicate day"));
            }
        }
        let mut chans = BTreeSet::new();
        for c in &self.channels {
            if !chans.insert(c.channel.as_str()) {
                return Err(invalid("channels", &c.channel, "duplicate channel"));
            }
            if !c.logged_in && !c.messages.is_empty() {
                return Err(invalid("channels", &c.channel, "messages on a logged-out channel"));
            }
        }
        for key in self.config.entries.keys() {
            if !ConfigStore::is_valid_key(key) {
                return Err(invalid("config", key, "keys must be dotted lowercase identifiers"));
            }
        }
        if !zones::is_supported_zone(&self.clock.timezone) {
            return Err(invalid("clock", &self.clock.timezone, "unsupported timezone"));
        }
        Ok(())
    }

    /// Canonical per-surface serialization, keyed by file name.
    pub fn surface_documents(&self) -> Vec<(&'static str, String)> {
        #[derive(Serialize)]
        struct ConfigDoc<'a> {
            entries: &'a BTreeMap<String, String>,
            gateway: &'a GatewayStatus,
        }
        let config = ConfigDoc {
            entries: &self.config.entries,
            gateway: &self.gateway,
        };
        vec![
            ("tasks.json", canonical::to_string(&self.tasks)),
            ("calendar.json", canonical::to_string(&self.events)),
            ("email.json", canonical::to_string(&self.inbox)),
            ("files.json", canonical::to_string(&self.files)),
            ("cron.json", canonical::to_string(&self.cron_jobs)),
            ("weather.json", canonical::to_string(&self.forecasts)),
            ("channels.json", canonical::to_string(&self.channels)),
            ("config.json", canonical::to_string(&config)),
            ("clock.json", canonical::to_string(&self.clock)),
        ]
    }

    /// Concatenated canonical serialization; equal states give equal bytes.
    pub fn fingerprint(&self) -> String {
        self.surface_documents()
            .into_iter()
            .map(|(name, doc)| format!("== {name}\n{doc}"))
            .collect()
    }

    /// Next free runtime id for a surface (`task_3`, `event_1`, ...).
    pub(crate) fn next_id<'a>(prefix: &str, existing: impl Iterator<Item = &'a str> + Clone) -> String {
        let runtime = existing
            .clone()
            .filter(|id| {
                id.strip_prefix(prefix)
                    .and_then(|rest| rest.strip_prefix('_'))
                    .is_some_and(|n| n.chars().all(|c| c.is_ascii_digit()))
            })
            .count();
        let mut n = runtime + 1;
        loop {
            let candidate = format!("{prefix}_{n}");
            if !existing.clone().any(|id| id == candidate) {
                return candidate;
            }
            n += 1;
        }
    }
}

/// Case- and whitespace-insensitive title key.
pub fn normalize_title(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Additive, per-surface records applied on top of a base state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StateOverrides {
    pub tasks: Vec<Task>,
    pub events: Vec<CalendarEvent>,
    pub emails: Vec<Email>,
    pub files: Vec<FileEntry>,
    pub cron_jobs: Vec<CronJob>,
    pub forecasts: Vec<ForecastDay>,
    pub config: BTreeMap<String, String>,
    pub clock: Option<Clock>,
}

impl StateOverrides {
    pub fn is_empty(&self) -> bool {
        self == &Self::default()
    }

    /// Applies the overrides in place. Identical records already present
    /// are skipped; a different record under an existing key is an error.
    pub fn apply(&self, state: &mut WorkflowState) -> Result<(), StateError> {
        insert_keyed(&mut state.tasks, &self.tasks, "tasks", |t| t.id.clone())?;
        insert_keyed(&mut state.events, &self.events, "calendar", |e| e.id.clone())?;
        insert_keyed(&mut state.inbox, &self.emails, "email", |m| m.id.clone())?;
        insert_keyed(&mut state.files, &self.files, "files", |f| f.path.clone())?;
        insert_keyed(&mut state.cron_jobs, &self.cron_jobs, "cron", |j| j.name.clone())?;
        insert_keyed(&mut state.forecasts, &self.forecasts, "weather", |d| {
            format!("{}@{}", d.location.to_ascii_lowercase(), d.date)
        })?;
        for (k, v) in &self.config {
            state.config.entries.insert(k.clone(), v.clone());
        }
        if let Some(clock) = &self.clock {
            state.clock = clock.clone();
        }
        state.validate()
    }
}

fn insert_keyed<T: Clone + PartialEq>(
    target: &mut Vec<T>,
    records: &[T],
    surface: &'static str,
    key: impl Fn(&T) -> String,
) -> Result<(), StateError> {
    for rec in records {
        let k = key(rec);
        match target.iter().find(|existing| key(existing) == k) {
            Some(existing) if existing == rec => {}
            Some(_) => return Err(invalid(surface, k, "conflicts with an existing record")),
            None => target.push(rec.clone()),
        }
    }
    Ok(())
}

fn dir_is_empty_or_absent(dir: &Path) -> bool {
    match fs::read_dir(dir) {
        Ok(mut it) => it.next().is_none(),
        Err(_) => !dir.exists(),
    }
}

/// Deep-copies `base`, applies `ov`, and writes the result into a fresh
/// episode directory.
pub fn materialize_state(
    base: &WorkflowState,
    ov: &StateOverrides,
    episode_dir: &Path,
) -> Result<WorkflowState, StateError> {
    if !dir_is_empty_or_absent(episode_dir) {
        return Err(StateError::DirNotEmpty(episode_dir.to_path_buf()));
    }
    let mut state = base.clone();
    ov.apply(&mut state)?;
    persist_state(&state, episode_dir)?;
    Ok(state)
}

pub fn persist_state(s: &WorkflowState, dir: &Path) -> Result<(), StateError> {
    fs::create_dir_all(dir).map_err(|source| StateError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, doc) in s.surface_documents() {
        let path = dir.join(name);
        fs::write(&path, doc).map_err(|source| StateError::Write { path, source })?;
    }
    Ok(())
}

pub fn load_state(dir: &Path) -> Result<WorkflowState, StateError> {
    fn read<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T, StateError> {
        let path = dir.join(name);
        let raw = fs::read_to_string(&path).map_err(|source| StateError::Read {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&raw).map_err(|source| StateError::Decode { path, source })
    }
    #[derive(Deserialize)]
    struct ConfigDoc {
        entries: BTreeMap<String, String>,
        gateway: GatewayStatus,
    }
    let config: ConfigDoc = read(dir, "config.json")?;
    let state = WorkflowState {
        tasks: read(dir, "tasks.json")?,
        events: read(dir, "calendar.json")?,
        inbox: read(dir, "email.json")?,
        files: read(dir, "files.json")?,
        cron_jobs: read(dir, "cron.json")?,
        forecasts: read(dir, "weather.json")?,
        channels: read(dir, "channels.json")?,
        config: ConfigStore {
            entries: config.entries,
        },
        gateway: config.gateway,
        clock: read(dir, "clock.json")?,
    };
    Ok(state)
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let due = self
            .due
            .map(|d| d.to_string())
            .unwrap_or_else(|| "-".to_string());
        write!(
            f,
            "{}\t{}\t{}\tdue {}\t{}",
            self.id,
            self.status.as_str(),
            self.priority.as_str(),
            due,
            self.title
        )
    }
}

impl fmt::Display for CalendarEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.id,
            self.start.format(minute_time::FORMAT),
            self.timezone,
            self.title
        )
    }
}
