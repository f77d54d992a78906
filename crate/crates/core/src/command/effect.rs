use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Kinds of state-changing outcome an executor can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    TasksCreated,
    TasksCompleted,
    CalendarEventsCreated,
    EmailsSent,
    FilesCreated,
    CronJobsCreated,
    MessagesSent,
    ModelSet,
    ChannelsLoggedIn,
}

impl EffectKind {
    pub const ALL: [EffectKind; 9] = [
        EffectKind::TasksCreated,
        EffectKind::TasksCompleted,
        EffectKind::CalendarEventsCreated,
        EffectKind::EmailsSent,
        EffectKind::FilesCreated,
        EffectKind::CronJobsCreated,
        EffectKind::MessagesSent,
        EffectKind::ModelSet,
        EffectKind::ChannelsLoggedIn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EffectKind::TasksCreated => "tasks_created",
            EffectKind::TasksCompleted => "tasks_completed",
            EffectKind::CalendarEventsCreated => "calendar_events_created",
            EffectKind::EmailsSent => "emails_sent",
            EffectKind::FilesCreated => "files_created",
            EffectKind::CronJobsCreated => "cron_jobs_created",
            EffectKind::MessagesSent => "messages_sent",
            EffectKind::ModelSet => "model_set",
            EffectKind::ChannelsLoggedIn => "channels_logged_in",
        }
    }

    /// Every payload field this kind carries.
    pub fn payload_fields(self) -> &'static [&'static str] {
        match self {
            EffectKind::TasksCreated => &["id", "title", "priority", "due"],
            EffectKind::TasksCompleted => &["id", "title"],
            EffectKind::CalendarEventsCreated => &["id", "title", "start", "timezone"],
            EffectKind::EmailsSent => &["id", "to", "subject", "body"],
            EffectKind::FilesCreated => &["path"],
            EffectKind::CronJobsCreated => &["name", "schedule", "message"],
            EffectKind::MessagesSent => &["channel", "target", "message"],
            EffectKind::ModelSet => &["model", "previous"],
            EffectKind::ChannelsLoggedIn => &["channel"],
        }
    }

    /// Fields that must be present and non-empty.
    pub fn required_fields(self) -> &'static [&'static str] {
        match self {
            EffectKind::TasksCreated => &["title"],
            EffectKind::TasksCompleted => &["title"],
            EffectKind::CalendarEventsCreated => &["title", "start"],
            EffectKind::EmailsSent => &["to", "subject"],
            EffectKind::FilesCreated => &["path"],
            EffectKind::CronJobsCreated => &["name", "schedule"],
            EffectKind::MessagesSent => &["channel", "target"],
            EffectKind::ModelSet => &["model"],
            EffectKind::ChannelsLoggedIn => &["channel"],
        }
    }
}

impl fmt::Display for EffectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EffectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EffectKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown effect kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    pub kind: EffectKind,
    pub payload: BTreeMap<String, String>,
}

impl Effect {
    pub fn new<'a>(kind: EffectKind, fields: impl IntoIterator<Item = (&'a str, String)>) -> Self {
        let effect = Self {
            kind,
            payload: fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        };
        debug_assert!(effect.is_well_formed(), "{effect:?}");
        effect
    }

    pub fn field(&self, name: &str) -> Option<&str> {
        self.payload.get(name).map(String::as_str)
    }

    pub fn is_well_formed(&self) -> bool {
        self.kind
            .required_fields()
            .iter()
            .all(|f| self.payload.get(*f).is_some_and(|v| !v.trim().is_empty()))
            && self
                .payload
                .keys()
                .all(|k| self.kind.payload_fields().contains(&k.as_str()))
    }
}

/// What one command did: its process-style outputs and typed effects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
    pub effects: Vec<Effect>,
}

impl ExecutionResult {
    pub fn ok(stdout: String, effects: Vec<Effect>) -> Self {
        Self {
            stdout,
            stderr: String::new(),
            exit_code: 0,
            effects,
        }
    }

    pub fn failed(exit_code: i32, stderr: String) -> Self {
        Self {
            stdout: String::new(),
            stderr,
            exit_code,
            effects: Vec::new(),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.exit_code == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_through_names() {
        for kind in EffectKind::ALL {
            assert_eq!(kind.as_str().parse::<EffectKind>(), Ok(kind));
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.as_str()));
            for f in kind.required_fields() {
                assert!(kind.payload_fields().contains(f));
            }
        }
    }

    #[test]
    fn well_formedness() {
        let e = Effect {
            kind: EffectKind::FilesCreated,
            payload: BTreeMap::from([("path".to_string(), "/a".to_string())]),
        };
        assert!(e.is_well_formed());
        let missing = Effect {
            kind: EffectKind::EmailsSent,
            payload: BTreeMap::from([("to".to_string(), "a@b".to_string())]),
        };
        assert!(!missing.is_well_formed());
        let extra = Effect {
            kind: EffectKind::FilesCreated,
            payload: BTreeMap::from([
                ("path".to_string(), "/a".to_string()),
                ("colour".to_string(), "red".to_string()),
            ]),
        };
        assert!(!extra.is_well_formed());
    }
}
