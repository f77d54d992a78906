//! Per-surface command semantics.
//!
//! Every function here mutates the state it is handed and reports effects
//! directly. Failures return the stderr text; the engine discards the
//! working copy so a failed command never leaves a partial mutation.

use chrono::NaiveDate;
use serde::Serialize;

use super::effect::{Effect, EffectKind};
use super::route::Command;
use crate::canonical;
use crate::cron;
use crate::state::{
    minute_time, normalize_title, CalendarEvent, ChannelMessage, CronJob, Direction, Email,
    FileEntry, Priority, Task, TaskStatus, WorkflowState,
};

pub const OUTBOUND_FROM: &str = "me@example.com";

/// URL fixtures served by the `curl` executor. No network I/O happens.
pub const CURL_FIXTURES: &[(&str, &str)] = &[
    (
        "https://status.example.com/api/health",
        r#"{"gateway":"ready","status":"ok"}"#,
    ),
    (
        "https://releases.example.com/api/latest",
        r#"{"channel":"stable","version":"2026.3.1"}"#,
    ),
    ("https://docs.example.com/runbook.txt", "Release runbook: inspect, preserve, then repair."),
];

/// Successful command output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Output {
    pub stdout: String,
    pub effects: Vec<Effect>,
}

impl Output {
    fn text(stdout: impl Into<String>) -> Self {
        let mut stdout = stdout.into();
        if !stdout.ends_with('\n') {
            stdout.push('\n');
        }
        Self {
            stdout,
            effects: Vec::new(),
        }
    }

    fn lines<I: IntoIterator<Item = String>>(lines: I, empty: &str) -> Self {
        let body: Vec<String> = lines.into_iter().collect();
        if body.is_empty() {
            Self::text(empty)
        } else {
            Self::text(body.join("\n"))
        }
    }

    fn with(mut self, effect: Effect) -> Self {
        self.effects.push(effect);
        self
    }
}

/// `Err` carries the stderr text of a semantic failure (exit code 1).
pub type Outcome = Result<Output, String>;

fn contains_normalized(haystack: &str, needle: &str) -> bool {
    normalize_title(haystack).contains(&normalize_title(needle))
}

fn parse_date(flag: &str, raw: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d")
        .map_err(|_| format!("--{flag}: {raw:?} is not a date (expected YYYY-MM-DD)"))
}

fn non_empty(flag: &str, raw: &str) -> Result<String, String> {
    let v = raw.trim();
    if v.is_empty() {
        Err(format!("--{flag} must not be empty"))
    } else {
        Ok(v.to_string())
    }
}

pub fn dispatch(cmd: &Command, state: &mut WorkflowState) -> Outcome {
    match cmd {
        Command::TasksList { .. }
        | Command::TasksSearch { .. }
        | Command::TasksAdd { .. }
        | Command::TasksComplete { .. } => tasks(cmd, state),
        Command::CalendarList { .. } | Command::CalendarToday { .. } | Command::CalendarAddEvent { .. } => {
            calendar(cmd, state)
        }
        Command::EmailSearch { .. } | Command::EmailRead { .. } | Command::EmailSend { .. } => {
            email(cmd, state)
        }
        Command::FileCreate { .. } | Command::FileRead { .. } => file(cmd, state),
        Command::WeatherForecast { .. } => weather(cmd, state),
        Command::Curl { .. } => curl(cmd),
        _ => openclaw(cmd, state),
    }
}

pub fn tasks(cmd: &Command, state: &mut WorkflowState) -> Outcome {
    match cmd {
        Command::TasksList { status } => {
            let filter = match status.as_deref().map(str::trim) {
                None | Some("all") => None,
                Some("pending") => Some(TaskStatus::Pending),
                Some("completed") => Some(TaskStatus::Completed),
                Some(other) => {
                    return Err(format!(
                        "unknown status {other:?} (expected pending, completed or all)"
                    ))
                }
            };
            Ok(Output::lines(
                state
                    .tasks
                    .iter()
                    .filter(|t| filter.is_none_or(|f| t.status == f))
                    .map(Task::to_string),
                "no tasks",
            ))
        }
        Command::TasksSearch { query } => Ok(Output::lines(
            state
                .tasks
                .iter()
                .filter(|t| contains_normalized(&t.title, query))
                .map(Task::to_string),
            "no matching tasks",
        )),
        Command::TasksAdd { title, priority, due } => {
            let title = non_empty("title", title)?;
            let priority = match priority {
                None => Priority::Medium,
                Some(p) => Priority::parse(p)
                    .ok_or_else(|| format!("--priority: {p:?} is not one of low, medium, high"))?,
            };
            let due = due.as_deref().map(|d| parse_date("due", d)).transpose()?;
            let id = WorkflowState::next_id("task", state.tasks.iter().map(|t| t.id.as_str()));
            let mut fields = vec![
                ("id", id.clone()),
                ("title", title.clone()),
                ("priority", priority.as_str().to_string()),
            ];
            if let Some(d) = due {
                fields.push(("due", d.to_string()));
            }
            state.tasks.push(Task {
                id: id.clone(),
                title: title.clone(),
                priority,
                due,
                status: TaskStatus::Pending,
            });
            Ok(Output::text(format!("created task {id}: {title}"))
                .with(Effect::new(EffectKind::TasksCreated, fields)))
        }
        Command::TasksComplete { title } => {
            let idx = state
                .task_by_title(title, TaskStatus::Pending)
                .ok_or_else(|| format!("no pending task titled {title:?}"))?;
            let task = &mut state.tasks[idx];
            task.status = TaskStatus::Completed;
            Ok(Output::text(format!("completed task {}: {}", task.id, task.title)).with(
                Effect::new(
                    EffectKind::TasksCompleted,
                    [("id", task.id.clone()), ("title", task.title.clone())],
                ),
            ))
        }
        other => Err(format!("tasks executor cannot run {:?}", other.verb())),
    }
}

fn sorted_events(state: &WorkflowState, keep: impl Fn(&CalendarEvent) -> bool) -> Vec<&CalendarEvent> {
    let mut events: Vec<&CalendarEvent> = state.events.iter().filter(|e| keep(e)).collect();
    events.sort_by_key(|e| e.start);
    events
}

pub fn calendar(cmd: &Command, state: &mut WorkflowState) -> Outcome {
    match cmd {
        Command::CalendarList { from, to } => {
            let from = from.as_deref().map(|d| parse_date("from", d)).transpose()?;
            let to = to.as_deref().map(|d| parse_date("to", d)).transpose()?;
            let events = sorted_events(state, |e| {
                let day = e.start.date();
                from.is_none_or(|f| day >= f) && to.is_none_or(|t| day <= t)
            });
            Ok(Output::lines(events.into_iter().map(|e| e.to_string()), "no events"))
        }
        Command::CalendarToday { timezone } => {
            let zone = timezone
                .as_deref()
                .map(str::trim)
                .unwrap_or(&state.clock.timezone)
                .to_string();
            let today = state
                .clock
                .date_in(&zone)
                .ok_or_else(|| format!("unsupported timezone {zone:?}"))?;
            let events = sorted_events(state, |e| e.start.date() == today);
            let mut lines = vec![format!("today is {today} ({zone})")];
            if events.is_empty() {
                lines.push("no events today".to_string());
            }
            lines.extend(events.into_iter().map(|e| e.to_string()));
            Ok(Output::text(lines.join("\n")))
        }
        Command::CalendarAddEvent { title, start } => {
            let title = non_empty("title", title)?;
            let when = minute_time::parse(start).ok_or_else(|| {
                format!("--start: {start:?} is not a datetime (expected YYYY-MM-DDTHH:MM)")
            })?;
            let id = WorkflowState::next_id("event", state.events.iter().map(|e| e.id.as_str()));
            let zone = state.clock.timezone.clone();
            let start_text = when.format(minute_time::FORMAT).to_string();
            state.events.push(CalendarEvent {
                id: id.clone(),
                title: title.clone(),
                start: when,
                timezone: zone.clone(),
            });
            Ok(Output::text(format!("created event {id}: {title} at {start_text} {zone}")).with(
                Effect::new(
                    EffectKind::CalendarEventsCreated,
                    [
                        ("id", id),
                        ("title", title),
                        ("start", start_text),
                        ("timezone", zone),
                    ],
                ),
            ))
        }
        other => Err(format!("calendar executor cannot run {:?}", other.verb())),
    }
}

fn valid_address(addr: &str) -> bool {
    let addr = addr.trim();
    match addr.split_once('@') {
        Some((user, host)) => {
            !user.is_empty() && host.contains('.') && !addr.contains(char::is_whitespace)
        }
        None => false,
    }
}

pub fn email(cmd: &Command, state: &mut WorkflowState) -> Outcome {
    match cmd {
        Command::EmailSearch { query } => Ok(Output::lines(
            state
                .inbox
                .iter()
                .filter(|m| contains_normalized(&m.subject, query) || contains_normalized(&m.body, query))
                .map(|m| {
                    let dir = match m.direction {
                        Direction::Inbound => "inbound",
                        Direction::Outbound => "outbound",
                    };
                    format!("{}\t{}\t{}\t{}\t{}", m.id, dir, m.from, m.to, m.subject)
                }),
            "no matching emails",
        )),
        Command::EmailRead { id } => {
            let m = state
                .inbox
                .iter()
                .find(|m| m.id == id.trim())
                .ok_or_else(|| format!("no email with id {id:?}"))?;
            Ok(Output::text(format!(
                "id: {}\nfrom: {}\nto: {}\nsubject: {}\n\n{}",
                m.id, m.from, m.to, m.subject, m.body
            )))
        }
        Command::EmailSend { to, subject, body } => {
            if !valid_address(to) {
                return Err(format!("--to: {to:?} is not an email address"));
            }
            let to = to.trim().to_string();
            let subject = non_empty("subject", subject)?;
            let id = WorkflowState::next_id("email", state.inbox.iter().map(|m| m.id.as_str()));
            state.inbox.push(Email {
                id: id.clone(),
                direction: Direction::Outbound,
                from: OUTBOUND_FROM.to_string(),
                to: to.clone(),
                subject: subject.clone(),
                body: body.clone(),
                read: true,
            });
            Ok(Output::text(format!("sent email {id} to {to}")).with(Effect::new(
                EffectKind::EmailsSent,
                [("id", id), ("to", to), ("subject", subject), ("body", body.clone())],
            )))
        }
        other => Err(format!("email executor cannot run {:?}", other.verb())),
    }
}

pub fn file(cmd: &Command, state: &mut WorkflowState) -> Outcome {
    match cmd {
        Command::FileCreate { path, content } => {
            let path = path.trim();
            if !path.starts_with('/') || path.len() < 2 {
                return Err(format!("--path: {path:?} must be an absolute path like /ops/notes.txt"));
            }
            match state.files.iter_mut().find(|f| f.path == path) {
                Some(existing) if existing.content == *content => {
                    return Ok(Output::text(format!("{path} unchanged")))
                }
                Some(existing) => existing.content = content.clone(),
                None => state.files.push(FileEntry {
                    path: path.to_string(),
                    content: content.clone(),
                }),
            }
            Ok(Output::text(format!("wrote {path} ({} bytes)", content.len()))
                .with(Effect::new(EffectKind::FilesCreated, [("path", path.to_string())])))
        }
        Command::FileRead { path } => state
            .file(path.trim())
            .map(|f| Output::text(f.content.clone()))
            .ok_or_else(|| format!("no such file: {path}")),
        other => Err(format!("file executor cannot run {:?}", other.verb())),
    }
}

pub fn weather(cmd: &Command, state: &mut WorkflowState) -> Outcome {
    let Command::WeatherForecast { location, days } = cmd else {
        return Err(format!("weather executor cannot run {:?}", cmd.verb()));
    };
    let days = match days {
        None => 1,
        Some(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if (1..=14).contains(&n) => n,
            _ => return Err(format!("--days: {raw:?} must be a whole number from 1 to 14")),
        },
    };
    let location = location.trim();
    let mut rows: Vec<_> = state
        .forecasts
        .iter()
        .filter(|d| d.location.eq_ignore_ascii_case(location))
        .collect();
    if rows.is_empty() {
        return Err(format!("no forecast available for {location:?}"));
    }
    rows.sort_by_key(|d| d.date);
    Ok(Output::text(
        rows.into_iter()
            .take(days)
            .map(|d| {
                let risk = if d.risky { "high" } else { "low" };
                format!("{}\t{}\t{}\trisk: {risk}", d.date, d.location, d.summary)
            })
            .collect::<Vec<_>>()
            .join("\n"),
    ))
}

pub fn curl(cmd: &Command) -> Outcome {
    let Command::Curl { url } = cmd else {
        return Err(format!("curl executor cannot run {:?}", cmd.verb()));
    };
    CURL_FIXTURES
        .iter()
        .find(|(u, _)| *u == url.trim())
        .map(|(_, body)| Output::text(*body))
        .ok_or_else(|| format!("curl: could not resolve {url} (offline fixture set)"))
}

pub fn openclaw(cmd: &Command, state: &mut WorkflowState) -> Outcome {
    match cmd {
        Command::ConfigGet { key } => state
            .config
            .get(key.trim())
            .map(Output::text)
            .ok_or_else(|| format!("config key not found: {key}")),
        Command::ModelsSet { model } => {
            let model = model.trim();
            if model.is_empty() || model.contains(char::is_whitespace) {
                return Err(format!("invalid model name {model:?}"));
            }
            let previous = state.config.get("agent.model").unwrap_or_default().to_string();
            if previous == model {
                return Ok(Output::text(format!("model already set to {model}")));
            }
            state
                .config
                .entries
                .insert("agent.model".to_string(), model.to_string());
            Ok(Output::text(format!("model set to {model} (was {previous})")).with(Effect::new(
                EffectKind::ModelSet,
                [("model", model.to_string()), ("previous", previous)],
            )))
        }
        Command::CronList => Ok(Output::lines(
            state.cron_jobs.iter().map(|j| {
                let status = if j.active { "active" } else { "paused" };
                format!("{}\t{}\t{status}\t{}", j.name, j.schedule, j.message)
            }),
            "no cron jobs",
        )),
        Command::CronAdd { name, cron: schedule, message } => {
            let name = non_empty("name", name)?;
            if state.cron_jobs.iter().any(|j| j.name == name) {
                return Err(format!("cron job {name:?} already exists"));
            }
            let schedule = schedule.split_whitespace().collect::<Vec<_>>().join(" ");
            cron::validate(&schedule).map_err(|e| e.to_string())?;
            state.cron_jobs.push(CronJob {
                name: name.clone(),
                schedule: schedule.clone(),
                message: message.clone(),
                active: true,
            });
            Ok(Output::text(format!("added cron job {name} ({schedule})")).with(Effect::new(
                EffectKind::CronJobsCreated,
                [("name", name), ("schedule", schedule), ("message", message.clone())],
            )))
        }
        Command::ChannelsList { json } => {
            if *json {
                #[derive(Serialize)]
                struct Row<'a> {
                    channel: &'a str,
                    logged_in: bool,
                    messages: usize,
                }
                let rows: Vec<Row> = state
                    .channels
                    .iter()
                    .map(|c| Row {
                        channel: &c.channel,
                        logged_in: c.logged_in,
                        messages: c.messages.len(),
                    })
                    .collect();
                Ok(Output::text(canonical::to_line(&rows)))
            } else {
                Ok(Output::lines(
                    state.channels.iter().map(|c| {
                        let status = if c.logged_in { "logged in" } else { "logged out" };
                        format!("{}\t{status}\t{} messages", c.channel, c.messages.len())
                    }),
                    "no channels configured",
                ))
            }
        }
        Command::ChannelsLogin { channel } => {
            let ch = state
                .channel_mut(channel.trim())
                .ok_or_else(|| format!("unsupported channel {channel:?}"))?;
            if ch.logged_in {
                return Ok(Output::text(format!("already logged in to {}", ch.channel)));
            }
            ch.logged_in = true;
            let name = ch.channel.clone();
            Ok(Output::text(format!("logged in to {name}"))
                .with(Effect::new(EffectKind::ChannelsLoggedIn, [("channel", name)])))
        }
        Command::MessageSend { channel, target, message } => {
            let target = non_empty("target", target)?;
            let ch = state
                .channel_mut(channel.trim())
                .ok_or_else(|| format!("unsupported channel {channel:?}"))?;
            if !ch.logged_in {
                return Err(format!(
                    "not logged in to {0}; run `openclaw channels login --channel {0}` first",
                    ch.channel
                ));
            }
            ch.messages.push(ChannelMessage {
                target: target.clone(),
                message: message.clone(),
            });
            let name = ch.channel.clone();
            Ok(Output::text(format!("sent message to {name} {target}")).with(Effect::new(
                EffectKind::MessagesSent,
                [("channel", name), ("target", target), ("message", message.clone())],
            )))
        }
        Command::SecurityAudit => {
            let logged_in = state.channels.iter().filter(|c| c.logged_in).count();
            let gateway = match state.gateway.state {
                crate::state::GatewayState::Ready => "ready",
                crate::state::GatewayState::Unavailable => "unavailable",
            };
            Ok(Output::text(format!(
                "security audit: 0 critical, 0 warnings\ngateway: {gateway}\nchannels: {} configured, {logged_in} logged in\nconfig keys: {}",
                state.channels.len(),
                state.config.entries.len()
            )))
        }
        other => Err(format!("openclaw executor cannot run {:?}", other.verb())),
    }
}
