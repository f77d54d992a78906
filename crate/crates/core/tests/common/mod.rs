//! Independent state-diff oracle shared by integration tests.
//!
//! Given the state before and after a successful command, works out which
//! effects the command must have reported by comparing each surface
//! directly, without consulting the executors.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use clawforge::command::{Effect, EffectKind};
use clawforge::state::{TaskStatus, WorkflowState};

/// An effect reduced to its kind and identifying field.
pub type EffectKey = (EffectKind, String);

pub fn effect_keys(effects: &[Effect]) -> Vec<EffectKey> {
    let mut keys: Vec<EffectKey> = effects
        .iter()
        .map(|e| {
            let field = match e.kind {
                EffectKind::TasksCreated | EffectKind::TasksCompleted | EffectKind::CalendarEventsCreated => "title",
                EffectKind::EmailsSent => "to",
                EffectKind::FilesCreated => "path",
                EffectKind::CronJobsCreated => "name",
                EffectKind::MessagesSent | EffectKind::ChannelsLoggedIn => "channel",
                EffectKind::ModelSet => "model",
            };
            (e.kind, e.field(field).unwrap_or_default().to_string())
        })
        .collect();
    keys.sort();
    keys
}

/// Effects implied by the difference between `before` and `after`, or an
/// error naming a change no effect can account for.
pub fn expected_effects(before: &WorkflowState, after: &WorkflowState) -> Result<Vec<EffectKey>, String> {
    let mut out = Vec::new();

    let old_tasks: BTreeMap<&str, _> = before.tasks.iter().map(|t| (t.id.as_str(), t)).collect();
    for t in &after.tasks {
        match old_tasks.get(t.id.as_str()) {
            None => {
                if t.status != TaskStatus::Pending {
                    return Err(format!("task {} appeared already completed", t.id));
                }
                out.push((EffectKind::TasksCreated, t.title.clone()));
            }
            Some(old) if *old == t => {}
            Some(old) => {
                let mut reopened = (*old).clone();
                reopened.status = t.status;
                if reopened != *t || old.status != TaskStatus::Pending || t.status != TaskStatus::Completed {
                    return Err(format!("task {} changed in an unexplained way", t.id));
                }
                out.push((EffectKind::TasksCompleted, t.title.clone()));
            }
        }
    }
    if after.tasks.len() < before.tasks.len() {
        return Err("tasks disappeared".into());
    }

    let old_events: BTreeSet<&str> = before.events.iter().map(|e| e.id.as_str()).collect();
    if !after.events.starts_with(&before.events) {
        return Err("existing calendar events changed".into());
    }
    for e in after.events.iter().filter(|e| !old_events.contains(e.id.as_str())) {
        out.push((EffectKind::CalendarEventsCreated, e.title.clone()));
    }

    if !after.inbox.starts_with(&before.inbox) {
        return Err("existing mail changed".into());
    }
    for m in &after.inbox[before.inbox.len()..] {
        out.push((EffectKind::EmailsSent, m.to.clone()));
    }

    let old_files: BTreeMap<&str, &str> = before.files.iter().map(|f| (f.path.as_str(), f.content.as_str())).collect();
    for f in &after.files {
        if old_files.get(f.path.as_str()) != Some(&f.content.as_str()) {
            out.push((EffectKind::FilesCreated, f.path.clone()));
        }
    }
    if after.files.len() < before.files.len() {
        return Err("files disappeared".into());
    }

    if !after.cron_jobs.starts_with(&before.cron_jobs) {
        return Err("existing cron jobs changed".into());
    }
    for j in &after.cron_jobs[before.cron_jobs.len()..] {
        out.push((EffectKind::CronJobsCreated, j.name.clone()));
    }

    if before.channels.len() != after.channels.len() {
        return Err("channel set changed".into());
    }
    for (old, new) in before.channels.iter().zip(&after.channels) {
        if old.channel != new.channel || !new.messages.starts_with(&old.messages) {
            return Err(format!("channel {} changed in an unexplained way", old.channel));
        }
        match (old.logged_in, new.logged_in) {
            (false, true) => out.push((EffectKind::ChannelsLoggedIn, new.channel.clone())),
            (a, b) if a == b => {}
            _ => return Err(format!("channel {} logged out", old.channel)),
        }
        for _ in &new.messages[old.messages.len()..] {
            out.push((EffectKind::MessagesSent, new.channel.clone()));
        }
    }

    let mut config = before.config.clone();
    if before.config.get("agent.model") != after.config.get("agent.model") {
        let model = after.config.get("agent.model").unwrap_or_default().to_string();
        config.entries.insert("agent.model".into(), model.clone());
        out.push((EffectKind::ModelSet, model));
    }
    if config != after.config {
        return Err("config changed beyond the model".into());
    }
    if before.forecasts != after.forecasts || before.gateway != after.gateway || before.clock != after.clock {
        return Err("read-only surfaces changed".into());
    }
    out.sort();
    Ok(out)
}
