//! Grounding tables and slot assignment.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GenError;
use crate::state::Clock;
use crate::zones::{self, CITIES};

pub const RECIPIENTS: &[&str] = &[
    "alice@example.com",
    "bob@example.com",
    "finance@example.com",
    "manager@example.com",
    "leadership@example.com",
];

pub const TOPICS: &[&str] = &["budget", "vendor", "hiring", "invoice", "roadmap"];

pub const START_TIMES: &[&str] = &["08:30", "09:00", "13:00", "14:00", "15:00"];

pub const MODELS: &[&str] = &[
    "anthropic/claude-opus-4-6",
    "anthropic/claude-3-7-sonnet-latest",
    "openai/gpt-5.2",
    "openai/o3",
];

pub const CRON_SCHEDULES: &[&str] = &[
    "0 9 * * *",
    "15 8 * * 1-5",
    "30 9 * * 1-5",
    "0 18 * * 1-5",
    "0 7 * * *",
];

pub const CHANNELS: &[&str] = &["discord", "slack", "telegram"];

pub const TARGETS: &[&str] = &["#general", "#launch", "#incidents"];

/// First and last calendar day of the benchmark window.
pub const WINDOW: (&str, &str) = ("2026-03-02", "2026-03-20");

fn window_dates() -> Vec<String> {
    let first = NaiveDate::parse_from_str(WINDOW.0, "%Y-%m-%d").expect("window start");
    let last = NaiveDate::parse_from_str(WINDOW.1, "%Y-%m-%d").expect("window end");
    let mut out = Vec::new();
    let mut d = first;
    while d <= last {
        out.push(d.to_string());
        d += Duration::days(1);
    }
    out
}

/// The values a named slot may take.
pub fn slot_table(name: &str) -> Option<Vec<String>> {
    let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    Some(match name {
        "city" => CITIES.iter().map(|c| c.name.to_string()).collect(),
        "recipient" => owned(RECIPIENTS),
        "topic" => owned(TOPICS),
        "due_date" | "start_date" => window_dates(),
        "start_time" => owned(START_TIMES),
        "model" => owned(MODELS),
        "cron_schedule" => owned(CRON_SCHEDULES),
        "channel" => owned(CHANNELS),
        "target" => owned(TARGETS),
        "forecast_risky" => owned(&["true", "false"]),
        "branch" => owned(&["live", "async"]),
        "gap" => owned(&["task", "sync"]),
        "seq" => (1..=99).map(|n| format!("{n:02}")).collect(),
        _ => return None,
    })
}

/// Concrete values for one template instance, plus placeholders derived
/// from them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotAssignment {
    pub seed: u64,
    /// Drawn slot values, keyed by slot name.
    pub values: BTreeMap<String, String>,
    /// Placeholders computed from the drawn values.
    pub derived: BTreeMap<String, String>,
}

impl SlotAssignment {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.values
            .get(name)
            .or_else(|| self.derived.get(name))
            .map(String::as_str)
    }

    pub fn city_zone(&self) -> Option<&'static str> {
        self.values.get("city").and_then(|c| zones::zone_for_city(c))
    }
}

/// Per-template random stream: a stable function of the family name and seed.
pub(crate) fn rng_for(family: &str, seed: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(family.as_bytes());
    h.update([0u8]);
    h.update(seed.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

pub(crate) fn draw(family: &str, slots: &[String], seed: u64) -> Result<SlotAssignment, GenError> {
    let mut rng = rng_for(family, seed);
    let mut values = BTreeMap::new();
    for name in slots {
        let table = slot_table(name).ok_or_else(|| GenError::UnknownSlot {
            family: family.to_string(),
            slot: name.clone(),
        })?;
        let value = table.choose(&mut rng).expect("grounding tables are non-empty").clone();
        values.insert(name.clone(), value);
    }
    let derived = derive(&values);
    Ok(SlotAssignment {
        seed,
        values,
        derived,
    })
}

fn derive(values: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    let mut d = BTreeMap::new();
    if let Some(city) = values.get("city") {
        let zone = zones::zone_for_city(city).expect("cities come from the zone table");
        d.insert("timezone".into(), zone.to_string());
        d.insert("city_slug".into(), city.to_ascii_lowercase().replace(' ', "-"));
        let today = Clock::anchor(zone).now.date();
        d.insert("today".into(), today.to_string());
    }
    if let (Some(date), Some(time)) = (values.get("start_date"), values.get("start_time")) {
        d.insert("start".into(), format!("{date}T{time}"));
    }
    if let Some(topic) = values.get("topic") {
        let mut chars = topic.chars();
        let cap = chars
            .next()
            .map(|c| c.to_uppercase().chain(chars).collect())
            .unwrap_or_default();
        d.insert("Topic".into(), cap);
    }
    if let Some(risky) = values.get("forecast_risky") {
        let (kind, other) = if risky == "true" {
            ("backup", "primary")
        } else {
            ("primary", "backup")
        };
        d.insert("review_kind".into(), kind.into());
        d.insert("other_review_kind".into(), other.into());
    }
    d
}
