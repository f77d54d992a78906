//! Data-driven scenario templates.
//!
//! A template is a TOML document. Strings may contain `{slot}` placeholders;
//! override records, reference steps, naive steps and checks may carry a
//! `when = "slot=value"` (or `slot!=value`) guard that drops them for
//! assignments where the condition does not hold.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::slots::{slot_table, SlotAssignment};
use super::GenError;

/// The six primary abilities a scenario family is classified under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ability {
    InformationTransfer,
    WorkflowCompletion,
    GapCompletion,
    DuplicateAvoidance,
    MultiSourceReasoning,
    StateRepair,
}

impl Ability {
    pub const ALL: [Ability; 6] = [
        Ability::InformationTransfer,
        Ability::WorkflowCompletion,
        Ability::GapCompletion,
        Ability::DuplicateAvoidance,
        Ability::MultiSourceReasoning,
        Ability::StateRepair,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::InformationTransfer => "information_transfer",
            Self::WorkflowCompletion => "workflow_completion",
            Self::GapCompletion => "gap_completion",
            Self::DuplicateAvoidance => "duplicate_avoidance",
            Self::MultiSourceReasoning => "multi_source_reasoning",
            Self::StateRepair => "state_repair",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Self::InformationTransfer => "Information transfer",
            Self::WorkflowCompletion => "Workflow completion",
            Self::GapCompletion => "Gap completion",
            Self::DuplicateAvoidance => "Duplicate avoidance",
            Self::MultiSourceReasoning => "Multi-source reasoning",
            Self::StateRepair => "State repair",
        }
    }
}

impl fmt::Display for Ability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ability::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown ability {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    Directive,
    Conversational,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 2] = [PromptStyle::Directive, PromptStyle::Conversational];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Directive => "directive",
            Self::Conversational => "conversational",
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptStyle::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown prompt style {s:?} (expected directive or conversational)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instructions {
    pub directive: String,
    pub conversational: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Notes {
    #[serde(default)]
    pub public: String,
    #[serde(default)]
    pub hidden: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub cmd: String,
    #[serde(default)]
    pub when: Option<String>,
}

/// Seeded forecast rows for the task city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastRecipe {
    pub days: u32,
    /// Condition making the first day risky; defaults to the
    /// `forecast_risky` slot, or a calm forecast when there is none.
    #[serde(default)]
    pub risky_when: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTemplate {
    pub family: String,
    pub display_name: String,
    pub primary_ability: Ability,
    pub ability_tags: Vec<String>,
    #[serde(default)]
    pub realism_tags: Vec<String>,
    pub slots: Vec<String>,
    pub instructions: Instructions,
    #[serde(default)]
    pub notes: Notes,
    /// Parametric state overrides; same shape as the task file's
    /// `initial_state_overrides`, with optional `when` guards per record.
    #[serde(default)]
    pub overrides: toml::Table,
    #[serde(default)]
    pub forecast: Option<ForecastRecipe>,
    pub reference: Vec<Step>,
    /// What an agent that skips inspection would type: the required
    /// mutations plus recreations of already-seeded artifacts.
    #[serde(default)]
    pub naive: Vec<Step>,
    pub checks: Vec<toml::Table>,
}

impl ScenarioTemplate {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, GenError> {
        let t: ScenarioTemplate = toml::from_str(text).map_err(|e| GenError::Template {
            origin: origin.to_string(),
            reason: e.to_string(),
        })?;
        t.check_static(origin)?;
        Ok(t)
    }

    pub fn from_file(path: &Path) -> Result<Self, GenError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| GenError::Template {
            origin: origin.clone(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text, &origin)
    }

    /// Structural checks that do not need a slot assignment: every slot has
    /// a grounding table, every guard names a declared slot, and every
    /// placeholder is either a slot or derivable from the declared slots.
    fn check_static(&self, origin: &str) -> Result<(), GenError> {
        let bad = |reason: String| GenError::Template {
            origin: origin.to_string(),
            reason,
        };
        for s in &self.slots {
            if slot_table(s).is_none() {
                return Err(GenError::UnknownSlot {
                    family: self.family.clone(),
                    slot: s.clone(),
                });
            }
        }
        if self.reference.is_empty() {
            return Err(bad("reference recipe is empty".into()));
        }
        if self.checks.is_empty() {
            return Err(bad("check recipe is empty".into()));
        }
        let known = self.known_placeholders();
        let mut texts: Vec<&str> = vec![&self.instructions.directive, &self.instructions.conversational];
        let mut guards: Vec<&str> = Vec::new();
        for step in self.reference.iter().chain(&self.naive) {
            texts.push(&step.cmd);
            guards.extend(step.when.as_deref());
        }
        if let Some(f) = &self.forecast {
            guards.extend(f.risky_when.as_deref());
            if !self.slots.iter().any(|s| s == "city") {
                return Err(bad("a forecast recipe needs the city slot".into()));
            }
        }
        let json_parts: Vec<Value> = std::iter::once(toml_to_json(&toml::Value::Table(self.overrides.clone())))
            .chain(self.checks.iter().map(|c| toml_to_json(&toml::Value::Table(c.clone()))))
            .collect();
        let mut json_strings = Vec::new();
        for v in &json_parts {
            collect_strings(v, &mut json_strings, &mut guards);
        }
        for text in texts.iter().copied().chain(json_strings.iter().map(String::as_str)) {
            for name in placeholders(text).map_err(bad)? {
                if !known.contains(name.as_str()) {
                    return Err(bad(format!("placeholder {{{name}}} is neither a slot nor derived from one")));
                }
            }
        }
        for g in guards {
            let cond = Condition::parse(g).map_err(bad)?;
            if !self.slots.contains(&cond.slot) {
                return Err(bad(format!("guard {g:?} names an undeclared slot")));
            }
        }
        Ok(())
    }

    fn known_placeholders(&self) -> BTreeSet<&'static str> {
        let has = |s: &str| self.slots.iter().any(|x| x == s);
        let mut known: BTreeSet<&'static str> = BTreeSet::new();
        for s in &self.slots {
            if let Some(k) = STATIC_SLOT_NAMES.iter().find(|k| **k == s) {
                known.insert(k);
            }
        }
        if has("city") {
            known.extend(["timezone", "city_slug", "today"]);
        }
        if has("start_date") && has("start_time") {
            known.insert("start");
        }
        if has("topic") {
            known.insert("Topic");
        }
        if has("forecast_risky") {
            known.extend(["review_kind", "other_review_kind"]);
        }
        known
    }
}

const STATIC_SLOT_NAMES: &[&str] = &[
    "city",
    "recipient",
    "topic",
    "due_date",
    "start_date",
    "start_time",
    "model",
    "cron_schedule",
    "channel",
    "target",
    "forecast_risky",
    "branch",
    "gap",
    "seq",
];

fn collect_strings<'a>(v: &'a Value, out: &mut Vec<String>, guards: &mut Vec<&'a str>) {
    match v {
        Value::String(s) => out.push(s.clone()),
        Value::Array(xs) => xs.iter().for_each(|x| collect_strings(x, out, guards)),
        Value::Object(m) => {
            for (k, x) in m {
                if k == "when" {
                    if let Value::String(g) = x {
                        guards.push(g);
                    }
                } else {
                    collect_strings(x, out, guards);
                }
            }
        }
        _ => {}
    }
}

pub(crate) fn toml_to_json(v: &toml::Value) -> Value {
    serde_json::to_value(v).expect("toml values are representable as JSON")
}

/// `slot=value` or `slot!=value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub slot: String,
    pub value: String,
    pub negated: bool,
}

impl Condition {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (slot, value, negated) = if let Some((a, b)) = text.split_once("!=") {
            (a, b, true)
        } else if let Some((a, b)) = text.split_once('=') {
            (a, b, false)
        } else {
            return Err(format!("guard {text:?} must look like slot=value or slot!=value"));
        };
        let (slot, value) = (slot.trim(), value.trim());
        if slot.is_empty() || value.is_empty() {
            return Err(format!("guard {text:?} has an empty side"));
        }
        Ok(Self {
            slot: slot.to_string(),
            value: value.to_string(),
            negated,
        })
    }

    pub fn holds(&self, slots: &SlotAssignment) -> bool {
        (slots.get(&self.slot) == Some(self.value.as_str())) != self.negated
    }
}

pub(crate) fn guard_holds(guard: Option<&str>, slots: &SlotAssignment) -> Result<bool, String> {
    match guard {
        None => Ok(true),
        Some(g) => Ok(Condition::parse(g)?.holds(slots)),
    }
}

/// Names of the `{placeholder}`s in `text`, in order of appearance.
fn placeholders(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| format!("unclosed placeholder in {text:?}"))?;
        let name = &after[..close];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("malformed placeholder {{{name}}} in {text:?}"));
        }
        out.push(name.to_string());
        rest = &after[close + 1..];
    }
    Ok(out)
}

/// Substitutes every `{placeholder}` in `text`.
pub fn render(text: &str, slots: &SlotAssignment) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| format!("unclosed placeholder in {text:?}"))?;
        let name = &after[..close];
        let value = slots
            .get(name)
            .ok_or_else(|| format!("no value for placeholder {{{name}}}"))?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Renders every string in a JSON tree and drops array elements whose
/// `when` guard fails; surviving elements lose their `when` key.
pub(crate) fn render_json(v: &Value, slots: &SlotAssignment) -> Result<Option<Value>, String> {
    Ok(Some(match v {
        Value::String(s) => Value::String(render(s, slots)?),
        Value::Array(xs) => {
            let mut out = Vec::with_capacity(xs.len());
            for x in xs {
                if let Some(r) = render_json(x, slots)? {
                    out.push(r);
                }
            }
            Value::Array(out)
        }
        Value::Object(m) => {
            let guard = match m.get("when") {
                Some(Value::String(g)) => Some(g.as_str()),
                Some(_) => return Err("`when` must be a string".into()),
                None => None,
            };
            if !guard_holds(guard, slots)? {
                return Ok(None);
            }
            let mut out = serde_json::Map::new();
            for (k, x) in m {
                if k == "when" {
                    continue;
                }
                if let Some(r) = render_json(x, slots)? {
                    out.insert(k.clone(), r);
                }
            }
            Value::Object(out)
        }
        other => other.clone(),
    }))
}
