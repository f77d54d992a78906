//! Run reports: totals, per-ability, per-scenario and per-length tables
//! folded from episode records, rendered as JSON, CSV or Markdown.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::generator::{Ability, FAMILIES};
use crate::rollout::EpisodeRecord;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no episode records to report on")]
    Empty,
    #[error("unknown report format {0:?} (expected json, csv or md)")]
    Format(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub tasks: usize,
    pub strict_passes: usize,
    pub strict_accuracy: f64,
    pub mean_partial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbilityRow {
    pub ability: Ability,
    pub tasks: usize,
    /// `None` when no task in the run has this primary ability.
    pub strict_accuracy: Option<f64>,
    pub mean_partial: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub tasks: usize,
    pub strict_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRow {
    /// Exact length of the reference trajectory.
    pub gt_length: usize,
    pub tasks: usize,
    pub strict_accuracy: f64,
    pub mean_executed_steps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderSummary {
    /// Episodes with at least one outright provider failure.
    pub provider_failures: usize,
    /// Episodes that reported provider trouble but carried on.
    pub provider_impacted_tasks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub totals: Totals,
    pub by_primary_ability: Vec<AbilityRow>,
    pub by_scenario: Vec<ScenarioRow>,
    pub by_gt_length: Vec<LengthRow>,
    pub provider: ProviderSummary,
}

#[derive(Default)]
struct Acc {
    tasks: usize,
    passes: usize,
    partial_sum: f64,
    steps_sum: usize,
}

impl Acc {
    fn add(&mut self, r: &EpisodeRecord) {
        self.tasks += 1;
        self.passes += usize::from(r.verdict.strict_pass);
        self.partial_sum += r.verdict.partial_score;
        self.steps_sum += r.executed_steps;
    }

    fn accuracy(&self) -> Option<f64> {
        (self.tasks > 0).then(|| self.passes as f64 / self.tasks as f64)
    }

    fn partial(&self) -> Option<f64> {
        (self.tasks > 0).then(|| self.partial_sum / self.tasks as f64)
    }
}

impl RunReport {
    /// Folds records (in the given order) into a report.
    pub fn build(label: &str, records: &[EpisodeRecord]) -> Result<Self, ReportError> {
        if records.is_empty() {
            return Err(ReportError::Empty);
        }
        let mut all = Acc::default();
        let mut ability: BTreeMap<Ability, Acc> = BTreeMap::new();
        let mut scenario: BTreeMap<&str, Acc> = BTreeMap::new();
        let mut length: BTreeMap<usize, Acc> = BTreeMap::new();
        let mut provider = ProviderSummary {
            provider_failures: 0,
            provider_impacted_tasks: 0,
        };
        for r in records {
            all.add(r);
            ability.entry(r.primary_ability).or_default().add(r);
            scenario.entry(r.scenario.as_str()).or_default().add(r);
            length.entry(r.reference_length).or_default().add(r);
            provider.provider_failures += usize::from(r.provider_events.failures > 0);
            provider.provider_impacted_tasks += usize::from(r.provider_events.impacted > 0);
        }
        let empty = Acc::default();
        let mut scenario_names: Vec<&str> = FAMILIES.to_vec();
        scenario_names.extend(scenario.keys().filter(|k| !FAMILIES.contains(k)));
        Ok(Self {
            label: label.to_string(),
            totals: Totals {
                tasks: all.tasks,
                strict_passes: all.passes,
                strict_accuracy: all.accuracy().expect("records are non-empty"),
                mean_partial: all.partial().expect("records are non-empty"),
            },
            by_primary_ability: Ability::ALL
                .iter()
                .map(|a| {
                    let acc = ability.get(a).unwrap_or(&empty);
                    AbilityRow {
                        ability: *a,
                        tasks: acc.tasks,
                        strict_accuracy: acc.accuracy(),
                        mean_partial: acc.partial(),
                    }
                })
                .collect(),
            by_scenario: scenario_names
                .into_iter()
                .map(|s| {
                    let acc = scenario.get(s).unwrap_or(&empty);
                    ScenarioRow {
                        scenario: s.to_string(),
                        tasks: acc.tasks,
                        strict_accuracy: acc.accuracy(),
                    }
                })
                .collect(),
            by_gt_length: length
                .iter()
                .map(|(len, acc)| LengthRow {
                    gt_length: *len,
                    tasks: acc.tasks,
                    strict_accuracy: acc.accuracy().expect("buckets are non-empty"),
                    mean_executed_steps: acc.steps_sum as f64 / acc.tasks as f64,
                })
                .collect(),
            provider,
        })
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, ReportError> {
        match format {
            ReportFormat::Json => Ok(crate::canonical::to_string(self)),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Markdown => Ok(self.to_markdown()),
        }
    }

    /// Flat `section,key,metric,value` rows; one row per reported number.
    fn rows(&self) -> Vec<[String; 4]> {
        let mut rows = Vec::new();
        let mut push = |section: &str, key: &str, metric: &str, value: String| {
            rows.push([section.into(), key.into(), metric.into(), value]);
        };
        let t = &self.totals;
        push("totals", "all", "tasks", t.tasks.to_string());
        push("totals", "all", "strict_passes", t.strict_passes.to_string());
        push("totals", "all", "strict_accuracy", num(t.strict_accuracy));
        push("totals", "all", "mean_partial", num(t.mean_partial));
        for r in &self.by_primary_ability {
            push("ability", r.ability.as_str(), "tasks", r.tasks.to_string());
            push("ability", r.ability.as_str(), "strict_accuracy", opt(r.strict_accuracy));
            push("ability", r.ability.as_str(), "mean_partial", opt(r.mean_partial));
        }
        for r in &self.by_scenario {
            push("scenario", &r.scenario, "tasks", r.tasks.to_string());
            push("scenario", &r.scenario, "strict_accuracy", opt(r.strict_accuracy));
        }
        for r in &self.by_gt_length {
            let key = r.gt_length.to_string();
            push("gt_length", &key, "tasks", r.tasks.to_string());
            push("gt_length", &key, "strict_accuracy", num(r.strict_accuracy));
            push("gt_length", &key, "mean_executed_steps", num(r.mean_executed_steps));
        }
        let p = &self.provider;
        push("provider", "all", "provider_failures", p.provider_failures.to_string());
        push("provider", "all", "provider_impacted_tasks", p.provider_impacted_tasks.to_string());
        rows
    }

    fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "key", "metric", "value"])?;
        for row in self.rows() {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
    }

    fn to_markdown(&self) -> String {
        let mut out = String::new();
        let t = &self.totals;
        let _ = writeln!(out, "# Run report: {}\n", self.label);
        table(
            &mut out,
            "Totals",
            &["tasks", "strict_passes", "strict_accuracy", "mean_partial"],
            vec![vec![
                t.tasks.to_string(),
                t.strict_passes.to_string(),
                num(t.strict_accuracy),
                num(t.mean_partial),
            ]],
        );
        table(
            &mut out,
            "By primary ability",
            &["ability", "tasks", "strict_accuracy", "mean_partial"],
            self.by_primary_ability
                .iter()
                .map(|r| {
                    vec![
                        r.ability.as_str().to_string(),
                        r.tasks.to_string(),
                        opt(r.strict_accuracy),
                        opt(r.mean_partial),
                    ]
                })
                .collect(),
        );
        table(
            &mut out,
            "By scenario",
            &["scenario", "tasks", "strict_accuracy"],
            self.by_scenario
                .iter()
                .map(|r| vec![r.scenario.clone(), r.tasks.to_string(), opt(r.strict_accuracy)])
                .collect(),
        );
        table(
            &mut out,
            "By reference length",
            &["gt_length", "tasks", "strict_accuracy", "mean_executed_steps"],
            self.by_gt_length
                .iter()
                .map(|r| {
                    vec![
                        r.gt_length.to_string(),
                        r.tasks.to_string(),
                        num(r.strict_accuracy),
                        num(r.mean_executed_steps),
                    ]
                })
                .collect(),
        );
        let p = &self.provider;
        table(
            &mut out,
            "Provider",
            &["provider_failures", "provider_impacted_tasks"],
            vec![vec![p.provider_failures.to_string(), p.provider_impacted_tasks.to_string()]],
        );
        out
    }
}

/// Shortest text that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn table(out: &mut String, title: &str, header: &[&str], rows: Vec<Vec<String>>) {
    let _ = writeln!(out, "## {title}\n");
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", header.iter().map(|_| "---").collect::<Vec<_>>().join("|"));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out.push('\n');
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" | "markdown" => Ok(Self::Markdown),
            other => Err(ReportError::Format(other.to_string())),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::Markdown => "md",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::Verdict;
    use crate::generator::PromptStyle;
    use crate::rollout::{ProviderCounters, StopReason};

    fn rec(id: &str, scenario: &str, ability: Ability, len: usize, pass: bool, partial: f64, steps: usize) -> EpisodeRecord {
        EpisodeRecord {
            task_id: id.into(),
            scenario: scenario.into(),
            primary_ability: ability,
            prompt_style: PromptStyle::Directive,
            reference_length: len,
            steps: Vec::new(),
            stop_reason: StopReason::AgentDone,
            verdict: Verdict {
                strict_pass: pass,
                partial_score: partial,
                check_results: Vec::new(),
            },
            executed_steps: steps,
            provider_events: ProviderCounters::default(),
        }
    }

    fn sample() -> Vec<EpisodeRecord> {
        vec![
            rec("a", "inbox", Ability::InformationTransfer, 5, true, 1.0, 5),
            rec("b", "inbox", Ability::InformationTransfer, 5, false, 0.5, 8),
            rec("c", "state_repair", Ability::StateRepair, 7, true, 1.0, 7),
            rec("d", "release_gate", Ability::WorkflowCompletion, 9, false, 0.25, 25),
        ]
    }

    #[test]
    fn four_tasks_two_pass() {
        let r = RunReport::build("t", &sample()).unwrap();
        assert_eq!(r.totals.tasks, 4);
        assert_eq!(r.totals.strict_accuracy, 0.5);
        assert_eq!(r.totals.mean_partial, 2.75 / 4.0);
        assert_eq!(r.by_primary_ability.len(), 6);
        assert_eq!(r.by_scenario.len(), 17);
        let lens: Vec<usize> = r.by_gt_length.iter().map(|b| b.gt_length).collect();
        assert_eq!(lens, [5, 7, 9]);
        assert_eq!(r.by_gt_length[0].mean_executed_steps, 6.5);
        assert_eq!(r.by_primary_ability[5].strict_accuracy, Some(1.0));
        assert_eq!(r.by_primary_ability[2].strict_accuracy, None);
    }

    #[test]
    fn provider_counts_episodes() {
        let mut records = sample();
        records[1].provider_events.failures = 2;
        records[2].provider_events.impacted = 1;
        let r = RunReport::build("t", &records).unwrap();
        assert_eq!(r.provider.provider_failures, 1);
        assert_eq!(r.provider.provider_impacted_tasks, 1);
    }

    #[test]
    fn empty_records_are_an_error() {
        assert!(matches!(RunReport::build("t", &[]), Err(ReportError::Empty)));
    }

    #[test]
    fn formats_parse() {
        for f in ["json", "csv", "md"] {
            assert_eq!(f.parse::<ReportFormat>().unwrap().to_string(), f);
        }
        assert!("xml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn csv_and_markdown_carry_the_same_numbers() {
        let r = RunReport::build("t", &sample()).unwrap();
        let csv = r.render(ReportFormat::Csv).unwrap();
        let md = r.render(ReportFormat::Markdown).unwrap();
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        let mut n = 0;
        for row in reader.records() {
            let row = row.unwrap();
            if row[3].is_empty() {
                continue;
            }
            let v: f64 = row[3].parse().unwrap();
            assert!(md.contains(&format!(" {v} ")) || md.contains(&format!("| {v} |")), "{:?}", row);
            n += 1;
        }
        assert!(n > 20);
        let json: RunReport = serde_json::from_str(&r.render(ReportFormat::Json).unwrap()).unwrap();
        assert_eq!(json, r);
    }
}
