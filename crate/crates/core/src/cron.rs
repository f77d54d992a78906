//! Five-field cron expression validation.
//!
//! Jobs are stored and listed but never fired, so only the grammar matters:
//! each field is `*`, `*/n`, a number, a range `a-b`, a stepped range
//! `a-b/n`, or a comma list of those.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CronError {
    pub field: Option<&'static str>,
    pub reason: String,
}

impl fmt::Display for CronError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.field {
            Some(field) => write!(f, "invalid cron {field} field: {}", self.reason),
            None => write!(f, "invalid cron expression: {}", self.reason),
        }
    }
}

impl std::error::Error for CronError {}

const FIELDS: [(&str, u32, u32); 5] = [
    ("minute", 0, 59),
    ("hour", 0, 23),
    ("day-of-month", 1, 31),
    ("month", 1, 12),
    ("day-of-week", 0, 7),
];

pub fn validate(expr: &str) -> Result<(), CronError> {
    let parts: Vec<&str> = expr.split_whitespace().collect();
    if parts.len() != FIELDS.len() {
        return Err(CronError {
            field: None,
            reason: format!("expected 5 fields, found {}", parts.len()),
        });
    }
    for (part, (name, lo, hi)) in parts.iter().zip(FIELDS) {
        validate_field(part, lo, hi).map_err(|reason| CronError {
            field: Some(name),
            reason,
        })?;
    }
    Ok(())
}

fn validate_field(field: &str, lo: u32, hi: u32) -> Result<(), String> {
    for item in field.split(',') {
        if item.is_empty() {
            return Err(format!("empty list item in {field:?}"));
        }
        let (range, step) = match item.split_once('/') {
            Some((r, s)) => (r, Some(s)),
            None => (item, None),
        };
        if let Some(step) = step {
            let n = number(step)?;
            if n == 0 {
                return Err("step must be at least 1".into());
            }
        }
        if range == "*" {
            continue;
        }
        match range.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (number(a)?, number(b)?);
                in_bounds(a, lo, hi)?;
                in_bounds(b, lo, hi)?;
                if a > b {
                    return Err(format!("range {a}-{b} is reversed"));
                }
            }
            None => {
                if step.is_some() {
                    return Err(format!("step needs `*` or a range, got {range:?}"));
                }
                in_bounds(number(range)?, lo, hi)?;
            }
        }
    }
    Ok(())
}

fn number(s: &str) -> Result<u32, String> {
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("{s:?} is not a number"));
    }
    s.parse().map_err(|_| format!("{s:?} is out of range"))
}

fn in_bounds(v: u32, lo: u32, hi: u32) -> Result<(), String> {
    if v < lo || v > hi {
        Err(format!("{v} outside {lo}-{hi}"))
    } else {
        Ok(())
    }
}
