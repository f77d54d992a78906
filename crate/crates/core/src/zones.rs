//! Fixed city and timezone table for the benchmark window.
//!
//! Offsets are the ones in force on the default clock anchor (2026-03-01),
//! before any northern-hemisphere daylight-saving switch.

use chrono::{Duration, NaiveDateTime};

/// One grounded city and the IANA zone it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct City {
    pub name: &'static str,
    pub zone: &'static str,
}

pub const CITIES: &[City] = &[
    City { name: "Berlin", zone: "Europe/Berlin" },
    City { name: "Seattle", zone: "America/Los_Angeles" },
    City { name: "Singapore", zone: "Asia/Singapore" },
    City { name: "London", zone: "Europe/London" },
    City { name: "Boston", zone: "America/New_York" },
    City { name: "Austin", zone: "America/Chicago" },
    City { name: "Sydney", zone: "Australia/Sydney" },
    City { name: "New York", zone: "America/New_York" },
];

const OFFSETS_MINUTES: &[(&str, i64)] = &[
    ("Europe/Berlin", 60),
    ("America/Los_Angeles", -8 * 60),
    ("Asia/Singapore", 8 * 60),
    ("Europe/London", 0),
    ("America/New_York", -5 * 60),
    ("America/Chicago", -6 * 60),
    ("Australia/Sydney", 11 * 60),
];

pub fn is_supported_zone(zone: &str) -> bool {
    utc_offset_minutes(zone).is_some()
}

pub fn utc_offset_minutes(zone: &str) -> Option<i64> {
    OFFSETS_MINUTES
        .iter()
        .find(|(z, _)| *z == zone)
        .map(|(_, off)| *off)
}

pub fn zone_for_city(city: &str) -> Option<&'static str> {
    CITIES
        .iter()
        .find(|c| c.name.eq_ignore_ascii_case(city))
        .map(|c| c.zone)
}

/// Re-expresses a local time in `from` as local time in `to`.
pub fn convert(local: NaiveDateTime, from: &str, to: &str) -> Option<NaiveDateTime> {
    let from_off = utc_offset_minutes(from)?;
    let to_off = utc_offset_minutes(to)?;
    Some(local - Duration::minutes(from_off) + Duration::minutes(to_off))
}
