//! Newline-delimited JSON wire protocol between the driver and an external
//! agent.
//!
//! Driver to agent, one line per step:
//! `{"type":"observation","task_id":..,"step":n,"instruction":..|null,...}`.
//! Agent to driver: any number of `{"type":"provider_event","kind":..}`
//! lines followed by exactly one `{"type":"command","line":..}` or
//! `{"type":"stop"}`.

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::rollout::{Observation, ProviderEventKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DriverMessage {
    Observation(Observation),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentMessage {
    Command { line: String },
    ProviderEvent { kind: ProviderEventKind },
    Stop,
}

/// The command line an agent sends when it answers with `stop`.
pub const STOP_LINE: &str = "done";

/// Encodes a message as one line, newline included.
pub fn encode<T: Serialize>(msg: &T) -> String {
    let mut line = canonical::to_line(msg);
    line.push('\n');
    line
}

pub fn decode_agent(line: &str) -> Result<AgentMessage, serde_json::Error> {
    serde_json::from_str(line.trim_end_matches(['\r', '\n']))
}

pub fn decode_driver(line: &str) -> Result<DriverMessage, serde_json::Error> {
    serde_json::from_str(line.trim_end_matches(['\r', '\n']))
}
