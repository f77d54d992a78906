//! Stateful command-line workflow environment with seeded task generation,
//! rollout, and deterministic evaluation.

pub mod agents;
pub mod canonical;
pub mod command;
pub mod cron;
pub mod evaluator;
pub mod generator;
pub mod par;
pub mod protocol;
pub mod report;
pub mod rollout;
pub mod runner;
pub mod state;
pub mod zones;
