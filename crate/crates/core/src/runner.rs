//! Runs one agent configuration over many tasks, one episode per task.

use std::path::{Path, PathBuf};

use crate::agents::{AgentBuildError, AgentConfig};
use crate::generator::TaskSpec;
use crate::par;
use crate::rollout::{run_episode, EpisodeRecord, RolloutError};

/// Environment variable that roots episode directories.
pub const HOME_ENV: &str = "CLAWFORGE_HOME";

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error(transparent)]
    Agent(#[from] AgentBuildError),
    #[error(transparent)]
    Rollout(#[from] RolloutError),
}

/// Directory under which runs keep their episode directories: `$CLAWFORGE_HOME`
/// if set, otherwise a `clawforge` directory in the system temp dir.
pub fn home_dir() -> PathBuf {
    std::env::var_os(HOME_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("clawforge"))
}

/// Runs every task with a fresh agent built from `agent`, using up to
/// `jobs` worker threads. Episode `i` lives in `root/<task id>`, which must
/// not already hold files. Records come back in task order.
pub fn run_batch(
    tasks: &[TaskSpec],
    agent: &AgentConfig,
    budget: usize,
    jobs: usize,
    root: &Path,
) -> Result<Vec<EpisodeRecord>, BatchError> {
    par::map(tasks, jobs, |task| -> Result<EpisodeRecord, BatchError> {
        let mut a = agent.build(task)?;
        Ok(run_episode(task, a.as_mut(), budget, &root.join(&task.id))?)
    })
    .into_iter()
    .collect()
}
