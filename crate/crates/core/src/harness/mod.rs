//! Episode execution, success-rate aggregation, OOD sweeps and the
//! newline-delimited JSON protocol used by external agents and clients.

mod agent;
mod episode;
pub mod protocol;
mod summary;
mod sweep;

use thiserror::Error;

use crate::env::EnvError;
use crate::oracle::OracleError;
use crate::params::ParamsError;

pub use agent::{Agent, AgentSpec, ExternalAgent, Observation, OracleAgent, RandomAgent};
pub use episode::{evaluate, run_episode, EpisodeRecord, Evaluation, TraceHasher};
pub use summary::{wilson_interval, EvalSummary, WILSON_Z};
pub use sweep::{ood_sweep, SweepReport, SweepRow, CSV_HEADER};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("protocol error: {msg} (frame: {frame:?})")]
    Protocol { msg: String, frame: String },
    #[error("agent process: {0}")]
    Io(#[from] std::io::Error),
    #[error("evaluation needs at least one episode")]
    NoEpisodes,
    #[error("episode with seed {seed} failed after {} completed episodes: {source}", completed.len())]
    Aborted {
        seed: u64,
        completed: Vec<EpisodeRecord>,
        #[source]
        source: Box<HarnessError>,
    },
}
