//! Reference paths, the scripted operator, teleoperation sessions and their logs.

mod autopilot;
mod path;
mod policy;
mod session;

use thiserror::Error;

pub use autopilot::{autopilot, median, AutopilotReport, SeedResult};
pub use path::{
    bearing_error_deg, cross_track_error, project_onto_segment, PathSpec, ProgressTracker,
    DEFAULT_CORRIDOR,
};
pub use policy::{scripted_policy, steer, PolicyParams, RateLimiter};
pub use session::{
    replay, run_scripted, sha256_hex, CommandMode, FrameRecord, Replay, SessionConfig, SessionLog,
    SessionMetrics, SessionStatus, SessionSummary, Snapshot, TeleopSession,
};

use crate::link::LinkError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum NavError {
    #[error("invalid path: {0}")]
    Path(String),
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("command rejected, refractory for another {remaining_s:.3} s")]
    Refractory { remaining_s: f64 },
    #[error("session log: {0}")]
    Log(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Link(#[from] LinkError),
}
