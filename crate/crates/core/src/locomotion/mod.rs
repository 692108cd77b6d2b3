//! Trajectory kinematics and grading of stimulation events.

mod classify;
mod io;
mod markers;
mod summary;
mod trajectory;

use thiserror::Error;

pub use classify::{
    classify, classify_all, judge, velocity_profile, ClassificationResult, Grade,
    StimulationEvent, PROFILE_SPAN, PROFILE_STEP, SUCCESS_RATIO,
};
pub use io::{read_trace, trace_csv, EventsFile, LoadedTrace, MARKER_HEADER, POSE_HEADER};
pub use markers::{markers_to_pose, poses_from_markers, Gap, GapReason, MarkerFrame};
pub use summary::{
    summarize, summarize_with, Histogram, HistogramConfig, KindStats, LocomotionSummary,
    ProfileCurve,
};
pub use trajectory::{unwrap_headings, Pose, Trajectory};

pub use crate::stimgen::StimKind;

#[derive(Debug, Error)]
pub enum LocomotionError {
    #[error("need at least 2 poses, have {0}")]
    TooFewPoses(usize),
    #[error("pose {0} has a non-finite field")]
    NonFinite(usize),
    #[error("time stamps must strictly increase (pose {0})")]
    NotIncreasing(usize),
    #[error("window [{t_a}, {t_b}] is empty")]
    EmptyWindow { t_a: f64, t_b: f64 },
    #[error("window [{t_a}, {t_b}] exceeds the trajectory [{start}, {end}]")]
    OutOfExtent {
        t_a: f64,
        t_b: f64,
        start: f64,
        end: f64,
    },
    #[error("window of {window} s is shorter than the sample interval {interval} s")]
    WindowTooShort { window: f64, interval: f64 },
    #[error("event at {0} s has a non-positive duration")]
    BadEvent(f64),
    #[error("trace line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    CsvFormat(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
