//! Workbench for non-invasively stimulated cyborg insects.
//!
//! The crate is split along the experimental pipeline:
//!
//! - [`stimgen`]: bipolar square-wave trains, their edges, and stimulation schedules.
//! - [`neurosig`]: artifact blanking, band-pass filtering, MAD-threshold spike
//!   detection and stimulus-locked response statistics.
//! - [`locomotion`]: trajectory kinematics and success grading of turning and
//!   acceleration stimuli.
//! - [`sim`]: a seedable insect agent whose stimulus responses are calibrated
//!   against the grading criteria.
//! - [`link`]: the 6-byte command frame and a lossy, jittered delivery channel.
//! - [`navigator`]: reference paths, cross-track metrics, the scripted operator
//!   and teleoperation sessions with replayable logs.

// `!(x > 0.0)` style checks are how NaN gets rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod link;
pub mod locomotion;
pub mod navigator;
pub mod neurosig;
pub mod signal;
pub mod sim;
pub mod stimgen;

pub use signal::SampledSignal;
