//! Success grading of single stimulation events.
//!
//! - LEFT succeeds when the mean angular velocity during stimulation is
//!   counterclockwise, and at least 1.2 times the pre-stimulus value if the
//!   insect was already turning left.
//! - RIGHT is the clockwise mirror image.
//! - ACCEL succeeds when the mean linear speed during stimulation is at least
//!   1.2 times the pre-stimulus speed; from standstill any motion counts.
//!
//! The pre-stimulus baseline is a window of the same length as the stimulus,
//! ending at onset.

use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::stimgen::StimKind;

/// Required ratio of during-stimulus to pre-stimulus velocity.
pub const SUCCESS_RATIO: f64 = 1.2;

/// Bin width of velocity profiles, seconds.
pub const PROFILE_STEP: f64 = 0.1;
/// Profile span around onset, seconds.
pub const PROFILE_SPAN: (f64, f64) = (-1.0, 3.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulationEvent {
    pub kind: StimKind,
    #[serde(rename = "t_start_s")]
    pub t_start: f64,
    #[serde(rename = "duration_s", default = "default_duration")]
    pub duration: f64,
}

fn default_duration() -> f64 {
    1.0
}

impl StimulationEvent {
    pub fn new(kind: StimKind, t_start: f64, duration: f64) -> Self {
        Self {
            kind,
            t_start,
            duration,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    pub fn mirrored(&self) -> Self {
        Self {
            kind: self.kind.mirrored(),
            ..*self
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            t_start: self.t_start + dt,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grade {
    pub success: bool,
    /// Angular velocity (deg/s) for turns, linear speed (mm/s) for ACCEL.
    pub pre_value: f64,
    pub during_value: f64,
    /// Absolute heading change over the stimulus, degrees. Turns only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub turn_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub event: StimulationEvent,
    /// `None` when the trajectory does not cover both windows.
    pub grade: Option<Grade>,
    /// Velocity relative to onset, sampled every [`PROFILE_STEP`] over
    /// [`PROFILE_SPAN`]; angular speed is signed toward the commanded side.
    #[serde(skip)]
    pub profile: Option<Vec<f64>>,
}

impl ClassificationResult {
    pub fn is_gradeable(&self) -> bool {
        self.grade.is_some()
    }

    pub fn is_success(&self) -> bool {
        self.grade.as_ref().is_some_and(|g| g.success)
    }

    pub fn turn_angle(&self) -> Option<f64> {
        self.grade.as_ref().and_then(|g| g.turn_angle)
    }
}

/// Applies the success rule to pre/during values.
pub fn judge(kind: StimKind, pre: f64, during: f64) -> bool {
    match kind {
        StimKind::Left => during > 0.0 && (pre <= 0.0 || during >= SUCCESS_RATIO * pre),
        StimKind::Right => during < 0.0 && (pre >= 0.0 || during <= SUCCESS_RATIO * pre),
        StimKind::Accel => {
            if pre > 0.0 {
                during >= SUCCESS_RATIO * pre
            } else {
                during > 0.0
            }
        }
    }
}

pub fn classify(traj: &Trajectory, event: &StimulationEvent) -> ClassificationResult {
    let profile = velocity_profile(traj, event);
    let (pre_a, onset, end) = (event.t_start - event.duration, event.t_start, event.t_end());
    let measure = |a: f64, b: f64| match event.kind {
        StimKind::Accel => traj.linear_velocity(a, b),
        _ => traj.angular_velocity(a, b),
    };
    let grade = match (measure(pre_a, onset), measure(onset, end)) {
        (Ok(pre), Ok(during)) => Some(Grade {
            success: judge(event.kind, pre, during),
            pre_value: pre,
            during_value: during,
            turn_angle: event
                .kind
                .is_turn()
                .then(|| (traj.heading_at(end) - traj.heading_at(onset)).to_degrees().abs()),
        }),
        _ => None,
    };
    ClassificationResult {
        event: *event,
        grade,
        profile,
    }
}

pub fn classify_all(traj: &Trajectory, events: &[StimulationEvent]) -> Vec<ClassificationResult> {
    events.iter().map(|e| classify(traj, e)).collect()
}

/// Binned velocity around the onset, or `None` if the trajectory does not
/// cover the whole span.
pub fn velocity_profile(traj: &Trajectory, event: &StimulationEvent) -> Option<Vec<f64>> {
    let bins = ((PROFILE_SPAN.1 - PROFILE_SPAN.0) / PROFILE_STEP).round() as usize;
    let sign = if event.kind == StimKind::Right { -1.0 } else { 1.0 };
    (0..bins)
        .map(|k| {
            let a = event.t_start + PROFILE_SPAN.0 + k as f64 * PROFILE_STEP;
            let b = a + PROFILE_STEP;
            match event.kind {
                StimKind::Accel => traj.linear_velocity(a, b).ok(),
                _ => traj.angular_velocity(a, b).ok().map(|w| sign * w),
            }
        })
        .collect()
}
