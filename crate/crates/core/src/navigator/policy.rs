use serde::{Deserialize, Serialize};

use super::path::{bearing_error_deg, PathSpec};
use crate::sim::InsectState;
use crate::stimgen::StimKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyParams {
    pub look_ahead_mm: f64,
    pub dead_band_deg: f64,
    pub target_speed_mm_s: f64,
    /// Minimum time between commands, seconds.
    pub refractory_s: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            look_ahead_mm: 100.0,
            dead_band_deg: 15.0,
            target_speed_mm_s: 30.0,
            refractory_s: 1.5,
        }
    }
}

/// Bang-bang rule on the heading error (degrees, positive to the left).
pub fn steer(heading_error_deg: f64, speed: f64, params: &PolicyParams) -> Option<StimKind> {
    if heading_error_deg > params.dead_band_deg {
        Some(StimKind::Left)
    } else if heading_error_deg < -params.dead_band_deg {
        Some(StimKind::Right)
    } else if speed < params.target_speed_mm_s {
        Some(StimKind::Accel)
    } else {
        None
    }
}

/// Steers toward the point `look_ahead_mm` past `progress` along the path.
/// Rate limiting is left to [`RateLimiter`].
pub fn scripted_policy(
    state: &InsectState,
    path: &PathSpec,
    progress: f64,
    params: &PolicyParams,
) -> Option<StimKind> {
    let target = path.point_at(progress + params.look_ahead_mm);
    let p = state.pose;
    steer(bearing_error_deg(p.x, p.y, p.heading, target), state.forward_speed, params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateLimiter {
    pub refractory: f64,
    last: Option<f64>,
}

impl RateLimiter {
    pub fn new(refractory: f64) -> Self {
        Self {
            refractory,
            last: None,
        }
    }

    /// Seconds until the next command is allowed at time `t`.
    pub fn remaining(&self, t: f64) -> f64 {
        self.last
            .map_or(0.0, |last| (last + self.refractory - t).max(0.0))
    }

    pub fn ready(&self, t: f64) -> bool {
        self.remaining(t) <= 1e-9
    }

    /// Records a command at `t` if allowed.
    pub fn try_fire(&mut self, t: f64) -> bool {
        if self.ready(t) {
            self.last = Some(t);
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locomotion::Pose;

    #[test]
    fn rule_examples() {
        let p = PolicyParams::default();
        assert_eq!(steer(40.0, 20.0, &p), Some(StimKind::Left));
        assert_eq!(steer(-40.0, 20.0, &p), Some(StimKind::Right));
        assert_eq!(steer(0.0, 20.0, &p), Some(StimKind::Accel));
        assert_eq!(steer(0.0, 45.0, &p), None);
        assert_eq!(steer(15.0, 45.0, &p), None);
    }

    #[test]
    fn refractory_blocks_early_commands() {
        let mut rl = RateLimiter::new(1.5);
        assert!(rl.try_fire(10.0));
        assert!(!rl.try_fire(10.5));
        assert!((rl.remaining(10.5) - 1.0).abs() < 1e-12);
        assert!(rl.try_fire(11.5));
    }

    #[test]
    fn policy_turns_toward_the_course() {
        let path = PathSpec::s_course();
        // at the start, facing +x: the course goes up and to the right, so turn left
        let s = InsectState::at_rest(Pose::new(0.0, -500.0, 0.0, 0.0), 20.0);
        assert_eq!(scripted_policy(&s, &path, 0.0, &PolicyParams::default()), Some(StimKind::Left));
        let s = InsectState::at_rest(Pose::new(0.0, -500.0, 0.0, std::f64::consts::PI), 20.0);
        assert_eq!(scripted_policy(&s, &path, 0.0, &PolicyParams::default()), Some(StimKind::Right));
    }
}
