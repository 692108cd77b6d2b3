use serde::{Deserialize, Serialize};

use super::SimError;

/// Turn angle drawn as `max_deg * Beta(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TurnAngleDist {
    pub alpha: f64,
    pub beta: f64,
    pub max_deg: f64,
}

impl Default for TurnAngleDist {
    fn default() -> Self {
        Self {
            alpha: 1.4,
            beta: 2.6,
            max_deg: 110.0,
        }
    }
}

impl TurnAngleDist {
    pub fn mean(&self) -> f64 {
        self.max_deg * self.alpha / (self.alpha + self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResponseModelParams {
    pub p_turn_success: f64,
    pub p_accel_success: f64,
    pub turn_angle_dist: TurnAngleDist,
    /// Cap on the induced angular rate, deg/s.
    pub peak_turn_rate: f64,
    /// Induced speed reached at the end of an ACCEL stimulus, mm/s.
    pub accel_delta_v: f64,
    pub post_stim_decay_tau: f64,
    pub baseline_speed: f64,
    /// Std of the per-tick heading-rate noise, deg/s. Silent while a stimulus is on.
    pub baseline_heading_noise: f64,
}

impl Default for ResponseModelParams {
    fn default() -> Self {
        Self {
            p_turn_success: 0.807,
            p_accel_success: 0.740,
            turn_angle_dist: TurnAngleDist::default(),
            peak_turn_rate: 110.0,
            accel_delta_v: 60.0,
            post_stim_decay_tau: 0.5,
            baseline_speed: 20.0,
            baseline_heading_noise: 5.0,
        }
    }
}

impl ResponseModelParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        for (name, p) in [("p_turn_success", self.p_turn_success), ("p_accel_success", self.p_accel_success)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        let d = &self.turn_angle_dist;
        if !(d.alpha > 0.0 && d.beta > 0.0 && d.alpha.is_finite() && d.beta.is_finite()) {
            return bad(format!("turn angle shape ({}, {}) must be positive", d.alpha, d.beta));
        }
        if !(d.max_deg > 0.0 && d.max_deg <= 110.0) {
            return bad(format!("turn angle support must lie within [0, 110] deg, got {}", d.max_deg));
        }
        if !(self.post_stim_decay_tau > 0.0 && self.post_stim_decay_tau.is_finite()) {
            return bad(format!("decay tau must be > 0, got {}", self.post_stim_decay_tau));
        }
        for (name, v) in [
            ("peak_turn_rate", self.peak_turn_rate),
            ("accel_delta_v", self.accel_delta_v),
            ("baseline_speed", self.baseline_speed),
            ("baseline_heading_noise", self.baseline_heading_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// Axis-aligned arena, millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Self {
            x_min: -1500.0,
            x_max: 1500.0,
            y_min: -1500.0,
            y_max: 1500.0,
        }
    }
}

impl Arena {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn mirrored(&self) -> Self {
        Self {
            y_min: -self.y_max,
            y_max: -self.y_min,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Default for StartPose {
    fn default() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub tick_rate: f64,
    pub arena: Arena,
    pub seed: u64,
    pub params: ResponseModelParams,
    pub start: StartPose,
    /// Simulate the x-axis reflection of the configured world: start pose,
    /// arena and heading noise are reflected, stimuli are applied as given.
    pub mirror: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tick_rate: 100.0,
            arena: Arena::default(),
            seed: 0,
            params: ResponseModelParams::default(),
            start: StartPose::default(),
            mirror: false,
        }
    }
}

impl SimConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn mirrored(mut self) -> Self {
        self.mirror = !self.mirror;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.tick_rate > 0.0 && self.tick_rate.is_finite()) {
            return Err(SimError::Config(format!("tick_rate must be > 0, got {}", self.tick_rate)));
        }
        let a = &self.arena;
        if !(a.x_max > a.x_min && a.y_max > a.y_min) {
            return Err(SimError::Config("arena must have positive area".into()));
        }
        if !a.contains(self.start.x, self.start.y) || !self.start.heading.is_finite() {
            return Err(SimError::Config("start pose must lie inside the arena".into()));
        }
        self.params.validate()
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
