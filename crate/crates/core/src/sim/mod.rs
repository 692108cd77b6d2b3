//! Seedable stochastic insect agent.
//!
//! The insect is a unicycle walking at a baseline speed with white noise on
//! its heading rate. A stimulus succeeds with a per-kind probability. A
//! successful turn adds a constant angular rate for the stimulus duration,
//! sized so the heading changes by an angle drawn from a scaled Beta
//! distribution; a successful ACCEL adds a forward speed ramping linearly to
//! `accel_delta_v`. Induced components decay exponentially once the stimulus
//! ends. Heading noise is silent while a stimulus is on, so a failed trial
//! holds its heading and grades as a failure.
//!
//! Rates are evaluated at the tick midpoint and integrated with a forward
//! Euler step. Tick `k` is at exactly `k / tick_rate` seconds.

mod params;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use params::{Arena, ResponseModelParams, SimConfig, StartPose, TurnAngleDist};

use crate::locomotion::{Pose, StimulationEvent, Trajectory};
use crate::stimgen::{StimKind, StimulationSchedule, StimulusTrain};

/// Responses this far past their end (in decay constants) are dropped.
const DROP_AFTER_TAUS: f64 = 30.0;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("stimulus amplitude must be > 0")]
    NullStimulus,
    #[error("duration must be finite and > 0, got {0} s")]
    Duration(f64),
}

/// An induced velocity component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InducedResponse {
    pub kind: StimKind,
    pub t_start: f64,
    pub t_end: f64,
    /// Signed deg/s for turns; mm/s reached at `t_end` for ACCEL.
    pub magnitude: f64,
    /// Residual of the response this one replaced, decaying from `t_start`.
    pub carry: f64,
}

impl InducedResponse {
    pub fn value_at(&self, t: f64, tau: f64) -> f64 {
        let carry = self.carry * (-(t - self.t_start).max(0.0) / tau).exp();
        let own = if t < self.t_start {
            0.0
        } else if t < self.t_end {
            match self.kind {
                StimKind::Accel => self.magnitude * (t - self.t_start) / (self.t_end - self.t_start),
                _ => self.magnitude,
            }
        } else {
            self.magnitude * (-(t - self.t_end) / tau).exp()
        };
        carry + own
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveStimulus {
    pub kind: StimKind,
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsectState {
    pub pose: Pose,
    /// mm/s over the last tick.
    pub forward_speed: f64,
    /// Signed deg/s over the last tick.
    pub angular_speed: f64,
    pub turn: Option<InducedResponse>,
    pub accel: Option<InducedResponse>,
    /// Most recent stimulus still being delivered.
    pub stimulus: Option<ActiveStimulus>,
    /// Heading noise is silent before this time.
    pub quiet_until: f64,
}

impl InsectState {
    pub fn at_rest(pose: Pose, baseline_speed: f64) -> Self {
        Self {
            pose,
            forward_speed: baseline_speed,
            angular_speed: 0.0,
            turn: None,
            accel: None,
            stimulus: None,
            quiet_until: f64::NEG_INFINITY,
        }
    }

    pub fn stimulus_active(&self, t: f64) -> bool {
        t < self.quiet_until - 1e-9
    }
}

/// Ground truth of one applied stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub event: StimulationEvent,
    pub success: bool,
    /// Target heading change, degrees. Successful turns only.
    pub turn_angle_deg: Option<f64>,
}

/// Wraps to [-π, π], odd-symmetric.
pub fn wrap_angle(h: f64) -> f64 {
    h - std::f64::consts::TAU * (h / std::f64::consts::TAU).round()
}

/// Advances `state` to `t_next` with heading-rate noise `noise` (deg/s).
///
/// Panics on a non-finite result.
pub fn integrate(
    state: &InsectState,
    t_next: f64,
    params: &ResponseModelParams,
    arena: &Arena,
    noise: f64,
) -> InsectState {
    let t = state.pose.t;
    let dt = t_next - t;
    let tm = t + dt / 2.0;
    let tau = params.post_stim_decay_tau;
    let mut next = *state;

    let induced_w = next
        .turn
        .map_or(0.0, |r| r.value_at(tm, tau))
        .clamp(-params.peak_turn_rate, params.peak_turn_rate);
    let induced_v = next
        .accel
        .map_or(0.0, |r| r.value_at(tm, tau))
        .clamp(0.0, params.accel_delta_v);
    let noise = if state.stimulus_active(t) { 0.0 } else { noise };
    let w = induced_w + noise;
    let v = params.baseline_speed + induced_v;

    let p = state.pose;
    let mut x = p.x + v * p.heading.cos() * dt;
    let mut y = p.y + v * p.heading.sin() * dt;
    let mut h = wrap_angle(p.heading + w.to_radians() * dt);

    if x < arena.x_min {
        x = arena.x_min;
        if h.cos() < 0.0 {
            h = h.signum() * std::f64::consts::PI - h;
        }
    } else if x > arena.x_max {
        x = arena.x_max;
        if h.cos() > 0.0 {
            h = h.signum() * std::f64::consts::PI - h;
        }
    }
    if y < arena.y_min {
        y = arena.y_min;
        if h.sin() < 0.0 {
            h = -h;
        }
    } else if y > arena.y_max {
        y = arena.y_max;
        if h.sin() > 0.0 {
            h = -h;
        }
    }
    assert!(
        x.is_finite() && y.is_finite() && h.is_finite(),
        "simulator state became non-finite at t = {t}"
    );

    next.pose = Pose::new(t_next, x, y, h);
    next.forward_speed = v;
    next.angular_speed = w;
    let horizon = DROP_AFTER_TAUS * tau;
    next.turn = next.turn.filter(|r| t_next < r.t_end + horizon);
    next.accel = next.accel.filter(|r| t_next < r.t_end + horizon);
    next.stimulus = next.stimulus.filter(|s| t_next < s.t_end - 1e-9);
    next
}

pub struct Simulator {
    config: SimConfig,
    arena: Arena,
    turn_angle: Beta<f64>,
    rng: ChaCha8Rng,
    tick: u64,
    state: InsectState,
    poses: Vec<Pose>,
    events: Vec<StimulationEvent>,
    outcomes: Vec<Outcome>,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let d = config.params.turn_angle_dist;
        let turn_angle = Beta::new(d.alpha, d.beta).map_err(|e| SimError::Config(e.to_string()))?;
        let mut start = Pose::new(0.0, config.start.x, config.start.y, wrap_angle(config.start.heading));
        let mut arena = config.arena;
        if config.mirror {
            start = start.mirrored();
            arena = arena.mirrored();
        }
        let state = InsectState::at_rest(start, config.params.baseline_speed);
        Ok(Self {
            arena,
            turn_angle,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            tick: 0,
            state,
            poses: vec![start],
            events: Vec::new(),
            outcomes: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &InsectState {
        &self.state
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 / self.config.tick_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.config.tick_rate
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn events(&self) -> &[StimulationEvent] {
        &self.events
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    /// Starts `train` now; its own start time is ignored.
    pub fn apply_stimulus(&mut self, kind: StimKind, train: &StimulusTrain) -> Result<Outcome, SimError> {
        if !(train.amplitude() > 0.0) {
            return Err(SimError::NullStimulus);
        }
        let params = &self.config.params;
        let t = self.time();
        let duration = train.duration();
        let t_end = t + duration;
        let tau = params.post_stim_decay_tau;

        let p_success = if kind.is_turn() {
            params.p_turn_success
        } else {
            params.p_accel_success
        };
        let success = self.rng.random::<f64>() < p_success;
        let angle = kind
            .is_turn()
            .then(|| params.turn_angle_dist.max_deg * self.turn_angle.sample(&mut self.rng));

        let state = &mut self.state;
        state.quiet_until = state.quiet_until.max(t_end);
        state.stimulus = Some(ActiveStimulus { kind, t_end });
        if success {
            let slot = if kind.is_turn() { &mut state.turn } else { &mut state.accel };
            let carry = slot.map_or(0.0, |r| r.value_at(t, tau));
            let magnitude = match kind {
                StimKind::Left => (angle.unwrap() / duration).min(params.peak_turn_rate),
                StimKind::Right => -(angle.unwrap() / duration).min(params.peak_turn_rate),
                StimKind::Accel => params.accel_delta_v,
            };
            *slot = Some(InducedResponse {
                kind,
                t_start: t,
                t_end,
                magnitude,
                carry,
            });
        }
        let outcome = Outcome {
            event: StimulationEvent::new(kind, t, duration),
            success,
            turn_angle_deg: if success { angle } else { None },
        };
        self.events.push(outcome.event);
        self.outcomes.push(outcome);
        Ok(outcome)
    }

    pub fn step(&mut self) {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let sign = if self.config.mirror { -1.0 } else { 1.0 };
        let noise = sign * self.config.params.baseline_heading_noise * z;
        let t_next = (self.tick + 1) as f64 / self.config.tick_rate;
        self.state = integrate(&self.state, t_next, &self.config.params, &self.arena, noise);
        self.tick += 1;
        self.poses.push(self.state.pose);
    }

    pub fn ticks_for(&self, duration: f64) -> u64 {
        (duration * self.config.tick_rate).round() as u64
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory::new(self.poses.clone()).expect("simulator poses are valid")
    }

    pub fn finish(self) -> SessionOutput {
        SessionOutput {
            trajectory: Trajectory::new(self.poses).expect("simulator poses are valid"),
            events: self.events,
            outcomes: self.outcomes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub trajectory: Trajectory,
    pub events: Vec<StimulationEvent>,
    /// Hidden ground truth, one per event.
    pub outcomes: Vec<Outcome>,
}

/// Batch session. Each scheduled stimulus starts at the first tick at or
/// after its start time; stimuli starting after `duration` are not applied.
pub fn run_session(
    config: SimConfig,
    schedule: &StimulationSchedule,
    duration: f64,
) -> Result<SessionOutput, SimError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(SimError::Duration(duration));
    }
    let mut sim = Simulator::new(config)?;
    let n = sim.ticks_for(duration);
    let mut pending = schedule.events().iter().peekable();
    for _ in 0..n {
        let t = sim.time();
        while let Some(ev) = pending.next_if(|e| e.train.start_time() <= t + 1e-9) {
            sim.apply_stimulus(ev.channel, &ev.train)?;
        }
        sim.step();
    }
    Ok(sim.finish())
}

/// One stimulus of `kind` at `onset` in a session of `duration` seconds.
pub fn single_event_session(
    config: SimConfig,
    kind: StimKind,
    onset: f64,
    duration: f64,
) -> Result<SessionOutput, SimError> {
    let schedule = StimulationSchedule::new(vec![crate::stimgen::ScheduledStimulus {
        channel: kind,
        train: StimulusTrain::locomotion(onset),
    }])
    .expect("single event schedule");
    run_session(config, &schedule, duration)
}
