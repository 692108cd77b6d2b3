use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::path::{cross_track_error, PathSpec, ProgressTracker};
use super::policy::{scripted_policy, PolicyParams, RateLimiter};
use super::NavError;
use crate::link::{decode, ChannelModel, CommandFrame, Link, LinkStats};
use crate::locomotion::{classify_all, summarize, trace_csv, LocomotionSummary, StimulationEvent};
use crate::sim::{Outcome, SimConfig, Simulator, StartPose};
use crate::stimgen::StimKind;

/// Mixed into the session seed to get the channel seed.
const LINK_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandMode {
    #[default]
    Scripted,
    Console,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub sim: SimConfig,
    pub link: ChannelModel,
    pub policy: PolicyParams,
    pub amplitude_v: f64,
    pub stimulus_duration_s: f64,
    pub max_duration_s: f64,
    pub stop_on_completion: bool,
    /// Distance to the last waypoint that counts as arrival, mm.
    pub completion_radius_mm: f64,
    /// Fraction of the path length that must have been covered on arrival.
    pub completion_progress: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            link: ChannelModel::default(),
            policy: PolicyParams::default(),
            amplitude_v: 4.0,
            stimulus_duration_s: 1.0,
            max_duration_s: 120.0,
            stop_on_completion: true,
            completion_radius_mm: 50.0,
            completion_progress: 0.9,
        }
    }
}

impl SessionConfig {
    /// Seeds the simulator with `seed` and the channel with a value derived from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sim.seed = seed;
        self.link.seed = seed ^ LINK_SEED_SALT;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, NavError> {
        serde_json::from_str(text).map_err(|e| NavError::Config(e.to_string()))
    }
}

/// Telemetry record, one per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// mm/s
    pub v: f64,
    /// deg/s
    pub omega: f64,
    pub stim: Option<StimKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionStatus {
    #[serde(flatten)]
    pub snapshot: Snapshot,
    pub cross_track_mm: f64,
    pub progress_mm: f64,
    pub path_length_mm: f64,
    pub complete: bool,
    pub refractory_remaining_s: f64,
    pub link: LinkStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub sent_at: f64,
    pub hex: String,
    pub dropped: bool,
    pub delivered_at: Option<f64>,
    /// Tick at which the backpack started the stimulus.
    pub applied_tick: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub duration_s: f64,
    pub rms_cross_track_mm: f64,
    pub max_cross_track_mm: f64,
    pub progress_mm: f64,
    pub path_length_mm: f64,
    pub completed: bool,
    pub completion_time_s: Option<f64>,
    pub commands: usize,
    pub stimuli_applied: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub seed: u64,
    pub mode: CommandMode,
    /// Effective configuration, start pose included.
    pub config: SessionConfig,
    pub path: PathSpec,
    pub ticks: u64,
    pub frames: Vec<FrameRecord>,
    pub events: Vec<StimulationEvent>,
    /// Simulator ground truth for each event.
    pub outcomes: Vec<Outcome>,
    pub stats: LinkStats,
    pub metrics: SessionMetrics,
    pub trace_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
}

impl SessionLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("log serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NavError> {
        serde_json::from_str(text).map_err(|e| NavError::Log(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionSummary {
    pub metrics: SessionMetrics,
    pub stats: LinkStats,
    pub locomotion: LocomotionSummary,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A simulated insect steered along a path through the command link.
///
/// Per tick: the scripted policy (if enabled) may issue a command, which is
/// encoded and sent into the link; frames due by now are decoded and started
/// as stimuli; then the simulator advances one tick.
pub struct TeleopSession {
    config: SessionConfig,
    mode: CommandMode,
    path: PathSpec,
    path_length: f64,
    sim: Simulator,
    link: Link,
    limiter: RateLimiter,
    tracker: ProgressTracker,
    frames: Vec<FrameRecord>,
    in_flight: std::collections::VecDeque<usize>,
    sum_sq_cross_track: f64,
    max_cross_track: f64,
    completed_at: Option<f64>,
}

impl TeleopSession {
    pub fn new(config: SessionConfig, path: PathSpec, mode: CommandMode) -> Result<Self, NavError> {
        let mut config = config;
        let [x, y] = path.start();
        config.sim.start = StartPose {
            x,
            y,
            heading: path.start_heading(),
        };
        if !(config.amplitude_v > 0.0) {
            return Err(NavError::Config(format!("amplitude must be > 0, got {}", config.amplitude_v)));
        }
        if !(config.max_duration_s > 0.0 && config.max_duration_s.is_finite()) {
            return Err(NavError::Config(format!("max duration must be > 0, got {}", config.max_duration_s)));
        }
        if !(config.policy.refractory_s >= 0.0) {
            return Err(NavError::Config("refractory must be >= 0".into()));
        }
        CommandFrame::new(StimKind::Left, config.amplitude_v, config.stimulus_duration_s)?;
        let sim = Simulator::new(config.sim)?;
        let link = Link::new(config.link)?;
        let mut tracker = ProgressTracker::new(&path);
        tracker.update(x, y, &path);
        let ct = cross_track_error(x, y, &path);
        Ok(Self {
            limiter: RateLimiter::new(config.policy.refractory_s),
            path_length: path.length(),
            config,
            mode,
            path,
            sim,
            link,
            tracker,
            frames: Vec::new(),
            in_flight: Default::default(),
            sum_sq_cross_track: ct * ct,
            max_cross_track: ct,
            completed_at: None,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn path(&self) -> &PathSpec {
        &self.path
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn time(&self) -> f64 {
        self.sim.time()
    }

    pub fn is_complete(&self) -> bool {
        self.completed_at.is_some()
    }

    /// True once the session should stop: time is up, or the course is
    /// done and the session stops on completion.
    pub fn is_finished(&self) -> bool {
        self.sim.tick() >= self.sim.ticks_for(self.config.max_duration_s)
            || (self.config.stop_on_completion && self.is_complete())
    }

    pub fn refractory_remaining(&self) -> f64 {
        self.limiter.remaining(self.time())
    }

    /// Sends `kind` now if the refractory period has passed.
    pub fn submit(&mut self, kind: StimKind) -> Result<(), NavError> {
        let t = self.time();
        if !self.limiter.try_fire(t) {
            return Err(NavError::Refractory {
                remaining_s: self.limiter.remaining(t),
            });
        }
        let frame = CommandFrame::new(kind, self.config.amplitude_v, self.config.stimulus_duration_s)?;
        let delivery = self.link.send(t, &frame);
        if delivery.is_some() {
            self.in_flight.push_back(self.frames.len());
        }
        self.frames.push(FrameRecord {
            sent_at: t,
            hex: frame.to_hex(),
            dropped: delivery.is_none(),
            delivered_at: None,
            applied_tick: None,
        });
        Ok(())
    }

    pub fn tick(&mut self) -> Snapshot {
        let t = self.time();
        if self.mode == CommandMode::Scripted && !self.is_complete() && self.limiter.ready(t) {
            let progress = self.tracker.progress();
            if let Some(kind) = scripted_policy(self.sim.state(), &self.path, progress, &self.config.policy) {
                self.submit(kind).expect("limiter was ready");
            }
        }
        for d in self.link.poll(t) {
            let idx = self.in_flight.pop_front().expect("every delivery was sent");
            self.frames[idx].delivered_at = Some(d.delivered_at);
            for frame in d.frames {
                if let Some(train) = frame.train(t) {
                    self.sim
                        .apply_stimulus(frame.kind, &train)
                        .expect("backpack trains have positive amplitude");
                    self.frames[idx].applied_tick = Some(self.sim.tick());
                }
            }
        }
        self.sim.step();

        let p = self.sim.state().pose;
        let ct = cross_track_error(p.x, p.y, &self.path);
        self.sum_sq_cross_track += ct * ct;
        self.max_cross_track = self.max_cross_track.max(ct);
        let progress = self.tracker.update(p.x, p.y, &self.path);
        if self.completed_at.is_none() {
            let [ex, ey] = self.path.end();
            if (p.x - ex).hypot(p.y - ey) <= self.config.completion_radius_mm
                && progress >= self.config.completion_progress * self.path_length
            {
                self.completed_at = Some(p.t);
            }
        }
        self.snapshot()
    }

    /// Ticks until [`is_finished`](Self::is_finished).
    pub fn run(&mut self) {
        while !self.is_finished() {
            self.tick();
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let s = self.sim.state();
        Snapshot {
            t: s.pose.t,
            x: s.pose.x,
            y: s.pose.y,
            heading: s.pose.heading,
            v: s.forward_speed,
            omega: s.angular_speed,
            stim: s.stimulus.map(|a| a.kind),
        }
    }

    pub fn status(&self) -> SessionStatus {
        let snapshot = self.snapshot();
        SessionStatus {
            snapshot,
            cross_track_mm: cross_track_error(snapshot.x, snapshot.y, &self.path),
            progress_mm: self.tracker.progress(),
            path_length_mm: self.path_length,
            complete: self.is_complete(),
            refractory_remaining_s: self.refractory_remaining(),
            link: self.link.stats(),
        }
    }

    pub fn metrics(&self) -> SessionMetrics {
        let n = self.sim.poses().len() as f64;
        SessionMetrics {
            duration_s: self.time(),
            rms_cross_track_mm: (self.sum_sq_cross_track / n).sqrt(),
            max_cross_track_mm: self.max_cross_track,
            progress_mm: self.tracker.progress(),
            path_length_mm: self.path_length,
            completed: self.is_complete(),
            completion_time_s: self.completed_at,
            commands: self.frames.len(),
            stimuli_applied: self.sim.events().len(),
        }
    }

    pub fn summary(&self) -> SessionSummary {
        let traj = self.sim.trajectory();
        SessionSummary {
            metrics: self.metrics(),
            stats: self.link.stats(),
            locomotion: summarize(&classify_all(&traj, self.sim.events())),
        }
    }

    pub fn trace_csv(&self) -> String {
        trace_csv(self.sim.poses())
    }

    pub fn log(&self) -> SessionLog {
        SessionLog {
            seed: self.config.sim.seed,
            mode: self.mode,
            config: self.config,
            path: self.path.clone(),
            ticks: self.sim.tick(),
            frames: self.frames.clone(),
            events: self.sim.events().to_vec(),
            outcomes: self.sim.outcomes().to_vec(),
            stats: self.link.stats(),
            metrics: self.metrics(),
            trace_sha256: sha256_hex(&self.trace_csv()),
            trace_file: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Replay {
    pub trace_csv: String,
    pub sha256: String,
    pub events: Vec<StimulationEvent>,
}

impl Replay {
    pub fn matches(&self, log: &SessionLog) -> bool {
        self.sha256 == log.trace_sha256 && self.events == log.events
    }
}

/// Re-runs the simulator from the log's config, starting each applied frame
/// at its recorded tick.
pub fn replay(log: &SessionLog) -> Result<Replay, NavError> {
    let mut applied = Vec::new();
    for (i, f) in log.frames.iter().enumerate() {
        if let Some(tick) = f.applied_tick {
            let bytes = hex::decode(&f.hex).map_err(|e| NavError::Log(format!("frame {i}: {e}")))?;
            let frame = decode(&bytes).map_err(|e| NavError::Log(format!("frame {i}: {e}")))?;
            applied.push((tick, frame));
        }
    }
    if applied.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(NavError::Log("applied ticks are not in order".into()));
    }
    let mut sim = Simulator::new(log.config.sim)?;
    let mut next = applied.iter().peekable();
    for _ in 0..log.ticks {
        while let Some((_, frame)) = next.next_if(|(tick, _)| *tick == sim.tick()) {
            let train = frame
                .train(sim.time())
                .ok_or_else(|| NavError::Log("applied frame has a null stimulus".into()))?;
            sim.apply_stimulus(frame.kind, &train)?;
        }
        sim.step();
    }
    if next.next().is_some() {
        return Err(NavError::Log("frame applied after the last tick".into()));
    }
    let csv = trace_csv(sim.poses());
    Ok(Replay {
        sha256: sha256_hex(&csv),
        trace_csv: csv,
        events: sim.events().to_vec(),
    })
}

/// Runs one unattended scripted session.
pub fn run_scripted(config: SessionConfig, path: &PathSpec, seed: u64) -> Result<TeleopSession, NavError> {
    let mut s = TeleopSession::new(config.with_seed(seed), path.clone(), CommandMode::Scripted)?;
    s.run();
    Ok(s)
}
