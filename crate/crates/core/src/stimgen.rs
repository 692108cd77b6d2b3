//! Bipolar square-wave stimulation trains and schedules.
//!
//! A train alternates a positive phase and a negative phase. One cycle lasts
//! `2 * phase_width`; the positive phase occupies `duty_cycle` of it and the
//! negative phase the rest, scaled so that every complete cycle carries zero
//! net charge. At the usual 50 % duty both phases are `phase_width` long at
//! `±amplitude`. Cycles start with the positive phase and the waveform is cut
//! exactly at `duration`, even mid-phase.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::SampledSignal;

/// Minimum samples per phase accepted by [`sample_waveform`].
pub const MIN_SAMPLES_PER_PHASE: f64 = 4.0;

/// Backpack timers run on whole milliseconds.
const PHASE_STEPS_PER_S: f64 = 1000.0;

#[derive(Debug, Error, PartialEq)]
pub enum StimError {
    #[error("amplitude must be finite and >= 0, got {0} V")]
    Amplitude(f64),
    #[error("phase width must be finite and > 0, got {0} s")]
    PhaseWidth(f64),
    #[error("duty cycle must lie in (0, 1), got {0}")]
    Duty(f64),
    #[error("duration must be finite and > 0, got {0} s")]
    Duration(f64),
    #[error("start time must be finite and >= 0, got {0} s")]
    StartTime(f64),
    #[error("frequency {0} Hz does not map to a phase of at least 1 ms")]
    Frequency(f64),
    #[error(
        "sample rate {rate} Hz gives {per_phase:.2} samples per phase, need at least {MIN_SAMPLES_PER_PHASE}"
    )]
    Resolution { rate: f64, per_phase: f64 },
    #[error("sweep range is inverted: v_min {v_min} > v_max {v_max}")]
    InvertedRange { v_min: f64, v_max: f64 },
    #[error("sweep step must be > 0, got {0}")]
    Step(f64),
    #[error("repeat count must be >= 1")]
    Repeats,
    #[error("schedule events must be ordered by start time (event {0})")]
    Unordered(usize),
    #[error("events {0} and {1} overlap on the same channel")]
    Overlap(usize, usize),
}

/// Output channel of the backpack, which is also the stimulation type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StimKind {
    /// Left antenna, elicits a left (counterclockwise) turn.
    #[serde(rename = "LEFT")]
    Left,
    /// Right antenna, elicits a right (clockwise) turn.
    #[serde(rename = "RIGHT")]
    Right,
    /// Abdominal electrode, elicits forward acceleration.
    #[serde(rename = "ACCEL")]
    Accel,
}

impl StimKind {
    pub const ALL: [StimKind; 3] = [StimKind::Left, StimKind::Right, StimKind::Accel];

    pub fn is_turn(self) -> bool {
        !matches!(self, StimKind::Accel)
    }

    /// The kind obtained by reflecting the arena across the x axis.
    pub fn mirrored(self) -> Self {
        match self {
            StimKind::Left => StimKind::Right,
            StimKind::Right => StimKind::Left,
            StimKind::Accel => StimKind::Accel,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StimKind::Left => "LEFT",
            StimKind::Right => "RIGHT",
            StimKind::Accel => "ACCEL",
        }
    }
}

impl std::fmt::Display for StimKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StimKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "LEFT" | "L" => Ok(StimKind::Left),
            "RIGHT" | "R" => Ok(StimKind::Right),
            "ACCEL" | "A" | "FORWARD" => Ok(StimKind::Accel),
            other => Err(format!("unknown stimulation kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimulusTrain {
    amplitude: f64,
    phase_width: f64,
    duty_cycle: f64,
    duration: f64,
    start_time: f64,
}

impl StimulusTrain {
    pub fn new(
        amplitude: f64,
        phase_width: f64,
        duty_cycle: f64,
        duration: f64,
        start_time: f64,
    ) -> Result<Self, StimError> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(StimError::Amplitude(amplitude));
        }
        if !(phase_width.is_finite() && phase_width > 0.0) {
            return Err(StimError::PhaseWidth(phase_width));
        }
        if !(duty_cycle > 0.0 && duty_cycle < 1.0) {
            return Err(StimError::Duty(duty_cycle));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(StimError::Duration(duration));
        }
        if !(start_time.is_finite() && start_time >= 0.0) {
            return Err(StimError::StartTime(start_time));
        }
        Ok(Self {
            amplitude,
            phase_width,
            duty_cycle,
            duration,
            start_time,
        })
    }

    /// The locomotion stimulus: 4 V, 12 ms phases, 50 % duty, 1 s.
    pub fn locomotion(start_time: f64) -> Self {
        Self::new(4.0, 0.012, 0.5, 1.0, start_time).expect("constant parameters are valid")
    }

    /// A single 1 Hz, 50 % duty bipolar pulse as used for neural recordings.
    pub fn single_pulse(amplitude: f64, start_time: f64) -> Result<Self, StimError> {
        Self::new(amplitude, 0.5, 0.5, 1.0, start_time)
    }

    /// Builds a 50 % duty train from a nominal frequency.
    ///
    /// The phase width is `1 / (2 f)` rounded to whole milliseconds, which is
    /// the backpack timer resolution. A nominal 42 Hz therefore becomes a
    /// 12 ms phase whose exact frequency is 41.67 Hz.
    pub fn from_frequency(
        amplitude: f64,
        frequency: f64,
        duration: f64,
        start_time: f64,
    ) -> Result<Self, StimError> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(StimError::Frequency(frequency));
        }
        let steps = (0.5 / frequency * PHASE_STEPS_PER_S).round();
        if steps < 1.0 {
            return Err(StimError::Frequency(frequency));
        }
        Self::new(amplitude, steps / PHASE_STEPS_PER_S, 0.5, duration, start_time)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn phase_width(&self) -> f64 {
        self.phase_width
    }

    pub fn duty_cycle(&self) -> f64 {
        self.duty_cycle
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }

    pub fn period(&self) -> f64 {
        2.0 * self.phase_width
    }

    pub fn frequency(&self) -> f64 {
        1.0 / self.period()
    }

    pub fn with_start(mut self, start_time: f64) -> Self {
        self.start_time = start_time;
        self
    }

    /// Level of the negative phase. Equals `-amplitude` at 50 % duty.
    pub fn negative_level(&self) -> f64 {
        -self.amplitude * self.duty_cycle / (1.0 - self.duty_cycle)
    }

    /// Waveform value at `t` seconds after the start of the train; zero outside it.
    pub fn value_at(&self, rel_t: f64) -> f64 {
        if rel_t < 0.0 || rel_t >= self.duration {
            return 0.0;
        }
        let cycles = rel_t / self.period();
        let k = (cycles + 1e-9).floor();
        if cycles - k < self.duty_cycle - 1e-9 {
            self.amplitude
        } else {
            self.negative_level()
        }
    }

    fn cycle_count_bound(&self) -> usize {
        (self.duration / self.period()).ceil() as usize + 1
    }

    fn edge_tol(&self) -> f64 {
        1e-12 * self.duration.max(1.0)
    }
}

/// Edge times of a train in absolute seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeList {
    /// Transitions into the positive phase, including the train onset.
    pub rising: Vec<f64>,
    /// Transitions into the negative phase.
    pub falling: Vec<f64>,
}

impl EdgeList {
    /// All edges merged in ascending order.
    pub fn all(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rising.iter().chain(&self.falling).copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn extend(&mut self, other: &EdgeList) {
        self.rising.extend_from_slice(&other.rising);
        self.falling.extend_from_slice(&other.falling);
        self.rising.sort_by(f64::total_cmp);
        self.falling.sort_by(f64::total_cmp);
    }

    pub fn is_empty(&self) -> bool {
        self.rising.is_empty() && self.falling.is_empty()
    }
}

pub fn edges_of(train: &StimulusTrain) -> EdgeList {
    let period = train.period();
    let tol = train.edge_tol();
    let mut edges = EdgeList::default();
    for k in 0..train.cycle_count_bound() {
        let cycle_start = k as f64 * period;
        if cycle_start >= train.duration - tol {
            break;
        }
        edges.rising.push(train.start_time + cycle_start);
        let fall = cycle_start + train.duty_cycle * period;
        if fall < train.duration - tol {
            edges.falling.push(train.start_time + fall);
        }
    }
    edges
}

/// Samples `train` at `sample_rate`. The signal starts at the train onset and
/// holds `round(duration * sample_rate)` samples.
pub fn sample_waveform(train: &StimulusTrain, sample_rate: f64) -> Result<SampledSignal, StimError> {
    let per_phase = sample_rate * train.phase_width;
    if !(sample_rate.is_finite() && per_phase >= MIN_SAMPLES_PER_PHASE * (1.0 - 1e-9)) {
        return Err(StimError::Resolution {
            rate: sample_rate,
            per_phase,
        });
    }
    let n = ((train.duration * sample_rate).round() as usize).max(1);
    let samples = (0..n)
        .map(|i| train.value_at(i as f64 / sample_rate))
        .collect();
    Ok(SampledSignal::new(sample_rate, samples, train.start_time)
        .expect("rate and sample count checked above"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledStimulus {
    pub channel: StimKind,
    pub train: StimulusTrain,
}

impl ScheduledStimulus {
    pub fn start_time(&self) -> f64 {
        self.train.start_time()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StimulationSchedule {
    events: Vec<ScheduledStimulus>,
}

impl StimulationSchedule {
    pub fn new(events: Vec<ScheduledStimulus>) -> Result<Self, StimError> {
        for (i, pair) in events.windows(2).enumerate() {
            if pair[1].start_time() < pair[0].start_time() {
                return Err(StimError::Unordered(i + 1));
            }
        }
        for (i, a) in events.iter().enumerate() {
            let clash = events[i + 1..]
                .iter()
                .position(|b| b.channel == a.channel && b.start_time() < a.train.end_time());
            if let Some(j) = clash {
                return Err(StimError::Overlap(i, i + 1 + j));
            }
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[ScheduledStimulus] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Edges of every event, merged.
    pub fn edges(&self) -> EdgeList {
        let mut all = EdgeList::default();
        for ev in &self.events {
            all.rising.extend(edges_of(&ev.train).rising);
            all.falling.extend(edges_of(&ev.train).falling);
        }
        all.rising.sort_by(f64::total_cmp);
        all.falling.sort_by(f64::total_cmp);
        all
    }

    pub fn from_json(text: &str) -> Result<Self, ScheduleFileError> {
        let file: ScheduleFile = serde_json::from_str(text)?;
        let events = file
            .events
            .into_iter()
            .map(|e| {
                Ok(ScheduledStimulus {
                    channel: e.channel,
                    train: StimulusTrain::new(
                        e.amplitude_v,
                        e.phase_width_s,
                        e.duty,
                        e.duration_s,
                        e.t_start_s,
                    )?,
                })
            })
            .collect::<Result<Vec<_>, StimError>>()?;
        Ok(Self::new(events)?)
    }

    pub fn to_json(&self) -> String {
        let file = ScheduleFile {
            events: self
                .events
                .iter()
                .map(|e| ScheduleFileEvent {
                    t_start_s: e.train.start_time(),
                    channel: e.channel,
                    amplitude_v: e.train.amplitude(),
                    phase_width_s: e.train.phase_width(),
                    duty: e.train.duty_cycle(),
                    duration_s: e.train.duration(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("schedule serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ScheduleFileError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Error)]
pub enum ScheduleFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("schedule JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] StimError),
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleFile {
    events: Vec<ScheduleFileEvent>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleFileEvent {
    t_start_s: f64,
    channel: StimKind,
    amplitude_v: f64,
    phase_width_s: f64,
    duty: f64,
    duration_s: f64,
}

/// Ascending amplitude sweep of single 1 Hz pulses, each amplitude repeated
/// `repeats` times back to back, starting at t = 0 with one pulse per second.
pub fn voltage_sweep_schedule(
    v_min: f64,
    v_max: f64,
    step: f64,
    repeats: usize,
) -> Result<StimulationSchedule, StimError> {
    voltage_sweep_schedule_spaced(v_min, v_max, step, repeats, 0.0, 1.0)
}

/// [`voltage_sweep_schedule`] with an explicit onset and inter-pulse interval.
pub fn voltage_sweep_schedule_spaced(
    v_min: f64,
    v_max: f64,
    step: f64,
    repeats: usize,
    first_onset: f64,
    interval: f64,
) -> Result<StimulationSchedule, StimError> {
    if !(v_min.is_finite() && v_min >= 0.0) {
        return Err(StimError::Amplitude(v_min));
    }
    if !v_max.is_finite() {
        return Err(StimError::Amplitude(v_max));
    }
    if v_min > v_max {
        return Err(StimError::InvertedRange { v_min, v_max });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(StimError::Step(step));
    }
    if repeats == 0 {
        return Err(StimError::Repeats);
    }
    let levels = ((v_max - v_min) / step + 1e-9).floor() as usize + 1;
    let mut events = Vec::with_capacity(levels * repeats);
    for level in 0..levels {
        // avoid accumulating the step: 0.5 + 9 * 0.5 must print as 5
        let amplitude = round_to_nano(v_min + level as f64 * step);
        for _ in 0..repeats {
            let onset = first_onset + events.len() as f64 * interval;
            events.push(ScheduledStimulus {
                channel: StimKind::Right,
                train: StimulusTrain::single_pulse(amplitude, onset)?,
            });
        }
    }
    StimulationSchedule::new(events)
}

fn round_to_nano(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}
