//! Neural-response analysis: artifact blanking, band-pass filtering,
//! threshold spike detection and stimulus-locked response statistics.
//!
//! [`sweep_analysis`] chains the steps for a voltage sweep recording:
//! blank 40 ms after every stimulus edge, filter 250-3000 Hz, detect spikes at
//! five robust noise deviations, count spikes in the 750 ms after every falling
//! edge, and summarise per amplitude.

mod blanking;
mod filter;
mod response;
mod spikes;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use blanking::{blank_artifacts, DEFAULT_BLANK_WINDOW};
pub use filter::{bandpass, butterworth_bandpass, Biquad, SosFilter};
pub use response::{
    count_responses, count_responses_with, Deviation, ResponseStats, DEFAULT_RESPONSE_WINDOW,
};
pub use spikes::{
    detect_spikes, detect_spikes_with, noise_sigma, DetectionParams, Polarity, SpikeTrain,
    GAUSSIAN_MAD_FACTOR,
};

use crate::signal::{SampledSignal, SignalError};
use crate::stimgen::{edges_of, EdgeList, StimulationSchedule};

#[derive(Debug, Error)]
pub enum NeuroError {
    #[error("window must be finite and > 0, got {0} s")]
    Window(f64),
    #[error("invalid band: {0}")]
    Band(String),
    #[error("spike detection needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("no falling edges to lock responses to")]
    NoStimuli,
    #[error("stimulus at {start} s lies outside the recording [{rec_start}, {rec_end}] s")]
    OutOfExtent {
        start: f64,
        rec_start: f64,
        rec_end: f64,
    },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Where the robust noise estimate is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScope {
    /// One estimate over the whole filtered recording.
    #[default]
    Recording,
    /// A separate estimate per stimulation epoch (onset to end of its
    /// counting window).
    Epoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub blank_window: f64,
    pub low_cut: f64,
    pub high_cut: f64,
    pub response_window: f64,
    pub detection: DetectionParams,
    pub noise_scope: NoiseScope,
    pub deviation: Deviation,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            blank_window: DEFAULT_BLANK_WINDOW,
            low_cut: 250.0,
            high_cut: 3000.0,
            response_window: DEFAULT_RESPONSE_WINDOW,
            detection: DetectionParams::default(),
            noise_scope: NoiseScope::Recording,
            deviation: Deviation::Population,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub stats: ResponseStats,
}

/// Runs blank, band-pass, detect and count for every amplitude group of a
/// schedule. Rows come back in ascending amplitude.
pub fn sweep_analysis(
    recording: &SampledSignal,
    schedule: &StimulationSchedule,
    params: &SweepParams,
) -> Result<Vec<SweepRow>, NeuroError> {
    let (rec_start, rec_end) = (recording.t0(), recording.end_time());
    for ev in schedule.events() {
        let start = ev.start_time();
        if start < rec_start || ev.train.end_time() > rec_end + 1.0 / recording.sample_rate() {
            return Err(NeuroError::OutOfExtent {
                start,
                rec_start,
                rec_end,
            });
        }
    }
    if schedule.is_empty() {
        return Err(NeuroError::NoStimuli);
    }

    let blanked = blank_artifacts(recording, &schedule.edges(), params.blank_window)?;
    let filtered = bandpass(&blanked, params.low_cut, params.high_cut)?;

    // spikes per event, so each count uses its own falling edges
    let per_event: Vec<(f64, EdgeList, SpikeTrain)> = match params.noise_scope {
        NoiseScope::Recording => {
            let spikes = detect_spikes_with(&filtered, &params.detection)?;
            schedule
                .events()
                .iter()
                .map(|ev| (ev.train.amplitude(), edges_of(&ev.train), spikes.clone()))
                .collect()
        }
        NoiseScope::Epoch => schedule
            .events()
            .par_iter()
            .map(|ev| {
                let stop = ev.train.end_time() + params.response_window;
                let epoch = filtered
                    .slice_time(ev.start_time(), stop)
                    .ok_or(NeuroError::TooShort(0))?;
                let spikes = detect_spikes_with(&epoch, &params.detection)?;
                Ok((ev.train.amplitude(), edges_of(&ev.train), spikes))
            })
            .collect::<Result<_, NeuroError>>()?,
    };

    let mut groups: BTreeMap<u64, (f64, Vec<usize>)> = BTreeMap::new();
    let counted: Vec<(f64, Vec<usize>)> = per_event
        .par_iter()
        .map(|(amp, edges, spikes)| {
            count_responses_with(spikes, edges, params.response_window, params.deviation)
                .map(|s| (*amp, s.per_stimulus_counts))
        })
        .collect::<Result<_, _>>()?;
    for (amp, counts) in counted {
        // amplitudes are non-negative, so the bit pattern orders like the value
        groups.entry(amp.to_bits()).or_insert((amp, Vec::new())).1.extend(counts);
    }
    Ok(groups
        .into_values()
        .map(|(amplitude, counts)| SweepRow {
            amplitude,
            stats: ResponseStats::from_counts(counts, params.deviation),
        })
        .collect())
}

/// `amplitude_v,mean_count,cv` with an empty `cv` cell when undefined.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("amplitude_v,mean_count,cv\n");
    for row in rows {
        let cv = row.stats.cv.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", row.amplitude, row.stats.mean_count, cv);
    }
    out
}
