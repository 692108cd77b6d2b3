use serde::{Deserialize, Serialize};

use super::spikes::SpikeTrain;
use super::NeuroError;
use crate::stimgen::EdgeList;

/// Default counting window after each falling edge.
pub const DEFAULT_RESPONSE_WINDOW: f64 = 0.750;

/// Spread measure used for the coefficient of variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviation {
    /// Divide by `n`: the repetitions are the whole set, not a sample.
    #[default]
    Population,
    /// Divide by `n - 1`.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseStats {
    pub per_stimulus_counts: Vec<usize>,
    pub mean_count: f64,
    /// `None` when the mean count is zero.
    pub cv: Option<f64>,
}

impl ResponseStats {
    pub fn from_counts(counts: Vec<usize>, deviation: Deviation) -> Self {
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<usize>() as f64 / n;
        let cv = if mean > 0.0 {
            let ss: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum();
            let denom = match deviation {
                Deviation::Population => n,
                Deviation::Sample => (n - 1.0).max(1.0),
            };
            Some((ss / denom).sqrt() / mean)
        } else {
            None
        };
        Self {
            per_stimulus_counts: counts,
            mean_count: mean,
            cv,
        }
    }
}

/// Counts spikes in `(edge, edge + window]` after every falling edge.
///
/// A window is cut short at the next falling edge so no spike is counted twice.
pub fn count_responses(
    spikes: &SpikeTrain,
    edges: &EdgeList,
    window: f64,
) -> Result<ResponseStats, NeuroError> {
    count_responses_with(spikes, edges, window, Deviation::Population)
}

pub fn count_responses_with(
    spikes: &SpikeTrain,
    edges: &EdgeList,
    window: f64,
    deviation: Deviation,
) -> Result<ResponseStats, NeuroError> {
    if !(window.is_finite() && window > 0.0) {
        return Err(NeuroError::Window(window));
    }
    if edges.falling.is_empty() {
        return Err(NeuroError::NoStimuli);
    }
    let times = &spikes.spike_times;
    let falling = &edges.falling;
    let counts = falling
        .iter()
        .enumerate()
        .map(|(k, &edge)| {
            let mut stop = edge + window;
            if let Some(&next) = falling.get(k + 1) {
                if next < stop {
                    stop = next;
                }
            }
            let lo = times.partition_point(|&t| t <= edge);
            let hi = times.partition_point(|&t| t <= stop);
            hi - lo
        })
        .collect();
    Ok(ResponseStats::from_counts(counts, deviation))
}
