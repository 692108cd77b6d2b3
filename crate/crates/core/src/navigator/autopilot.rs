use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::PathSpec;
use super::session::{run_scripted, SessionConfig};
use super::NavError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub rms_cross_track_mm: f64,
    pub completed: bool,
    pub completion_time_s: Option<f64>,
    pub commands: usize,
    pub stimuli_applied: usize,
    pub trace_sha256_prefix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutopilotReport {
    pub n_seeds: usize,
    pub median_rms_cross_track_mm: f64,
    /// Fraction of seeds that finished the course within the time limit.
    pub completion_rate: f64,
    pub max_duration_s: f64,
    pub seeds: Vec<SeedResult>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Scripted sessions for every seed, in parallel.
pub fn autopilot(config: SessionConfig, path: &PathSpec, seeds: &[u64]) -> Result<AutopilotReport, NavError> {
    let results: Vec<SeedResult> = seeds
        .par_iter()
        .map(|&seed| {
            let s = run_scripted(config, path, seed)?;
            let m = s.metrics();
            let sha = super::sha256_hex(&s.trace_csv());
            Ok(SeedResult {
                seed,
                rms_cross_track_mm: m.rms_cross_track_mm,
                completed: m.completed,
                completion_time_s: m.completion_time_s,
                commands: m.commands,
                stimuli_applied: m.stimuli_applied,
                trace_sha256_prefix: u64::from_str_radix(&sha[..16], 16).expect("hex digest"),
            })
        })
        .collect::<Result<_, NavError>>()?;
    let rms: Vec<f64> = results.iter().map(|r| r.rms_cross_track_mm).collect();
    let done = results.iter().filter(|r| r.completed).count();
    Ok(AutopilotReport {
        n_seeds: results.len(),
        median_rms_cross_track_mm: median(&rms),
        completion_rate: if results.is_empty() {
            0.0
        } else {
            done as f64 / results.len() as f64
        },
        max_duration_s: config.max_duration_s,
        seeds: results,
    })
}
