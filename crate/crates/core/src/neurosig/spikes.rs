//! Robust-threshold spike detection.
//!
//! The noise deviation is estimated as `median(|x|) / 0.6745`, which equals
//! the standard deviation for zero-mean Gaussian noise, and spikes are
//! threshold crossings at five times that estimate.

use serde::{Deserialize, Serialize};

use super::NeuroError;
use crate::signal::SampledSignal;

/// `median(|x|)` of a standard normal variable.
pub const GAUSSIAN_MAD_FACTOR: f64 = 0.6745;

/// Which excursions count as crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// `|x| > thr`, multiunit activity of either sign.
    #[default]
    Absolute,
    /// `x < -thr` only.
    Negative,
    /// `x > thr` only.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    pub threshold_factor: f64,
    /// Crossings closer than this to the last accepted spike are merged into it.
    pub refractory: f64,
    pub polarity: Polarity,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            threshold_factor: 5.0,
            refractory: 0.001,
            polarity: Polarity::Absolute,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub spike_times: Vec<f64>,
    pub threshold_used: f64,
    pub sigma_hat: f64,
}

impl SpikeTrain {
    pub fn len(&self) -> usize {
        self.spike_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spike_times.is_empty()
    }
}

/// Median of `|x|` divided by 0.6745.
pub fn noise_sigma(samples: &[f64]) -> f64 {
    let mut abs: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    median_in_place(&mut abs) / GAUSSIAN_MAD_FACTOR
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    let mid = n / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lower_max + upper) / 2.0
    }
}

pub fn detect_spikes(signal: &SampledSignal) -> Result<SpikeTrain, NeuroError> {
    detect_spikes_with(signal, &DetectionParams::default())
}

pub fn detect_spikes_with(
    signal: &SampledSignal,
    params: &DetectionParams,
) -> Result<SpikeTrain, NeuroError> {
    if signal.len() < 2 {
        return Err(NeuroError::TooShort(signal.len()));
    }
    let sigma_hat = noise_sigma(signal.samples());
    let threshold = params.threshold_factor * sigma_hat;
    let spike_times = crossings(signal, threshold, params);
    Ok(SpikeTrain {
        spike_times,
        threshold_used: threshold,
        sigma_hat,
    })
}

/// Upward crossings of `threshold` merged within the refractory window.
pub(crate) fn crossings(signal: &SampledSignal, threshold: f64, params: &DetectionParams) -> Vec<f64> {
    let above = |v: f64| match params.polarity {
        Polarity::Absolute => v.abs() > threshold,
        Polarity::Negative => -v > threshold,
        Polarity::Positive => v > threshold,
    };
    let mut times = Vec::new();
    let mut last_spike = f64::NEG_INFINITY;
    let mut was_above = false;
    for (i, &v) in signal.samples().iter().enumerate() {
        let now_above = above(v);
        if now_above && !was_above {
            let t = signal.time_at(i);
            if t - last_spike >= params.refractory {
                times.push(t);
                last_spike = t;
            }
        }
        was_above = now_above;
    }
    times
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn hand_evaluated_threshold() {
        let sig = SampledSignal::new(1000.0, vec![1.0, -2.0, 3.0, -4.0, 5.0], 0.0).unwrap();
        let st = detect_spikes(&sig).unwrap();
        assert!((st.sigma_hat - 3.0 / 0.6745).abs() < 1e-12);
        assert!((st.sigma_hat - 4.448).abs() < 1e-3);
        assert!((st.threshold_used - 22.24).abs() < 0.01);
        assert!(st.is_empty());
    }

    #[test]
    fn all_zero_signal() {
        let sig = SampledSignal::new(1000.0, vec![0.0; 50], 0.0).unwrap();
        let st = detect_spikes(&sig).unwrap();
        assert_eq!(st.threshold_used, 0.0);
        assert!(st.is_empty());
    }

    #[test]
    fn single_sample_is_rejected() {
        let sig = SampledSignal::new(1000.0, vec![1.0], 0.0).unwrap();
        assert!(matches!(detect_spikes(&sig), Err(NeuroError::TooShort(1))));
    }

    #[test]
    fn even_length_median_averages_middle_pair() {
        assert_eq!(median_in_place(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median_in_place(&mut [7.0]), 7.0);
    }

    #[test]
    fn refractory_merges_close_crossings() {
        let mut x = vec![0.1; 200];
        // two excursions 0.5 ms apart and one 5 ms later, 10 kHz
        x[50] = 10.0;
        x[55] = -10.0;
        x[100] = 10.0;
        let sig = SampledSignal::new(10_000.0, x, 0.0).unwrap();
        let st = detect_spikes(&sig).unwrap();
        assert_eq!(st.spike_times.len(), 2);
        assert!((st.spike_times[0] - 0.005).abs() < 1e-12);
        assert!((st.spike_times[1] - 0.010).abs() < 1e-12);

        let neg = detect_spikes_with(
            &sig,
            &DetectionParams {
                polarity: Polarity::Negative,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(neg.spike_times.len(), 1);
        assert!((neg.spike_times[0] - 0.0055).abs() < 1e-12);
    }

    #[test]
    fn gaussian_sigma_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for sigma in [0.5, 1.0, 3.0] {
            let x: Vec<f64> = (0..20_000)
                .map(|_| { let z: f64 = StandardNormal.sample(&mut rng); sigma * z })
                .collect();
            let est = noise_sigma(&x);
            assert!((est / sigma - 1.0).abs() < 0.05, "{est} vs {sigma}");
        }
    }

    proptest! {
        #[test]
        fn threshold_is_scale_equivariant(xs in prop::collection::vec(-3.0f64..3.0, 20..300), k in 0.1f64..50.0) {
            let sig = SampledSignal::new(2000.0, xs.clone(), 0.0).unwrap();
            let scaled = SampledSignal::new(2000.0, xs.iter().map(|v| v * k).collect(), 0.0).unwrap();
            let a = detect_spikes(&sig).unwrap();
            let b = detect_spikes(&scaled).unwrap();
            prop_assert!((b.sigma_hat - k * a.sigma_hat).abs() <= 1e-9 * b.sigma_hat.max(1e-12));
            prop_assert!((b.threshold_used - 5.0 * b.sigma_hat).abs() <= 1e-12 * b.threshold_used.max(1.0));
            prop_assert_eq!(a.spike_times, b.spike_times);
        }
    }
}
