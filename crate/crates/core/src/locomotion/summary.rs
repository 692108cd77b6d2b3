use serde::{Deserialize, Serialize};

use super::classify::{ClassificationResult, PROFILE_SPAN, PROFILE_STEP};
use crate::stimgen::StimKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bin_width_deg: f64,
    pub max_deg: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bin_width_deg: 10.0,
            max_deg: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Ascending bin edges; bin `i` is `[edges[i], edges[i + 1])`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Values at or beyond the last edge.
    pub overflow: usize,
}

impl Histogram {
    pub fn new(values: impl IntoIterator<Item = f64>, config: &HistogramConfig) -> Self {
        let bins = (config.max_deg / config.bin_width_deg).ceil().max(1.0) as usize;
        let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * config.bin_width_deg).collect();
        let mut counts = vec![0; bins];
        let mut overflow = 0;
        for v in values {
            let idx = (v / config.bin_width_deg).floor();
            if idx >= 0.0 && (idx as usize) < bins {
                counts[idx as usize] += 1;
            } else {
                overflow += 1;
            }
        }
        Self {
            edges,
            counts,
            overflow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub graded: usize,
    pub successes: usize,
    pub ungradeable: usize,
    /// `successes / graded`, absent when nothing was gradeable.
    pub success_rate: Option<f64>,
    /// Over successful events; turns only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_turn_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_turn_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub turn_histogram: Option<Histogram>,
    /// Mean velocity profile of successful events (deg/s toward the
    /// commanded side for turns, mm/s for ACCEL).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    /// Bin start relative to onset, seconds.
    pub t_offsets: Vec<f64>,
    pub mean: Vec<f64>,
    pub n_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocomotionSummary {
    pub left: KindStats,
    pub right: KindStats,
    pub accel: KindStats,
}

impl LocomotionSummary {
    pub fn kind(&self, kind: StimKind) -> &KindStats {
        match kind {
            StimKind::Left => &self.left,
            StimKind::Right => &self.right,
            StimKind::Accel => &self.accel,
        }
    }

    pub fn success_rate_left(&self) -> Option<f64> {
        self.left.success_rate
    }

    pub fn success_rate_right(&self) -> Option<f64> {
        self.right.success_rate
    }

    pub fn success_rate_accel(&self) -> Option<f64> {
        self.accel.success_rate
    }

    pub fn mean_turn_left(&self) -> Option<f64> {
        self.left.mean_turn_deg
    }

    pub fn mean_turn_right(&self) -> Option<f64> {
        self.right.mean_turn_deg
    }
}

pub fn summarize(results: &[ClassificationResult]) -> LocomotionSummary {
    summarize_with(results, &HistogramConfig::default())
}

pub fn summarize_with(results: &[ClassificationResult], hist: &HistogramConfig) -> LocomotionSummary {
    LocomotionSummary {
        left: kind_stats(results, StimKind::Left, hist),
        right: kind_stats(results, StimKind::Right, hist),
        accel: kind_stats(results, StimKind::Accel, hist),
    }
}

fn kind_stats(results: &[ClassificationResult], kind: StimKind, hist: &HistogramConfig) -> KindStats {
    let of_kind: Vec<&ClassificationResult> = results.iter().filter(|r| r.event.kind == kind).collect();
    let graded = of_kind.iter().filter(|r| r.is_gradeable()).count();
    let successes: Vec<&&ClassificationResult> = of_kind.iter().filter(|r| r.is_success()).collect();
    let success_rate = (graded > 0).then(|| successes.len() as f64 / graded as f64);

    let angles: Vec<f64> = successes.iter().filter_map(|r| r.turn_angle()).collect();
    let (mean_turn_deg, max_turn_deg, turn_histogram) = if kind.is_turn() {
        let mean = (!angles.is_empty()).then(|| angles.iter().sum::<f64>() / angles.len() as f64);
        let max = angles.iter().copied().reduce(f64::max);
        (mean, max, Some(Histogram::new(angles.iter().copied(), hist)))
    } else {
        (None, None, None)
    };

    let profiles: Vec<&Vec<f64>> = successes.iter().filter_map(|r| r.profile.as_ref()).collect();
    let profile = profiles.first().map(|first| {
        let mut mean = vec![0.0; first.len()];
        for p in &profiles {
            for (m, v) in mean.iter_mut().zip(p.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= profiles.len() as f64);
        ProfileCurve {
            t_offsets: (0..first.len())
                .map(|k| PROFILE_SPAN.0 + k as f64 * PROFILE_STEP)
                .collect(),
            mean,
            n_events: profiles.len(),
        }
    });

    KindStats {
        graded,
        successes: successes.len(),
        ungradeable: of_kind.len() - graded,
        success_rate,
        mean_turn_deg,
        max_turn_deg,
        turn_histogram,
        profile,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locomotion::classify::{Grade, StimulationEvent};

    fn result(kind: StimKind, success: bool, angle: Option<f64>) -> ClassificationResult {
        ClassificationResult {
            event: StimulationEvent::new(kind, 1.0, 1.0),
            grade: Some(Grade {
                success,
                pre_value: 0.0,
                during_value: 1.0,
                turn_angle: angle,
            }),
            profile: None,
        }
    }

    #[test]
    fn success_rate_of_field_trials() {
        let results: Vec<_> = (0..150)
            .map(|i| result(StimKind::Left, i < 121, Some(30.0)))
            .collect();
        let s = summarize(&results);
        let rate = s.success_rate_left().unwrap();
        assert!((rate - 0.8067).abs() < 1e-4);
        assert_eq!(s.left.successes, 121);
        assert_eq!(s.left.graded, 150);
        assert!(s.success_rate_right().is_none());
    }

    #[test]
    fn singleton_mean() {
        let s = summarize(&[result(StimKind::Left, true, Some(38.5))]);
        assert_eq!(s.mean_turn_left(), Some(38.5));
        assert_eq!(s.left.max_turn_deg, Some(38.5));
    }

    #[test]
    fn hand_binned_histogram() {
        let h = Histogram::new([5.0, 15.0, 15.0, 95.0], &HistogramConfig::default());
        assert_eq!(h.edges.len(), 13);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[1], 2);
        assert_eq!(h.counts[9], 1);
        assert_eq!(h.counts.iter().sum::<usize>(), 4);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
        let h = Histogram::new([130.0], &HistogramConfig::default());
        assert_eq!(h.overflow, 1);
    }

    #[test]
    fn ungradeable_events_are_excluded() {
        let mut results = vec![
            result(StimKind::Accel, true, None),
            result(StimKind::Accel, false, None),
        ];
        results.push(ClassificationResult {
            event: StimulationEvent::new(StimKind::Accel, 0.0, 1.0),
            grade: None,
            profile: None,
        });
        let s = summarize(&results);
        assert_eq!(s.accel.graded, 2);
        assert_eq!(s.accel.ungradeable, 1);
        assert_eq!(s.success_rate_accel(), Some(0.5));
        assert!(s.accel.turn_histogram.is_none());
    }

    #[test]
    fn failed_turns_do_not_enter_the_angle_mean() {
        let s = summarize(&[
            result(StimKind::Right, true, Some(40.0)),
            result(StimKind::Right, false, Some(2.0)),
        ]);
        assert_eq!(s.mean_turn_right(), Some(40.0));
    }
}
