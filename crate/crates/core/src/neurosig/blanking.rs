use super::NeuroError;
use crate::signal::SampledSignal;
use crate::stimgen::EdgeList;

/// Default artifact window after each stimulus edge.
pub const DEFAULT_BLANK_WINDOW: f64 = 0.040;

/// Zeroes every sample whose time lies in `[edge, edge + window)` for any
/// rising or falling edge. Edges outside the signal extent are ignored.
pub fn blank_artifacts(
    signal: &SampledSignal,
    edges: &EdgeList,
    window: f64,
) -> Result<SampledSignal, NeuroError> {
    if !(window.is_finite() && window > 0.0) {
        return Err(NeuroError::Window(window));
    }
    let mut out = signal.samples().to_vec();
    let (start, end) = (signal.t0(), signal.end_time());
    for &edge in edges.rising.iter().chain(&edges.falling) {
        if edge < start || edge > end {
            continue;
        }
        let stop = edge + window;
        let first = signal.index_at_or_after(edge);
        for (i, v) in out.iter_mut().enumerate().skip(first) {
            if signal.time_at(i) >= stop {
                break;
            }
            *v = 0.0;
        }
    }
    Ok(signal.with_samples(out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn constant(rate: f64, n: usize) -> SampledSignal {
        SampledSignal::new(rate, vec![1.0; n], 0.0).unwrap()
    }

    #[test]
    fn single_edge_zeroes_forty_samples() {
        let sig = constant(1000.0, 1000);
        let edges = EdgeList {
            rising: vec![0.1],
            falling: vec![],
        };
        let out = blank_artifacts(&sig, &edges, 0.040).unwrap();
        let zeroed: Vec<usize> = (0..out.len()).filter(|&i| out.samples()[i] == 0.0).collect();
        assert_eq!(zeroed, (100..140).collect::<Vec<_>>());
    }

    #[test]
    fn no_edges_is_identity() {
        let sig = constant(1000.0, 200);
        let out = blank_artifacts(&sig, &EdgeList::default(), 0.040).unwrap();
        assert_eq!(out, sig);
    }

    #[test]
    fn overlapping_windows_are_a_union() {
        let sig = constant(1000.0, 1000);
        let edges = EdgeList {
            rising: vec![0.200],
            falling: vec![0.210],
        };
        let out = blank_artifacts(&sig, &edges, 0.040).unwrap();
        let oracle: BTreeSet<usize> = (200..240).chain(210..250).collect();
        let zeroed: BTreeSet<usize> = (0..out.len()).filter(|&i| out.samples()[i] == 0.0).collect();
        assert_eq!(zeroed, oracle);
    }

    #[test]
    fn edges_outside_extent_are_ignored() {
        let sig = SampledSignal::new(1000.0, vec![1.0; 100], 1.0).unwrap();
        let edges = EdgeList {
            rising: vec![0.99, 5.0],
            falling: vec![],
        };
        assert_eq!(blank_artifacts(&sig, &edges, 0.040).unwrap(), sig);
        assert!(blank_artifacts(&sig, &edges, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn blanking_is_idempotent(xs in prop::collection::vec(-5.0f64..5.0, 50..400),
                                  edges in prop::collection::vec(0.0f64..0.4, 0..6),
                                  window in 0.001f64..0.05) {
            let sig = SampledSignal::new(1000.0, xs, 0.0).unwrap();
            let edges = EdgeList { rising: edges, falling: vec![] };
            let once = blank_artifacts(&sig, &edges, window).unwrap();
            let twice = blank_artifacts(&once, &edges, window).unwrap();
            prop_assert_eq!(&once, &twice);
            for i in 0..sig.len() {
                let t = sig.time_at(i);
                let inside = edges.rising.iter().any(|&e| t >= e && t < e + window && e <= sig.end_time());
                if inside {
                    prop_assert_eq!(once.samples()[i], 0.0);
                } else {
                    prop_assert_eq!(once.samples()[i], sig.samples()[i]);
                }
            }
        }
    }
}
