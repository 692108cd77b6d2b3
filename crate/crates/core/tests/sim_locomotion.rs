use insectbench_core::locomotion::{classify, classify_all, read_trace, summarize, trace_csv, EventsFile, StimulationEvent};
use insectbench_core::sim::{run_session, single_event_session, SimConfig};
use insectbench_core::stimgen::{ScheduledStimulus, StimKind, StimulationSchedule, StimulusTrain};
use proptest::prelude::*;

fn binomial_band(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn accel_success_rate_matches_model() {
    let n = 600u64;
    let ok = (0..n)
        .filter(|&seed| {
            let out = single_event_session(SimConfig::default().with_seed(seed), StimKind::Accel, 1.5, 5.0).unwrap();
            classify(&out.trajectory, &out.events[0]).is_success()
        })
        .count();
    let rate = ok as f64 / n as f64;
    assert!((rate - 0.740).abs() < binomial_band(0.740, n), "{rate}");
}

#[test]
fn hidden_outcome_agrees_with_grading_for_accel() {
    // the grader sees only the trace, the simulator knows the truth; with a
    // clear 60 mm/s response they must agree on every event
    for seed in 0..100 {
        let out = single_event_session(SimConfig::default().with_seed(seed), StimKind::Accel, 1.5, 5.0).unwrap();
        let graded = classify(&out.trajectory, &out.events[0]);
        assert_eq!(graded.is_success(), out.outcomes[0].success, "seed {seed}");
    }
}

#[test]
fn csv_trace_round_trip_preserves_grading() {
    let schedule = StimulationSchedule::new(
        [(StimKind::Left, 1.0), (StimKind::Right, 4.0), (StimKind::Accel, 7.0)]
            .into_iter()
            .map(|(channel, t)| ScheduledStimulus {
                channel,
                train: StimulusTrain::locomotion(t),
            })
            .collect(),
    )
    .unwrap();
    let out = run_session(SimConfig::default().with_seed(11), &schedule, 10.0).unwrap();
    let text = trace_csv(out.trajectory.poses());
    let loaded = read_trace(text.as_bytes()).unwrap();
    assert!(loaded.gaps.is_empty());
    assert_eq!(loaded.trajectory.poses(), out.trajectory.poses());

    let events = EventsFile::from_json(&EventsFile { events: out.events.clone() }.to_json()).unwrap();
    assert_eq!(
        classify_all(&loaded.trajectory, &events.events),
        classify_all(&out.trajectory, &out.events)
    );
    let summary = summarize(&classify_all(&out.trajectory, &out.events));
    assert_eq!(summary.left.graded + summary.left.ungradeable, 1);
    assert_eq!(summary.accel.graded + summary.accel.ungradeable, 1);
}

#[test]
fn stimuli_past_the_session_end_are_not_applied() {
    let schedule = StimulationSchedule::new(vec![ScheduledStimulus {
        channel: StimKind::Left,
        train: StimulusTrain::locomotion(20.0),
    }])
    .unwrap();
    let out = run_session(SimConfig::default(), &schedule, 5.0).unwrap();
    assert!(out.events.is_empty());
    assert_eq!(out.trajectory.len(), 501);
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = SimConfig {
        tick_rate: 0.0,
        ..SimConfig::default()
    };
    assert!(single_event_session(cfg, StimKind::Left, 1.0, 3.0).is_err());
    let mut cfg = SimConfig::default();
    cfg.params.p_turn_success = 1.5;
    assert!(single_event_session(cfg, StimKind::Left, 1.0, 3.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn grading_is_time_shift_invariant(seed in 0u64..10_000, kind_idx in 0usize..3, shift in -50.0f64..50.0) {
        let kind = [StimKind::Left, StimKind::Right, StimKind::Accel][kind_idx];
        let out = single_event_session(SimConfig::default().with_seed(seed), kind, 1.5, 5.0).unwrap();
        // shift by whole ticks so the sample grid stays aligned
        let shift = (shift * 100.0).round() / 100.0;
        let moved: Vec<_> = out.trajectory.poses().iter().map(|p| {
            let mut q = *p;
            q.t += shift;
            q
        }).collect();
        let moved = insectbench_core::locomotion::Trajectory::new(moved).unwrap();
        let a = classify(&out.trajectory, &out.events[0]);
        let b = classify(&moved, &out.events[0].shifted(shift));
        prop_assert_eq!(a.is_success(), b.is_success());
        prop_assert_eq!(a.is_gradeable(), b.is_gradeable());
        if let (Some(x), Some(y)) = (a.turn_angle(), b.turn_angle()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn mirrored_session_mirrors_grading(seed in 0u64..10_000, left in any::<bool>()) {
        let kind = if left { StimKind::Left } else { StimKind::Right };
        let cfg = SimConfig::default().with_seed(seed);
        let a = single_event_session(cfg, kind, 1.5, 5.0).unwrap();
        let b = single_event_session(cfg.mirrored(), kind.mirrored(), 1.5, 5.0).unwrap();
        let ev: StimulationEvent = b.events[0];
        let ra = classify(&a.trajectory, &a.events[0]);
        let rb = classify(&b.trajectory, &ev);
        prop_assert_eq!(ra.is_success(), rb.is_success());
    }
}
