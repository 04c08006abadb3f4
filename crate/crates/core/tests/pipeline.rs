use std::collections::BTreeSet;

use gfgroup_core::{
    classify_stillness, compute_group_metrics, generate, load_y4m, plan_group, plan_sequence,
    validate_plan, write_y4m, FrameFirstPassStats, FramePlane, FrameRate, FrameRole,
    GfGroupMetrics, PlannerConfig, StillnessThresholds, Structure, SynthKind, SynthSpec, Verdict,
    VideoSequence, DEFAULT_BUFFER_SLOTS,
};
use proptest::prelude::*;

fn synth(kind: SynthKind, frames: usize, amplitude: f64) -> VideoSequence {
    generate(
        &SynthSpec::new(kind, 64, 48, frames)
            .amplitude(amplitude)
            .seed(11),
    )
    .unwrap()
}

#[test]
fn static_sequence_plans_single_layer() {
    let out = plan_sequence(
        &synth(SynthKind::Static, 17, 0.0),
        &PlannerConfig::default(),
    )
    .unwrap();
    assert_eq!(out.len(), 1);
    let g = &out[0];
    assert_eq!(
        (
            g.metrics.zero_motion_accumulator,
            g.metrics.avg_pixel_error,
            g.metrics.avg_error_stdev
        ),
        (1.0, 0.0, 0.0)
    );
    assert_eq!(g.verdict, Verdict::Still);
    assert_eq!(g.plan.structure, Structure::SingleLayer);
}

#[test]
fn panning_sequence_plans_multilayer() {
    let out = plan_sequence(&synth(SynthKind::Pan, 17, 4.0), &PlannerConfig::default()).unwrap();
    assert_eq!(out.len(), 1);
    assert!(out[0].metrics.zero_motion_accumulator < 0.1);
    assert_eq!(out[0].verdict, Verdict::NonStill);
    assert_eq!(out[0].plan.structure, Structure::Multilayer);
}

#[test]
fn mixed_sequence_switches_structure() {
    // same seed: the pan starts from the static picture
    let still = synth(SynthKind::Static, 16, 0.0).into_frames();
    let pan = synth(SynthKind::Pan, 16, 4.0).into_frames();
    let seq = VideoSequence::new(
        still.into_iter().chain(pan).collect(),
        FrameRate::default(),
        "mixed",
    )
    .unwrap();
    let out = plan_sequence(&seq, &PlannerConfig::default()).unwrap();
    let got: Vec<_> = out.iter().map(|g| (g.verdict, g.plan.structure)).collect();
    assert_eq!(
        got,
        vec![
            (Verdict::Still, Structure::SingleLayer),
            (Verdict::NonStill, Structure::Multilayer)
        ]
    );
    assert_eq!(out[1].first_display_index, 17);
}

#[test]
fn stillness_like_regimes() {
    let noisy = plan_sequence(
        &synth(SynthKind::StaticNoise, 17, 2.0),
        &PlannerConfig::default(),
    )
    .unwrap();
    assert_eq!(noisy[0].verdict, Verdict::Still);
    let zoom = plan_sequence(&synth(SynthKind::Zoom, 17, 2.0), &PlannerConfig::default()).unwrap();
    assert_eq!(zoom[0].verdict, Verdict::NonStill);
    let cut = plan_sequence(&synth(SynthKind::Cut, 17, 0.0), &PlannerConfig::default()).unwrap();
    assert_eq!(cut[0].verdict, Verdict::NonStill);
}

#[test]
fn single_frame_sequence_is_rejected() {
    let seq = VideoSequence::new(
        vec![FramePlane::filled(16, 16, 0).unwrap()],
        FrameRate::default(),
        "",
    )
    .unwrap();
    assert!(plan_sequence(&seq, &PlannerConfig::default()).is_err());
}

#[test]
fn planning_is_deterministic() {
    let seq = synth(SynthKind::StaticNoise, 40, 3.0);
    let a =
        serde_json::to_string(&plan_sequence(&seq, &PlannerConfig::default()).unwrap()).unwrap();
    let b =
        serde_json::to_string(&plan_sequence(&seq, &PlannerConfig::default()).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn emitted_plans_satisfy_structural_invariants() {
    for l in 1..=16 {
        for verdict in [Verdict::Still, Verdict::NonStill] {
            let plan = plan_group(l, verdict).unwrap();
            let report = validate_plan(&plan, DEFAULT_BUFFER_SLOTS);
            assert!(report.passed(), "L={l} {verdict}\n{report}");

            let mut displays: Vec<usize> = plan
                .entries
                .iter()
                .filter(|e| e.role != FrameRole::Overlay)
                .map(|e| e.display_index)
                .collect();
            displays.sort_unstable();
            assert_eq!(displays, (1..=l).collect::<Vec<_>>());

            let anchors = plan
                .entries
                .iter()
                .filter(|e| e.role.is_backward_anchor())
                .count();
            match verdict {
                Verdict::Still => assert_eq!(anchors, 0),
                Verdict::NonStill if l >= 4 => assert!(anchors >= 1),
                Verdict::NonStill => {}
            }

            if verdict == Verdict::NonStill {
                let altref = plan
                    .entries
                    .iter()
                    .find(|e| e.role == FrameRole::Altref)
                    .unwrap();
                assert_eq!(altref.layer, 1);
                // every leaf sits below both enclosing anchors
                let coded: Vec<_> = plan.entries.iter().filter(|e| !e.show_existing).collect();
                for leaf in coded.iter().filter(|e| e.role == FrameRole::Regular) {
                    let left = coded
                        .iter()
                        .filter(|e| {
                            e.role != FrameRole::Regular && e.display_index < leaf.display_index
                        })
                        .max_by_key(|e| e.display_index);
                    let right = coded
                        .iter()
                        .filter(|e| {
                            e.role != FrameRole::Regular && e.display_index > leaf.display_index
                        })
                        .min_by_key(|e| e.display_index)
                        .unwrap();
                    assert!(leaf.layer > right.layer);
                    if let Some(left) = left {
                        assert!(leaf.layer > left.layer);
                    }
                }
            }
        }
    }
}

fn stats(pcnt: f64, sse: u64, stdev: f64) -> FrameFirstPassStats {
    FrameFirstPassStats {
        frame_index: 1,
        pcnt_zero_motion: pcnt,
        frame_sse: sse,
        zero_mv_sse_stdev: stdev,
        block_count: 12,
        inter_count: 12,
    }
}

fn frame_stats() -> impl Strategy<Value = FrameFirstPassStats> {
    (0.0f64..=1.0, 0u64..200_000, 0.0f64..5000.0).prop_map(|(p, s, d)| stats(p, s, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn y4m_round_trip_preserves_luma(
        w in 16usize..40,
        h in 16usize..40,
        n in 1usize..4,
        seed in any::<u64>(),
    ) {
        let frames = (0..n)
            .map(|f| FramePlane::from_fn(w, h, |x, y| {
                (gfgroup_core::synth::splitmix64(seed ^ (f * 10_000 + y * 100 + x) as u64) & 0xFF) as u8
            }).unwrap())
            .collect();
        let seq = VideoSequence::new(frames, FrameRate { num: 25, den: 1 }, "").unwrap();
        let mut bytes = Vec::new();
        let written = write_y4m(&seq, &mut bytes).unwrap();
        prop_assert_eq!(written, bytes.len());
        let back = load_y4m(&bytes[..]).unwrap();
        prop_assert_eq!(back, seq);
    }

    #[test]
    fn group_metrics_are_order_free(
        mut list in proptest::collection::vec(frame_stats(), 1..17),
        rotate in 0usize..16,
    ) {
        let a = compute_group_metrics(&list, 64 * 48).unwrap();
        list.reverse();
        let r = rotate % list.len();
        list.rotate_left(r);
        let b = compute_group_metrics(&list, 64 * 48).unwrap();
        prop_assert_eq!(a.zero_motion_accumulator, b.zero_motion_accumulator);
        prop_assert!((a.avg_pixel_error - b.avg_pixel_error).abs() <= 1e-9 * a.avg_pixel_error.max(1.0));
        prop_assert!((a.avg_error_stdev - b.avg_error_stdev).abs() <= 1e-9 * a.avg_error_stdev.max(1.0));
    }

    #[test]
    fn one_motion_frame_forces_non_still(mut list in proptest::collection::vec(frame_stats(), 1..16), at in 0usize..16) {
        let at = at % (list.len() + 1);
        list.insert(at, stats(0.0, 0, 0.0));
        let m = compute_group_metrics(&list, 64 * 48).unwrap();
        prop_assert_eq!(m.zero_motion_accumulator, 0.0);
        prop_assert_eq!(classify_stillness(&m, &StillnessThresholds::default()), Verdict::NonStill);
    }

    #[test]
    fn classification_is_monotone(
        zm in 0.0f64..=1.0, ape in 0.0f64..80.0, aes in 0.0f64..4000.0,
        dzm in 0.0f64..0.5, dape in 0.0f64..40.0, daes in 0.0f64..2000.0,
    ) {
        let t = StillnessThresholds::default();
        let m = GfGroupMetrics { interval: 16, zero_motion_accumulator: zm, avg_pixel_error: ape, avg_error_stdev: aes };
        if classify_stillness(&m, &t) == Verdict::Still {
            let better = GfGroupMetrics {
                zero_motion_accumulator: (zm + dzm).min(1.0),
                avg_pixel_error: (ape - dape).max(0.0),
                avg_error_stdev: (aes - daes).max(0.0),
                ..m
            };
            prop_assert_eq!(classify_stillness(&better, &t), Verdict::Still);
        }
    }
}

#[test]
fn live_reference_budget_holds_for_all_plans() {
    let worst = (1..=16)
        .flat_map(|l| [Verdict::Still, Verdict::NonStill].map(|v| (l, v)))
        .map(|(l, v)| validate_plan(&plan_group(l, v).unwrap(), DEFAULT_BUFFER_SLOTS).max_live_refs)
        .max()
        .unwrap();
    assert!(worst <= 8, "{worst}");
    let roles: BTreeSet<_> = plan_group(16, Verdict::NonStill)
        .unwrap()
        .entries
        .iter()
        .map(|e| e.role.as_str())
        .collect();
    assert!(roles.contains("EXTRA_ALTREF") && roles.contains("BWDREF"));
}
