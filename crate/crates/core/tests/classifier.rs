mod common;

use common::{fixture_map, t1};
use pwlmap::classifier::{
    attractor_distance, classify_attractor, line_support_test, lyapunov_max, omega_limit_sample, OmegaLimit, Verdict,
};
use pwlmap::Point;

fn verdict_of(name: &str, ic: Option<Point>) -> Verdict {
    let (m, cfg) = fixture_map(name);
    let ic = ic.unwrap_or(cfg.ic);
    classify_attractor(&m, &ic, &cfg.thresholds.classify_options())
        .unwrap_or_else(|e| panic!("{name}: {e}"))
        .verdict
}

#[test]
fn fixture_verdicts_are_stable() {
    let table = [
        ("t1_two_wqa", Verdict::Wqa),
        ("t1_tau_plane", Verdict::Wqa),
        ("t1_segment_attractor", Verdict::SegmentCircle),
        ("t1_quasiperiodic_segments", Verdict::SegmentCircle),
        ("t1_degenerate_left_tau_plane", Verdict::FixedPoint),
        ("t2_segment_on_eigenvector", Verdict::SegmentCircle),
        ("t3_ghost_then_divergence", Verdict::Divergent),
        ("t3_wqa_saddle", Verdict::Wqa),
        ("t9_conservative_five_cycles", Verdict::Unresolved),
        ("t9_invariant_curves", Verdict::Unresolved),
        ("t1_center_right_piece", Verdict::Unresolved),
    ];
    for (name, want) in table {
        assert_eq!(verdict_of(name, None), want, "{name}");
    }
}

#[test]
fn both_coexisting_attractors_are_wqa_and_distinct() {
    let (m, cfg) = fixture_map("t1_two_wqa");
    let opts = cfg.thresholds.classify_options();
    let mut samples = Vec::new();
    for ic in [Point::xy(0.1, 0.1), Point::xy(2.0, -4.0)] {
        let c = classify_attractor(&m, &ic, &opts).unwrap();
        assert_eq!(c.verdict, Verdict::Wqa);
        assert!(c.evidence.lyapunov.unwrap().abs() < 0.1);
        match omega_limit_sample(&m, &ic, &opts).unwrap() {
            OmegaLimit::Sample(s) => samples.push(s),
            other => panic!("{other:?}"),
        }
    }
    assert!(attractor_distance(&samples[0], &samples[1]).unwrap() > 0.1);
    assert!(line_support_test(&samples[0], &opts).is_none());
}

#[test]
fn spiral_near_the_origin_converges_beside_an_attractor() {
    assert_eq!(
        verdict_of("t1_fixed_point_and_wqa", Some(Point::xy(0.01, 0.0))),
        Verdict::FixedPoint
    );
}

#[test]
fn segment_attractor_rotates_at_the_closed_form_rate() {
    let (m, cfg) = fixture_map("t1_segment_attractor");
    let c = classify_attractor(&m, &cfg.ic, &cfg.thresholds.classify_options()).unwrap();
    assert_eq!(c.verdict, Verdict::SegmentCircle);
    let rho = c.evidence.rotation.unwrap().rho;
    let oracle = 3.681f64.ln() / (3.681f64.ln() - 0.9f64.ln());
    assert!((rho - oracle).abs() < 1e-3, "{rho} vs {oracle}");
    assert!(c.evidence.lyapunov.unwrap().abs() < 1e-3);
    assert!(c.summary().starts_with("SEGMENT_CIRCLE quasiperiodic"));
}

#[test]
fn lyapunov_of_a_single_focus_is_log_of_its_modulus() {
    // both pieces equal: a linear focus with |lambda| = sqrt(0.5)
    let m = t1(0.5, 0.5, 0.5, 0.5);
    let l = lyapunov_max(&m, &Point::xy(1e-3, 1e-3), 200).unwrap();
    assert!((l - 0.5f64.sqrt().ln()).abs() < 1e-2, "{l}");
}

#[test]
fn lyapunov_rejects_zero_steps() {
    assert!(lyapunov_max(&t1(0.5, 0.5, 0.5, 0.5), &Point::xy(1.0, 0.0), 0).is_err());
}

#[test]
fn three_dimensional_attractor_is_bounded_and_not_a_point() {
    let v = verdict_of("t3d_wqa", None);
    assert!(matches!(v, Verdict::Wqa | Verdict::Unresolved), "{v}");
}
