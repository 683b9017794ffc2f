mod common;

use common::{catalog, t1};
use pwlmap::circle_map::{rotation_number, RotationOptions};
use pwlmap::first_return::{
    build_return_map, return_geometry_check, verify_branch_eigen, ReturnFailure, ReturnOptions, ReturnOutcome,
};
use pwlmap::orbit::{iterate, OrbitOptions};
use pwlmap::{Error, Point};

fn saddle_segment_map() -> pwlmap::PwlMap {
    catalog(
        "T2",
        &[("al", 0.8), ("bl", 2.0), ("dl", 0.9), ("ar", 1.1), ("br", 1.5), ("dr", -0.8)],
    )
}

#[test]
fn triangular_pieces_give_their_diagonal_entries_as_slopes() {
    let rm = build_return_map(&saddle_segment_map(), 0.0, (-1.1, -0.8), &ReturnOptions::default())
        .unwrap()
        .map()
        .cloned()
        .unwrap();
    assert_eq!(rm.branches.len(), 2);
    assert_eq!(rm.slopes(), vec![0.8, 1.1]);
    assert!(rm.branches.iter().all(|b| b.return_time == 1));
    assert!(verify_branch_eigen(&rm) < 1e-12);
    let r = rotation_number(&rm.to_circle_map().unwrap(), &RotationOptions::default()).unwrap();
    let oracle = 1.1f64.ln() / (1.1f64.ln() - 0.8f64.ln());
    assert!((r.rho - oracle).abs() < 1e-12);
    assert!((r.rho - 0.29930).abs() < 1e-3);
    assert!(return_geometry_check(&rm).conforms);
}

#[test]
fn degenerate_left_piece_gives_a_circle_map_on_the_critical_line() {
    let m = t1(0.9, 0.0, -1.8, 0.85);
    let rm = build_return_map(&m, 0.0, (-3.681, -0.9), &ReturnOptions::default())
        .unwrap()
        .map()
        .cloned()
        .unwrap();
    assert_eq!(rm.branches.len(), 2);
    // L maps (x, 0) to (0.9 x, 0) in one step; R R L takes three
    assert!((rm.branches[0].slope - 0.9).abs() < 1e-12);
    assert_eq!(rm.branches[0].return_time, 1);
    assert_eq!(rm.branches[1].return_time, 3);
    // three-step slope is the (1,1) entry of J_L J_R^2 restricted to y = 0
    let a = *m.jacobian(0) * m.jacobian(1).pow(2);
    assert!((rm.branches[1].slope - a.get(0, 0)).abs() < 1e-12);
    assert!(verify_branch_eigen(&rm) < 1e-9);
    assert!((rm.branches[0].right + 1.0).abs() < 1e-9);
}

#[test]
fn polygon_filling_attractor_needs_too_many_branches() {
    let m = t1(0.4, 0.0, 0.8, 1.01);
    let o = iterate(
        &m,
        &Point::xy(0.1, 0.1),
        110_000,
        &OrbitOptions {
            record_from: 10_000,
            ..OrbitOptions::default()
        },
    )
    .unwrap();
    let xs: Vec<f64> = o
        .points
        .iter()
        .filter(|p| p.point.y() == 0.0 && p.point.x() < 0.0)
        .map(|p| p.point.x())
        .collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match build_return_map(&m, 0.0, (lo, hi), &ReturnOptions::default()).unwrap() {
        ReturnOutcome::Failure(ReturnFailure::BranchCount { found, b_max }) => assert!(found > b_max),
        other => panic!("expected a branch-count failure, got {other:?}"),
    }
}

#[test]
fn segments_through_the_origin_are_rejected() {
    assert!(matches!(
        build_return_map(&saddle_segment_map(), 0.0, (-1.0, 1.0), &ReturnOptions::default()),
        Err(Error::SegmentContainsOrigin(..))
    ));
}

#[test]
fn unsupported_maps_report_a_failure_reason() {
    let m3 = catalog(
        "T3D",
        &[
            ("tauL", 0.3),
            ("sigmaL", 0.3),
            ("deltaL", 0.9),
            ("tauR", -2.3),
            ("sigmaR", 0.2),
            ("deltaR", 0.8),
        ],
    );
    let r = build_return_map(&m3, 0.0, (-2.0, -1.0), &ReturnOptions::default()).unwrap();
    assert!(matches!(r.failure(), Some(ReturnFailure::Unsupported(_))));
    let affine = catalog(
        "T1a",
        &[("tauL", 0.7), ("deltaL", 0.9), ("tauR", 0.6), ("deltaR", 1.11), ("muL", 0.03)],
    );
    let r = build_return_map(&affine, 0.0, (-2.0, -1.0), &ReturnOptions::default()).unwrap();
    assert!(matches!(r.failure(), Some(ReturnFailure::Unsupported(_))));
}
