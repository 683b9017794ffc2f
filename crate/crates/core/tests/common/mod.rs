#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;
use pwlmap::cli_io::{parse_config, RunConfig};
use pwlmap::map_model::T9Border;
use pwlmap::orbit::{iterate, sequence_matrix, OrbitOptions, OrbitStatus};
use pwlmap::{make_catalog_map, CatalogId, Params, Point, PwlMap};

pub fn catalog(id: &str, pairs: &[(&str, f64)]) -> PwlMap {
    let id: CatalogId = id.parse().unwrap();
    let params = pairs.iter().fold(Params::new(), |p, (k, v)| p.with(k, *v));
    make_catalog_map(&id, &params).unwrap()
}

pub fn t1(tau_l: f64, delta_l: f64, tau_r: f64, delta_r: f64) -> PwlMap {
    catalog(
        "T1",
        &[("tauL", tau_l), ("deltaL", delta_l), ("tauR", tau_r), ("deltaR", delta_r)],
    )
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.cfg"))
}

pub fn fixture(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn fixture_map(name: &str) -> (PwlMap, RunConfig) {
    let cfg = fixture(name);
    (make_catalog_map(&cfg.map, &cfg.params).unwrap(), cfg)
}

pub fn all_fixtures() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "cfg").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

/// Catalog entries whose pieces all fix the origin.
pub fn homogeneous_ids() -> Vec<CatalogId> {
    vec![
        CatalogId::F,
        CatalogId::T1,
        CatalogId::T2,
        CatalogId::T3,
        CatalogId::T4,
        CatalogId::T5,
        CatalogId::T6,
        CatalogId::T7,
        CatalogId::T8,
        CatalogId::T9(T9Border::Line),
        CatalogId::T9(T9Border::Diagonal),
        CatalogId::T9(T9Border::Circle),
        CatalogId::T3D,
    ]
}

/// Builds catalog map `which` from raw draws; `h` keeps its default and
/// `alpha` is folded into (0.1, 0.9).
pub fn map_from_draws(which: usize, draws: &[f64]) -> PwlMap {
    let ids = homogeneous_ids();
    let id = &ids[which % ids.len()];
    let mut params = Params::new();
    for (i, (name, default)) in id.parameters().iter().enumerate() {
        let v = draws[i % draws.len()];
        match *name {
            "h" if default.is_some() => {}
            "h" => params.set(name, if v >= 0.0 { 1.0 } else { -1.0 }),
            "alpha" => params.set(name, 0.1 + 0.8 * (v.abs() / 2.5).min(1.0)),
            _ => params.set(name, v),
        }
    }
    make_catalog_map(id, &params).unwrap()
}

pub fn arb_map() -> impl Strategy<Value = PwlMap> {
    (0usize..13, prop::collection::vec(-2.5f64..2.5, 8)).prop_map(|(w, d)| map_from_draws(w, &d))
}

pub fn arb_point(dim: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-3.0f64..3.0, dim).prop_map(|c| Point::new(&c))
}

/// A catalog map together with a point of matching dimension.
pub fn arb_map_and_point() -> impl Strategy<Value = (PwlMap, Point)> {
    arb_map().prop_flat_map(|m| {
        let d = m.dim();
        (Just(m), arb_point(d))
    })
}

/// Forward-error scale of `T^k(x0)` computed either step by step or as one
/// product: `max_i |x_i| |J_{k-1} ... J_i|` over the orbit. Partial products
/// can expand rounding error even while the orbit itself shrinks, so `|P|
/// |x0|` alone underestimates it.
pub fn forward_error_scale(map: &PwlMap, x0: &Point, k: usize) -> Option<f64> {
    let opts = OrbitOptions {
        stop_on_convergence: false,
        ..OrbitOptions::default()
    };
    let o = iterate(map, x0, k, &opts).ok()?;
    if o.status != OrbitStatus::Bounded || o.itinerary.len() < k {
        return None;
    }
    (0..k)
        .map(|i| o.points[i].point.norm() * sequence_matrix(map, &o.itinerary[i..k]).max_abs())
        .reduce(f64::max)
}
