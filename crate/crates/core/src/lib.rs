//! Iteration and analysis of piecewise-linear discontinuous maps whose
//! pieces all fix the origin.
//!
//! The crate covers the map catalog and partition geometry ([`map_model`]),
//! forward orbits ([`orbit`]), one-dimensional circle maps ([`circle_map`]),
//! first-return maps on rays ([`first_return`]), attractor classification
//! ([`classifier`]), parallel parameter and phase-plane scans ([`scan`]) and
//! configuration and file formats ([`cli_io`]).

pub mod error;
pub mod first_return;
pub mod linalg;
pub mod map_model;
pub mod circle_map;
pub mod cli_io;
pub mod classifier;
pub mod orbit;
pub mod scan;

pub use error::{Error, Result};
pub use linalg::{Matrix, Point};
pub use map_model::{make_catalog_map, CatalogId, Params, PwlMap};
