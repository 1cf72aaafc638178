#![forbid(unsafe_code)]

//! Analysis toolkit for finite semimetric spaces.
//!
//! The axioms on a symmetric distance function form a ladder:
//! ultrametric, metric, strong b-metric, K-relaxed polygonal, b-metric.
//! This crate classifies finite spaces along that ladder with exact
//! minimal relaxation constants, builds larger spaces from smaller ones
//! (concatenation, chains, polygon implementations), and empirically
//! probes whether candidate transforms `f : [0,inf) -> [0,inf)` carry
//! one axiom class into another, using triangle-triplet and
//! relaxed-polygon scans over configurable grids.

pub mod combinators;
pub mod functions;
pub mod grid;
pub mod preservers;
pub mod space;
pub mod triplets;

pub use combinators::{
    chain_concatenate, concatenate, generate_strong_space, implement_polygon, three_point_space,
    BridgeMode, CombineError,
};
pub use functions::{
    check_property, EvalError, FnParseError, FunctionSpec, Outcome, Property, PropertyVerdict,
    UnknownPropertyError, Witness,
};
pub use grid::{decimate, GridDescriptor, GridError, GridSpec};
pub use preservers::{
    build_witness_space, estimate_gmap, preservation_scan, verify_on_space, Axiom, ClassSpec,
    PreservationReport, ScanError, ScanOptions, WorstTuple,
};
pub use space::{
    RelaxationProfile, RpiCertificate, SemimetricSpace, SpaceError, DEFAULT_TOL,
};
pub use triplets::{
    sample_polygons, sample_triplets, PolygonTuple, Triplet, TripletKind, TupleError,
};
