//! Analysis of BGP update archives: MRT decoding, update normalization,
//! announcement-type classification, beacon-phase attribution and archive
//! reduction.

pub mod beacon;
pub mod classify;
pub mod model;
pub mod mrt;
pub mod reduce;
