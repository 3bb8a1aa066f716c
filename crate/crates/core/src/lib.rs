//! Algorithmic core of roadforge.
//!
//! Everything here is pure computation over in-memory values and builds
//! without `std`; file formats, the validator and the command line live in
//! the `roadforge` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analyzer;
pub mod extractor;
pub mod geom;
pub mod maptile;
pub mod netgen;
pub mod projection;
pub mod stats;
pub mod variation;

pub use geom::{GeomSegment, Point, Polyline, Pose, SegmentKind};
