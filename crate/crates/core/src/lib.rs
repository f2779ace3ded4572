//! Numerical laboratory for the Anderson model on bounded-degree graphs.
//!
//! The crate builds the random operator `H = T + λω` on finite simple
//! graphs, evaluates Green's functions both directly and through the
//! self-avoiding-walk expansion, estimates fractional moments `E|G|^s`
//! against their a priori and walk-count bounds, evaluates the resulting
//! localization criterion, and measures level-spacing statistics.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anderson;
pub mod error;
pub mod fmm;
pub mod graph;
pub mod localization;
pub mod report;
pub mod saw;
pub mod spectral;

pub use anderson::{AndersonOperator, ComplexEnergy, DensityKind, DisorderModel, DisorderRealization, Resolvent};
pub use error::{Error, Result};
pub use graph::{Family, Graph, SphereTable, Vertex};
pub use num_complex::Complex64;
pub use saw::{SawWalk, WalkClass, WalkClassCounts, WalkCensus};
