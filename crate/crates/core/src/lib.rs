//! Interlocking-directorate networks and stock co-movement.
//!
//! Builds the yearly board-interlock network, turns it into a proximity
//! matrix, and relates it to the market-similarity matrix of daily log returns
//! with (partial) Mantel correlations and dyadic bootstrap intervals. A
//! synthetic generator with planted network/market coupling serves as ground
//! truth.
//!
//! The numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! pipeline runs in `f64`, and the aliases below name the common instances.

pub mod controls;
pub mod dyad;
pub mod dyadstats;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod market;
pub mod pipeline;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DyadMatrixF64 = dyad::DyadMatrix<f64>;
pub type DyadMatrixF32 = dyad::DyadMatrix<f32>;
pub type DyadVectorF64 = dyad::DyadVector<f64>;
pub type ReturnPanelF64 = market::ReturnPanel<f64>;
pub type ControlSetF64 = controls::ControlSet<f64>;
pub type NodeAttributesF64 = controls::NodeAttributes<f64>;
