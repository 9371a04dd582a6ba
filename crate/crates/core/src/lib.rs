//! Random-matrix and transfer-entropy analysis of paired return and news
//! polarity panels.
//!
//! The numerical code is generic over [`Real`]; the aliases below fix the
//! scalar for the common cases.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a > b)` deliberately rejects NaN.

pub mod cwoe;
pub mod error;
pub mod infoflow;
pub mod ingest;
pub mod network;
pub mod rmt;
pub mod scalar;
pub mod seed;
pub mod sentiment;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;

pub type Panel64 = ingest::AlignedPanel<f64>;
pub type Panel32 = ingest::AlignedPanel<f32>;
pub type NormalizedPanel64 = rmt::NormalizedPanel<f64>;
pub type NormalizedPanel32 = rmt::NormalizedPanel<f32>;
pub type Correlation64 = rmt::CorrelationMatrix<f64>;
pub type Correlation32 = rmt::CorrelationMatrix<f32>;
pub type Spectrum64 = rmt::Spectrum<f64>;
pub type Spectrum32 = rmt::Spectrum<f32>;
pub type MpParams64 = rmt::MpParams<f64>;
pub type MpParams32 = rmt::MpParams<f32>;
pub type Partitioned64 = cwoe::PartitionedCorrelation<f64>;
pub type Partitioned32 = cwoe::PartitionedCorrelation<f32>;
pub type EteMatrix64 = infoflow::EteMatrix<f64>;
pub type EteMatrix32 = infoflow::EteMatrix<f32>;
pub type Graph64 = network::DirectedGraph<f64>;
pub type Graph32 = network::DirectedGraph<f32>;
