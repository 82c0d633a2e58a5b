//! Link engine and launch-power optimizer for ultra-wideband (super-C+L)
//! WDM systems.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases re-exported here fix the scalar to `f64`, which is what the
//! optimizer, scenario loader and CLI use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fiber;
pub mod link;
pub mod nli;
pub mod optimizer;
pub mod propagation;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Band = units::Band<f64>;
pub type ChannelGrid = units::ChannelGrid<f64>;
pub type PowerSpectrum = units::PowerSpectrum<f64>;
pub type SampledCurve = fiber::SampledCurve<f64>;
pub type FiberSpan = fiber::FiberSpan<f64>;
pub type Amplifier = fiber::Amplifier<f64>;
pub type RamanPumpSet = fiber::RamanPumpSet<f64>;
pub type Link = fiber::Link<f64>;
pub type PowerEvolution = propagation::PowerEvolution<f64>;
pub type TransponderCurve = link::TransponderCurve<f64>;
pub type GsnrReport = link::GsnrReport<f64>;
pub type LinkOptions = link::LinkOptions<f64>;
