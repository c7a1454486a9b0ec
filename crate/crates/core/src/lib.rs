//! Multi-hypothesis cell tracking with mitosis-aware assignment.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the tracker,
//! simulator and metrics run on.

pub mod assign;
pub mod config;
pub mod density;
pub mod erlang;
pub mod error;
pub mod gaussian;
pub mod mht;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use config::{MitosisCosts, MotionModel, Sampler, Setting, TrackerConfig};
pub use erlang::erlang_cdf;
pub use error::{Error, Result};
pub use rng::{seeded_rng, RngStream};
pub use scalar::Scalar;

pub type SpatialGaussian = gaussian::SpatialGaussian<f64>;
pub type Detection = model::Detection<f64>;
pub type BernoulliComponent = model::BernoulliComponent<f64>;
pub type Hypothesis = model::Hypothesis<f64>;
pub type CostMatrix = assign::CostMatrix<f64>;
pub type Assignment = assign::Assignment<f64>;
pub type PredictionStack = density::PredictionStack<f64>;
pub type PixelMoments = density::PixelMoments<f64>;
pub type HypothesisStore = mht::HypothesisStore<f64>;

pub type SpatialGaussianF32 = gaussian::SpatialGaussian<f32>;
pub type DetectionF32 = model::Detection<f32>;
pub type CostMatrixF32 = assign::CostMatrix<f32>;
pub type HypothesisStoreF32 = mht::HypothesisStore<f32>;

pub use mht::{LineageTree, Track, TrackPoint};
pub use sim::{simulate, SimConfig};
