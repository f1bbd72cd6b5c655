//! Dyadic systems, weight characteristics and sparse operators on finite
//! spaces of homogeneous type.
//!
//! The numerical core is generic over the scalar type through [`Real`]; the
//! aliases below fix it to `f64` or `f32`. The [`harness`] runs in `f64`.

pub mod dyadic;
pub mod error;
pub mod harness;
pub mod orlicz;
pub mod scalar;
pub mod space;
pub mod sparse;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Real;
pub use space::{Ball, Metric, Space, SpaceProfile};

pub type Space64 = space::Space<f64>;
pub type Space32 = space::Space<f32>;
pub type DyadicFamily64 = dyadic::DyadicFamily<f64>;
pub type DyadicFamily32 = dyadic::DyadicFamily<f32>;
pub type YoungFunction64 = orlicz::YoungFunction<f64>;
pub type YoungFunction32 = orlicz::YoungFunction<f32>;
pub type WeightPair64 = weights::WeightPair<f64>;
pub type WeightPair32 = weights::WeightPair<f32>;
pub type SparseFamily64 = sparse::SparseFamily<f64>;
pub type SparseFamily32 = sparse::SparseFamily<f32>;
