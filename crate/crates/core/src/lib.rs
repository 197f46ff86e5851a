//! Sphere-average process of the four-dimensional Gaussian free field.
//!
//! The deterministic layers ([`specfun`], [`covariance`], [`sampler`]) are
//! generic over [`Scalar`] (`f32` or `f64`); the Monte Carlo layers
//! ([`liouville`], [`multifractal`], [`verify`]) work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariance;
pub mod error;
pub mod linalg;
pub mod liouville;
pub mod multifractal;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod specfun;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use rng::RngStream;
pub use scalar::Scalar;

pub type SphereSpec64 = covariance::SphereSpec<f64>;
pub type SphereSpec32 = covariance::SphereSpec<f32>;
pub type CovMatrix64 = covariance::CovMatrix<f64>;
pub type CovMatrix32 = covariance::CovMatrix<f32>;
pub type RadialPath64 = sampler::RadialPath<f64>;
pub type RadialPath32 = sampler::RadialPath<f32>;
pub type FieldGridSpec64 = sampler::FieldGridSpec<f64>;
pub type FieldGrid64 = sampler::FieldGrid<f64>;
pub type FieldGrid32 = sampler::FieldGrid<f32>;
pub type MixedBoundaryMatrix64 = specfun::MixedBoundaryMatrix<f64>;
