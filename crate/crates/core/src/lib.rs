//! Laplace eigenbasis of the Sasaki–Einstein manifolds Y^{p,q} and the
//! Klein–Gordon mode-sum propagator on AdS5 × Y^{p,q}.

pub mod ads;
pub mod angular;
pub mod cache;
pub mod config;
pub mod error;
pub mod geometry;
pub mod propagator;
pub mod radial;
pub mod scalar;
pub mod specfun;
pub mod spectrum;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Geometry = geometry::GeometryParams<f64>;
pub type Geometry32 = geometry::GeometryParams<f32>;
