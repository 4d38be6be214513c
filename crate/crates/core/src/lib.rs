//! Local invariants of maximally nonintegrable 3-plane distributions on
//! 6-manifolds, computed on truncated Taylor jets.

pub mod adaptation;
pub mod analysis;
pub mod combinatorics;
pub mod conformal;
pub mod conventions;
pub mod distribution;
pub mod error;
pub mod exterior;
pub mod frame;
pub mod jet;
pub mod linalg;
pub mod reduction;
pub mod scalar;
pub mod selftest;
pub mod spin;

pub use conventions::Conventions;
pub use error::{Error, Result};
pub use scalar::Real;

pub type Jet = jet::Jet<f64>;
pub type KForm = exterior::KForm<f64>;
pub type VectorField = exterior::VectorField<f64>;
pub type JetMap = exterior::JetMap<f64>;
pub type Distribution = distribution::Distribution<f64>;
pub type AdaptedCoframe = adaptation::AdaptedCoframe<f64>;
