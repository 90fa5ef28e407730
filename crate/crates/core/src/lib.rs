//! Decoherence rates of mass-proportional continuous spontaneous localization
//! (CSL) models for two-branch superpositions of point-particle configurations.
//!
//! - [`model`]: parameters `(gamma, r_C)`, species, configurations and the two
//!   Gaussian kernels.
//! - [`rate`]: the off-diagonal decay rate `Gamma` by exact pair sum, cell list,
//!   grid quadrature and cluster limits, plus regime classification.
//! - [`medium`]: effective masses in a fluid and lattice swap/displacement scenarios.
//! - [`sde`]: Euler-Maruyama integration of the CSL stochastic equation for
//!   frozen configurations and ensemble estimates of `Gamma`.
//! - [`scenarios`]: the photo-transduction cluster ledger and collapse-rate bounds.
//! - [`table`]: plain-text particle tables.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` / `*32`
//! aliases below name the concrete instantiations.

pub mod error;
pub mod geom;
pub mod medium;
pub mod model;
pub mod rate;
mod real;
pub mod scenarios;
pub mod sde;
pub mod table;

pub use error::{CslError, Result};
pub use real::Real;

pub type CollapseParams64 = model::CollapseParams<f64>;
pub type CollapseParams32 = model::CollapseParams<f32>;
pub type Species64 = model::Species<f64>;
pub type Species32 = model::Species<f32>;
pub type Configuration64 = model::Configuration<f64>;
pub type Configuration32 = model::Configuration<f32>;
pub type Superposition64 = model::Superposition<f64>;
pub type Superposition32 = model::Superposition<f32>;
pub type DecayRate64 = rate::DecayRate<f64>;
pub type DecayRate32 = rate::DecayRate<f32>;
pub type ClusterSpec64 = rate::ClusterSpec<f64>;
pub type ClusterSpec32 = rate::ClusterSpec<f32>;
pub type FieldGrid64 = rate::FieldGrid<f64>;
pub type MediumBox64 = medium::MediumBox<f64>;
pub type PerceptionScenario64 = scenarios::PerceptionScenario<f64>;
pub type BoundCriterion64 = scenarios::BoundCriterion<f64>;
pub type EnsembleConfig64 = sde::EnsembleConfig<f64>;
pub type EnsembleConfig32 = sde::EnsembleConfig<f32>;
pub type EnsembleRun64 = sde::EnsembleRun<f64>;
