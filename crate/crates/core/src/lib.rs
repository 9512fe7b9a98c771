//! Finite element solutions of Poisson problems on triangulations together
//! with guaranteed local and global energy-error bounds from equilibrated
//! Raviart-Thomas fluxes.

pub mod constants;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod geometry;
pub mod mesh;
pub mod problems;
pub mod solve;
pub mod spaces;
pub mod weight;

pub use error::{Error, Result};
