//! Bivariate Archimedean survival copulas with Yang-Prentice marginal
//! regressions: evaluation, maximum-likelihood fitting, simulation and
//! crossing-time inference.

pub mod baseline;
pub mod copula;
pub mod crossing;
pub mod data;
pub mod error;
pub mod estimation;
pub mod likelihood;
pub mod model;
pub mod optim;
pub mod par;
pub mod regression;
pub mod roots;
pub mod simulation;
pub mod special;

pub use error::{Error, Result};
