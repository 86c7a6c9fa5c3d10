//! Markov bases, fiber walks and exact conditional tests for Poisson and
//! logistic regression on equally spaced covariate levels.

pub mod cli;
pub mod error;
pub mod fiber;
pub mod glm;
pub mod mcmc;
pub mod movesets;
pub mod tables;

pub use error::{Error, Result};
pub use tables::{CellIndex, Configuration, Count, Move, Sign, SufficientStatistic, Table};
