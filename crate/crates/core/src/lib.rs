//! Bayesian, MAP and classical predictors for Poisson and Ornstein-Uhlenbeck
//! processes, exact simulators, dominance-region calculators and a
//! reproducible Monte Carlo harness for comparing L² errors.

pub mod error;
pub mod harness;
pub mod normal;
pub mod numeric;
pub mod ou_continuous;
pub mod ou_sampled;
pub mod poisson_predict;
pub mod process_sim;
pub mod rng;

pub use error::{Error, Result};
pub use rng::RngStream;
