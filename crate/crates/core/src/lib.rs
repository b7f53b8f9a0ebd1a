//! Goodness-of-fit scoring with the empirical survival Jensen-Shannon
//! divergence (ESJS).
//!
//! The crate fits parametric distributions by maximum likelihood, scores each
//! fit by the ESJS between the data's empirical survival function and that of
//! a sample drawn from the fitted model, attaches bootstrap confidence
//! intervals, and ranks competing models by ESJS factors.
//!
//! ```
//! use esjs::survival::{empirical_survival, SortedSample};
//! use esjs::divergence::esjs;
//!
//! let p = empirical_survival(&SortedSample::new(vec![0.0, 2.0]).unwrap());
//! let q = empirical_survival(&SortedSample::new(vec![1.0, 3.0]).unwrap());
//! let d = esjs(&p, &q);
//! assert!(d > 0.0 && (d - esjs(&q, &p)).abs() == 0.0);
//! ```

pub mod bootstrap;
pub mod cli;
pub mod distributions;
pub mod divergence;
mod error;
pub mod gof;
pub mod seed;
mod special;
pub mod survival;

pub use error::{Error, Result};
