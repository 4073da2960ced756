//! Exact bivariate halfspace (Tukey) depth and depth trimmed regions for
//! weighted empirical measures, closed-form reference distributions, and a
//! Monte Carlo harness for the strong limit theorems of the empirical
//! regions in the Hausdorff metric.

pub mod error;
pub mod asymptotics;
pub mod distributions;
pub mod empirical;
pub mod experiments;
pub mod geometry;

pub use error::{Error, Result};
