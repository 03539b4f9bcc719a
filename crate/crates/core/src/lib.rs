//! Numerical laboratory for large values of `log|ζ(1/2+it)|`: checkpoint
//! grids and barriers, prime-supported Dirichlet sums, surrogate random
//! Euler products, the indicator polynomial and the barrier Monte Carlo.

pub mod barrier;
pub mod dirichlet;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod indicator;
pub mod models;
pub mod numeric;
pub mod primes;
pub mod report;
pub mod rng;
pub mod zeta;

pub use error::{LabError, Result};
