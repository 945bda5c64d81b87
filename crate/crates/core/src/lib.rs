//! Loopy belief propagation and the Bethe approximation on discrete factor
//! graphs, graph zeta functions, loop series and the θ/ω graph polynomials,
//! each paired with brute-force oracles.

pub mod bethe_analysis;
pub mod error;
pub mod exact_oracle;
pub mod fixtures;
pub mod graph_core;
pub mod graph_poly;
pub mod lbp_engine;
pub mod linalg;
pub mod loop_series;
pub mod models;
pub mod poly;
pub mod zeta;

pub use error::{Error, Result};
