pub mod error;
pub mod generators;
pub mod grid;
pub mod laplace;
pub mod montecarlo;
pub mod solvers;
pub mod superop;
pub mod volterra;
pub mod waiting_time;

pub use error::{Error, Result};
