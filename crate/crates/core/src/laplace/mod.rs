//! Exact algebra of rational Laplace transforms and its time-domain
//! counterpart, plus a contour-integral fallback for transforms that are not
//! rational.
//!
//! Units follow the rest of the crate: rates in units of ε, times in 1/ε.

mod exppoly;
mod polynomial;
mod rational;
mod talbot;

pub use exppoly::{convolve, evaluate, integrate_0_to_t, ExpPolynomial, ExpTerm};
pub use polynomial::{Polynomial, ROOT_MERGE_ABS, ROOT_MERGE_REL};
pub use rational::{PartialFraction, PartialFractions, Pole, RationalLT};
pub use talbot::{numeric_inverse_laplace, TALBOT_NODES};

use crate::error::Result;

/// Reduces `r` (cancels common factors, normalizes to a monic denominator).
pub fn reduce(r: &RationalLT) -> RationalLT {
    r.reduce()
}

pub fn partial_fractions(r: &RationalLT) -> Result<PartialFractions> {
    r.partial_fractions()
}

pub fn inverse_laplace(r: &RationalLT) -> Result<ExpPolynomial> {
    r.inverse_laplace()
}
