//! Log-moment indices, Chover-type LIL classification and Monte Carlo
//! partial-sum checks for heavy-tailed distributions.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod distributions;
pub mod moment_index;
pub mod numeric;
pub mod quadrature;
pub mod sequence;
pub mod simulator;

#[cfg(test)]
mod hp_oracle;

pub use numeric::{ExtendedReal, Sign, SignedLogValue};
