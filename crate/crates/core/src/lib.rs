//! Bayesian dynamic borrowing of a historical control arm for
//! time-to-event data.
//!
//! The baseline hazard is piecewise constant on a random partition whose
//! number of split points is sampled by reversible jump. The historical
//! baseline carries an AR(1) Gaussian Markov random field prior, and the
//! current baseline is tied to it through a commensurate prior whose
//! variance follows a lump-and-smear inverse-gamma mixture.

// `!(x > 0.0)` is used throughout to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod borrowing;
pub mod data;
pub mod error;
pub mod model;
pub mod posterior;
pub mod priors;
pub mod sampler;
pub mod simulate;

pub use error::{Error, Result};
