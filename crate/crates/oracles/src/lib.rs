//! Reference computations for testing `hazborrow`.
//!
//! Everything here is deliberately naive: likelihoods are evaluated as
//! products over subjects and intervals, the GMRF density uses a dense
//! covariance matrix and its own LU factorisation, and mixture marginals
//! come from adaptive quadrature. Nothing in this crate calls the code it
//! is used to check, except the `check_*` functions that compare the two.

pub mod checks;
pub mod dense;
pub mod likelihood;
pub mod quadrature;
pub mod stats;
pub mod survival;

pub use checks::{
    check_beta_derivatives, check_gmrf_oracle, check_likelihood_oracle, check_q0_oracle,
    check_refinement_invariance, OracleReport,
};
