//! Log-concave maximum likelihood estimation: exact active-set solver in one dimension,
//! tent-function fit in the plane, and sample whitening.

mod hull;
mod one_d;
mod standardize;
mod tent;

pub use one_d::{knot_perturbation_gain, loglik_1d, mle_1d, mle_1d_weighted, MleResult1D, DEFAULT_TOL, MAX_ITERATIONS};
pub use standardize::{check_class_membership, standardize, MembershipReport, Standardization};
pub use tent::{mle_2d_tent, TentFit, TentOptions};
