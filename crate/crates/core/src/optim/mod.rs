//! Coefficient minimization, brute-force best-approximation errors and the
//! Chebyshev greedy algorithm.

mod minimize;
mod sigma;

pub use minimize::{min_norm_over_coeffs, min_norm_with, Method, MinimizeOptions, MinimizeResult, DEFAULT_TOL};
pub use sigma::{
    cga, sigma_m, sigma_w, sigma_w_tilde, sigma_w_with, SigmaOptions, SigmaResult, DEFAULT_BUDGET,
};
