//! Scalar information measures in bits.
//!
//! Zero-probability symbols never contribute to a sum. Divergences that blow
//! up return `f64::INFINITY`; that is a value, not an error.

mod divergence;
mod rate_distortion;
mod renyi;
pub mod simplex;
mod variational;

pub use divergence::{
    kl_divergence, renyi_divergence, sundaresan_divergence, sundaresan_limit_at_infinity,
    sundaresan_limit_at_zero, DivergenceLimit, LIMIT_PROXY_ORDERS,
};
pub use rate_distortion::{
    binary_entropy, binary_entropy_inverse, binary_hamming_renyi_rd, rd_function, rd_solve,
    renyi_rd, renyi_rd_objective, renyi_rd_with, Distortion, RdConfig, RdSolution,
    RenyiRdConfig, RenyiRdSolution,
};
pub use renyi::{conditional_renyi, renyi_entropy, renyi_entropy_of_order};
pub use variational::{
    conditional_maximizers, conditional_objective, entropy_objective, tilted,
    variational_conditional, variational_entropy, ConditionalVariational, EntropyVariational,
};

use crate::error::{Error, Result};
use crate::prob::Pmf;

/// The parameter `rho > 0` together with the Renyi order `1/(1+rho)` it selects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderParam {
    rho: f64,
}

impl OrderParam {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Precondition(format!("rho must be positive, got {rho}")));
        }
        Ok(OrderParam { rho })
    }

    /// Inverse of [`OrderParam::alpha`]; only orders in `(0, 1)` have a `rho`.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Precondition(format!(
                "order {alpha} has no rho parameterization"
            )));
        }
        OrderParam::new(1.0 / alpha - 1.0)
    }

    pub fn rho(self) -> f64 {
        self.rho
    }

    pub fn alpha(self) -> f64 {
        1.0 / (1.0 + self.rho)
    }
}

/// Validates an order for the two-parameter divergences.
pub fn check_order(alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 {
        return Err(Error::Precondition(format!(
            "order must be positive and different from 1, got {alpha}"
        )));
    }
    Ok(alpha)
}

/// Shannon entropy `H(P)`.
pub fn shannon_entropy(p: &Pmf) -> f64 {
    entropy_of(p.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// `ln sum exp(v)` over the finite entries; `-inf` when there are none.
pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().filter(|x| *x > f64::NEG_INFINITY).collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
