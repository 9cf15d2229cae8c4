use std::f64::consts::LN_2;

use super::log_sum_exp;
use crate::prob::JointPmf;
use crate::prob::Pmf;

/// Renyi entropy of order `1/(1+rho)`:
/// `((1+rho)/rho) log sum_x P(x)^{1/(1+rho)}`.
pub fn renyi_entropy(p: &Pmf, rho: f64) -> f64 {
    assert!(rho > 0.0, "rho must be positive");
    // sum P^a = 1 + sum P (P^{a-1} - 1); the expm1 form keeps small rho accurate.
    let beta = rho / (1.0 + rho);
    let excess: f64 = p
        .probs()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * (-beta * v.ln()).exp_m1())
        .sum();
    (1.0 + rho) / rho * excess.ln_1p() / LN_2
}

/// Renyi entropy of an arbitrary order `alpha != 1`.
pub fn renyi_entropy_of_order(p: &Pmf, alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha != 1.0, "order must be positive and not 1");
    let lse = log_sum_exp(
        p.probs()
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| alpha * v.ln()),
    );
    lse / (1.0 - alpha) / LN_2
}

/// Arimoto's conditional Renyi entropy of order `1/(1+rho)`:
/// `(1/rho) log sum_y (sum_x P(x,y)^{1/(1+rho)})^{1+rho}`.
pub fn conditional_renyi(j: &JointPmf, rho: f64) -> f64 {
    assert!(rho > 0.0, "rho must be positive");
    let alpha = 1.0 / (1.0 + rho);
    let per_y = (0..j.ny()).map(|y| {
        let inner = log_sum_exp(
            (0..j.nx())
                .map(|x| j.get(x, y))
                .filter(|&v| v > 0.0)
                .map(|v| alpha * v.ln()),
        );
        (1.0 + rho) * inner
    });
    log_sum_exp(per_y) / rho / LN_2
}
