use std::f64::consts::LN_2;

use super::log_sum_exp;
use crate::prob::Pmf;

/// Orders at which the limits of the Sundaresan divergence are evaluated:
/// just below and above one, near zero, and large.
pub const LIMIT_PROXY_ORDERS: [f64; 4] = [1.0 - 1e-6, 1.0 + 1e-6, 1e-6, 1e6];

/// Relative entropy `D(P||Q)`, infinite when `supp(P)` is not inside `supp(Q)`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share an alphabet");
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b == 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).log2();
        }
    }
    total
}

/// Renyi divergence `1/(alpha-1) log sum P^alpha Q^{1-alpha}`.
pub fn renyi_divergence(p: &Pmf, q: &Pmf, alpha: f64) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share an alphabet");
    assert!(alpha > 0.0 && alpha != 1.0, "order must be positive and not 1");
    let (ps, qs) = (p.probs(), q.probs());
    if alpha > 1.0 && ps.iter().zip(qs).any(|(&a, &b)| a > 0.0 && b == 0.0) {
        return f64::INFINITY;
    }
    let lse = log_sum_exp(
        ps.iter()
            .zip(qs)
            .filter(|(&a, &b)| a > 0.0 && b > 0.0)
            .map(|(&a, &b)| alpha * a.ln() + (1.0 - alpha) * b.ln()),
    );
    if lse == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    lse / (alpha - 1.0) / LN_2
}

/// Sundaresan's divergence
///
/// `log [ sum Q^a / (sum P^a)^{1/(1-a)} * (sum P / Q^{1-a})^{a/(1-a)} ]`
///
/// with `0/0 = 0` and `c/0 = +inf`. All sums are taken in the log domain so
/// extreme orders neither underflow nor overflow.
pub fn sundaresan_divergence(p: &Pmf, q: &Pmf, alpha: f64) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share an alphabet");
    assert!(alpha > 0.0 && alpha != 1.0, "order must be positive and not 1");
    let (ps, qs) = (p.probs(), q.probs());
    let uncovered = ps.iter().zip(qs).any(|(&a, &b)| a > 0.0 && b == 0.0);
    if alpha < 1.0 && uncovered {
        return f64::INFINITY;
    }
    // sum over supp(P) of P Q^{a-1}; for a > 1 a zero Q kills the term.
    let log_cross = log_sum_exp(
        ps.iter()
            .zip(qs)
            .filter(|(&a, &b)| a > 0.0 && b > 0.0)
            .map(|(&a, &b)| a.ln() + (alpha - 1.0) * b.ln()),
    );
    if log_cross == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let log_q = log_sum_exp(qs.iter().filter(|&&b| b > 0.0).map(|&b| alpha * b.ln()));
    let log_p = log_sum_exp(ps.iter().filter(|&&a| a > 0.0).map(|&a| alpha * a.ln()));
    let value = log_q - log_p / (1.0 - alpha) + alpha / (1.0 - alpha) * log_cross;
    (value / LN_2).max(0.0)
}

/// Closed-form limit of the Sundaresan divergence as the order tends to zero,
/// `log |supp Q| / |supp P|`; `None` unless `supp(P)` lies inside `supp(Q)`.
pub fn sundaresan_limit_at_zero(p: &Pmf, q: &Pmf) -> Option<f64> {
    let (ps, qs) = (p.probs(), q.probs());
    if ps.iter().zip(qs).any(|(&a, &b)| a > 0.0 && b == 0.0) {
        return None;
    }
    Some((q.support_size() as f64 / p.support_size() as f64).log2())
}

/// Closed-form limit as the order tends to infinity:
/// `log max P / mean_{x in argmax Q} P(x)`.
pub fn sundaresan_limit_at_infinity(p: &Pmf, q: &Pmf) -> f64 {
    let qmax = q.probs().iter().copied().fold(0.0, f64::max);
    let top: Vec<usize> = (0..q.len()).filter(|&i| q.prob(i) == qmax).collect();
    let mean = top.iter().map(|&i| p.prob(i)).sum::<f64>() / top.len() as f64;
    let pmax = p.probs().iter().copied().fold(0.0, f64::max);
    if mean == 0.0 {
        f64::INFINITY
    } else {
        (pmax / mean).log2()
    }
}

/// Which limit a proxy-order evaluation stands in for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceLimit {
    OneFromBelow,
    OneFromAbove,
    Zero,
    Infinity,
}

impl DivergenceLimit {
    pub const ALL: [DivergenceLimit; 4] = [
        DivergenceLimit::OneFromBelow,
        DivergenceLimit::OneFromAbove,
        DivergenceLimit::Zero,
        DivergenceLimit::Infinity,
    ];

    pub fn proxy_order(self) -> f64 {
        match self {
            DivergenceLimit::OneFromBelow => LIMIT_PROXY_ORDERS[0],
            DivergenceLimit::OneFromAbove => LIMIT_PROXY_ORDERS[1],
            DivergenceLimit::Zero => LIMIT_PROXY_ORDERS[2],
            DivergenceLimit::Infinity => LIMIT_PROXY_ORDERS[3],
        }
    }

    /// The closed-form limit, when it is defined for this pair.
    pub fn closed_form(self, p: &Pmf, q: &Pmf) -> Option<f64> {
        match self {
            DivergenceLimit::OneFromBelow | DivergenceLimit::OneFromAbove => {
                Some(kl_divergence(p.probs(), q.probs()))
            }
            DivergenceLimit::Zero => sundaresan_limit_at_zero(p, q),
            DivergenceLimit::Infinity => Some(sundaresan_limit_at_infinity(p, q)),
        }
    }

    pub fn proxy(self, p: &Pmf, q: &Pmf) -> f64 {
        sundaresan_divergence(p, q, self.proxy_order())
    }
}
