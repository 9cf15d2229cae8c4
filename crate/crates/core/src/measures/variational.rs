//! Variational forms of the Renyi entropies and their closed-form maximizers.

use std::f64::consts::LOG2_E;

use super::simplex::{ascend, AscentConfig};
use super::{entropy_of, kl_divergence, log_sum_exp};
use crate::prob::{condition_joint, Channel, JointPmf, Pmf};

/// `H(Q) - D(Q||P)/rho`.
pub fn entropy_objective(q: &[f64], p: &[f64], rho: f64) -> f64 {
    entropy_of(q) - kl_divergence(q, p) / rho
}

/// `Q(x)` proportional to `P(x)^{1/(1+rho)}`.
pub fn tilted(p: &Pmf, rho: f64) -> Pmf {
    let alpha = 1.0 / (1.0 + rho);
    let logs: Vec<f64> = p
        .probs()
        .iter()
        .map(|&v| if v > 0.0 { alpha * v.ln() } else { f64::NEG_INFINITY })
        .collect();
    let norm = log_sum_exp(logs.iter().copied());
    let probs = logs.iter().map(|&l| (l - norm).exp()).collect();
    Pmf::new(p.alphabet().clone(), probs).expect("tilt of a PMF is a PMF")
}

#[derive(Debug, Clone)]
pub struct EntropyVariational {
    /// Maximum found by simplex ascent.
    pub value: f64,
    pub numeric_maximizer: Pmf,
    /// The tilt, and the objective evaluated there.
    pub maximizer: Pmf,
    pub closed_form_value: f64,
}

/// `max_Q H(Q) - D(Q||P)/rho`, searched numerically over `supp(P)`.
pub fn variational_entropy(p: &Pmf, rho: f64) -> EntropyVariational {
    assert!(rho > 0.0, "rho must be positive");
    let support = p.support();
    let ps: Vec<f64> = support.iter().map(|&i| p.prob(i)).collect();
    let eval = |w: &[f64]| {
        let value = entropy_objective(w, &ps, rho);
        let grad = w
            .iter()
            .zip(&ps)
            .map(|(&q, &pp)| -q.log2() - LOG2_E - ((q / pp).log2() + LOG2_E) / rho)
            .collect();
        (value, grad)
    };
    let start = vec![1.0; support.len()];
    let run = ascend(start, eval, AscentConfig::default());
    let mut full = vec![0.0; p.len()];
    for (k, &i) in support.iter().enumerate() {
        full[i] = run.point[k];
    }
    let maximizer = tilted(p, rho);
    let closed_form_value = entropy_objective(maximizer.probs(), p.probs(), rho);
    EntropyVariational {
        value: run.value,
        numeric_maximizer: Pmf::new(p.alphabet().clone(), full).expect("simplex point"),
        maximizer,
        closed_form_value,
    }
}

/// `H(V|Q) - D(Q o V || P_XY)/rho` for a marginal `Q` on `Y` and a channel
/// `V` from `Y` to `X`.
pub fn conditional_objective(q_y: &Pmf, v: &Channel, j: &JointPmf, rho: f64) -> f64 {
    let mut cond = 0.0;
    for y in 0..q_y.len() {
        let qy = q_y.prob(y);
        if qy > 0.0 {
            let row = v.row(y).expect("channel row defined where Q(y) > 0");
            cond += qy * entropy_of(row);
        }
    }
    let joint = JointPmf::compose(q_y, v).expect("marginal and channel are compatible");
    let flat = |m: &JointPmf| -> Vec<f64> {
        (0..m.nx()).flat_map(|x| (0..m.ny()).map(move |y| (x, y))).map(|(x, y)| m.get(x, y)).collect()
    };
    cond - kl_divergence(&flat(&joint), &flat(j)) / rho
}

/// The maximizing pair: `Q*(y)` proportional to `(sum_x P(x,y)^{1/(1+rho)})^{1+rho}`
/// and `V*(x|y)` proportional to `P(x|y)^{1/(1+rho)}`.
pub fn conditional_maximizers(j: &JointPmf, rho: f64) -> (Pmf, Channel) {
    let alpha = 1.0 / (1.0 + rho);
    let (_, cond) = condition_joint(j);
    let log_inner: Vec<f64> = (0..j.ny())
        .map(|y| {
            let lse = log_sum_exp(
                (0..j.nx()).map(|x| j.get(x, y)).filter(|&v| v > 0.0).map(|v| alpha * v.ln()),
            );
            (1.0 + rho) * lse
        })
        .collect();
    let norm = log_sum_exp(log_inner.iter().copied());
    let q_star = Pmf::new(
        j.y_alphabet().clone(),
        log_inner.iter().map(|&l| (l - norm).exp()).collect(),
    )
    .expect("tilted marginal is a PMF");
    let rows = (0..j.ny())
        .map(|y| cond.row_pmf(y).map(|r| tilted(&r, rho).probs().to_vec()))
        .collect();
    let v_star = Channel::new(j.y_alphabet().clone(), j.x_alphabet().clone(), rows)
        .expect("tilted rows are PMFs");
    (q_star, v_star)
}

#[derive(Debug, Clone)]
pub struct ConditionalVariational {
    /// Maximum found by simplex ascent over joints on `supp(P_XY)`.
    pub value: f64,
    pub numeric_joint: JointPmf,
    pub q_star: Pmf,
    pub v_star: Channel,
    /// Objective at `(q_star, v_star)`.
    pub closed_form_value: f64,
}

/// `max_{Q,V} H(V|Q) - D(Q o V || P_XY)/rho`.
pub fn variational_conditional(j: &JointPmf, rho: f64) -> ConditionalVariational {
    assert!(rho > 0.0, "rho must be positive");
    let (nx, ny) = (j.nx(), j.ny());
    let cells: Vec<(usize, usize)> = (0..nx)
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .filter(|&(x, y)| j.get(x, y) > 0.0)
        .collect();
    let ps: Vec<f64> = cells.iter().map(|&(x, y)| j.get(x, y)).collect();
    let eval = |w: &[f64]| {
        let mut col = vec![0.0; ny];
        for (k, &(_, y)) in cells.iter().enumerate() {
            col[y] += w[k];
        }
        let mut value = 0.0;
        let mut grad = Vec::with_capacity(w.len());
        for (k, &(_, y)) in cells.iter().enumerate() {
            let (jv, pv) = (w[k], ps[k]);
            value -= jv * (jv / col[y]).log2() + jv * (jv / pv).log2() / rho;
            grad.push(-(jv / col[y]).log2() - ((jv / pv).log2() + LOG2_E) / rho);
        }
        (value, grad)
    };
    let run = ascend(vec![1.0; cells.len()], eval, AscentConfig::default());
    let mut rows = vec![vec![0.0; ny]; nx];
    for (k, &(x, y)) in cells.iter().enumerate() {
        rows[x][y] = run.point[k];
    }
    let numeric_joint = JointPmf::new(j.x_alphabet().clone(), j.y_alphabet().clone(), rows)
        .expect("simplex point");
    let (q_star, v_star) = conditional_maximizers(j, rho);
    let closed_form_value = conditional_objective(&q_star, &v_star, j, rho);
    ConditionalVariational { value: run.value, numeric_joint, q_star, v_star, closed_form_value }
}
