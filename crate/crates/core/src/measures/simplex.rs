//! Exponentiated-gradient ascent over a probability simplex.

/// Tuning for [`ascend`].
#[derive(Debug, Clone, Copy)]
pub struct AscentConfig {
    pub max_iters: usize,
    /// Stop once the duality-style gap `max_i g_i - sum_i w_i g_i` drops below this.
    pub tol: f64,
    pub initial_step: f64,
    /// Steps shrink geometrically on failure; below this floor the run stalls.
    pub min_step: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig { max_iters: 20_000, tol: 1e-12, initial_step: 1.0, min_step: 1e-14 }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes a concave `f` over the simplex, starting from a strictly positive
/// `start`. `eval` returns the value and the gradient at a point.
///
/// Each step multiplies weights by `exp(step * g)`. A step that bends the
/// gradient more than the entropic geometry allows at that step size is halved
/// and retried; an accepted one grows the step.
pub fn ascend<F>(start: Vec<f64>, mut eval: F, cfg: AscentConfig) -> AscentResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut w = normalize(start);
    let (mut value, mut grad) = eval(&w);
    let mut step = cfg.initial_step;
    let mut gap = gap_of(&w, &grad);
    let mut iterations = 0;
    while iterations < cfg.max_iters && gap > cfg.tol {
        iterations += 1;
        let gmax = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = false;
        while step >= cfg.min_step {
            let trial: Vec<f64> = w
                .iter()
                .zip(&grad)
                .map(|(wi, gi)| wi * (step * (gi - gmax)).exp())
                .collect();
            let trial = normalize(trial);
            let (v, g) = eval(&trial);
            // Relative smoothness along the step, tested through gradients so
            // that it stays meaningful once value differences drop below rounding.
            let curvature: f64 = trial
                .iter()
                .zip(&w)
                .zip(grad.iter().zip(&g))
                .map(|((t, o), (g0, g1))| (g0 - g1) * (t - o))
                .sum();
            let bregman: f64 = trial
                .iter()
                .zip(&w)
                .filter(|(t, o)| **t > 0.0 && **o > 0.0)
                .map(|(t, o)| (t - o) * (t / o).ln())
                .sum();
            let floor = value - 1e-12 * value.abs().max(1.0);
            if v.is_finite() && v >= floor && curvature <= bregman / step {
                accepted = trial != w;
                w = trial;
                value = v;
                grad = g;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        gap = gap_of(&w, &grad);
    }
    AscentResult { converged: gap <= cfg.tol, point: w, value, gap, iterations }
}

fn gap_of(w: &[f64], g: &[f64]) -> f64 {
    let mean: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum();
    let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max - mean).max(0.0)
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}
