//! Classical and Renyi rate-distortion functions.

use std::f64::consts::LOG2_E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::renyi::renyi_entropy;
use super::simplex::{ascend, AscentConfig};
use super::{kl_divergence, tilted};
use crate::error::{Error, Result};
use crate::prob::{make_pmf, Alphabet, Pmf};

/// A single-letter distortion measure `d(x, xhat)`. Every source row must
/// contain a zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    x_alphabet: Alphabet,
    xhat_alphabet: Alphabet,
    d: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DistortionFile {
    x_alphabet: Vec<String>,
    xhat_alphabet: Vec<String>,
    d: Vec<Vec<f64>>,
}

impl Distortion {
    pub fn new(x_alphabet: Alphabet, xhat_alphabet: Alphabet, d: Vec<Vec<f64>>) -> Result<Self> {
        if d.len() != x_alphabet.len() || d.iter().any(|r| r.len() != xhat_alphabet.len()) {
            return Err(Error::AlphabetMismatch(format!(
                "distortion matrix must be {}x{}",
                x_alphabet.len(),
                xhat_alphabet.len()
            )));
        }
        for (x, row) in d.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Precondition(format!(
                    "distortions must be finite and nonnegative (row {x})"
                )));
            }
            if !row.contains(&0.0) {
                return Err(Error::Precondition(format!("distortion row {x} has no zero")));
            }
        }
        Ok(Distortion { x_alphabet, xhat_alphabet, d })
    }

    /// `d(x, xhat) = [x != xhat]` on a common alphabet.
    pub fn hamming(alphabet: &Alphabet) -> Self {
        let k = alphabet.len();
        let d = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Distortion { x_alphabet: alphabet.clone(), xhat_alphabet: alphabet.clone(), d }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: DistortionFile = serde_json::from_str(text)?;
        Distortion::new(Alphabet::new(f.x_alphabet)?, Alphabet::new(f.xhat_alphabet)?, f.d)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(DistortionFile {
            x_alphabet: self.x_alphabet.symbols().to_vec(),
            xhat_alphabet: self.xhat_alphabet.symbols().to_vec(),
            d: self.d.clone(),
        })
        .expect("plain data serializes")
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn xhat_alphabet(&self) -> &Alphabet {
        &self.xhat_alphabet
    }

    pub fn get(&self, x: usize, xhat: usize) -> f64 {
        self.d[x][xhat]
    }

    /// Per-letter average distortion between two equal-length tuples.
    pub fn tuple(&self, xs: &[usize], xhats: &[usize]) -> f64 {
        debug_assert_eq!(xs.len(), xhats.len());
        let total: f64 = xs.iter().zip(xhats).map(|(&a, &b)| self.d[a][b]).sum();
        total / xs.len() as f64
    }

    /// `min_xhat E_Q d(X, xhat)`; any level at or above it costs zero rate.
    pub fn max_useful_level(&self, q: &[f64]) -> f64 {
        (0..self.xhat_alphabet.len())
            .map(|j| q.iter().enumerate().map(|(x, &w)| w * self.d[x][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Stopping rules for Blahut-Arimoto.
#[derive(Debug, Clone, Copy)]
pub struct RdConfig {
    pub max_iters: usize,
    /// Certified gap between the upper and lower rate bounds.
    pub tol: f64,
}

impl Default for RdConfig {
    fn default() -> Self {
        RdConfig { max_iters: 100_000, tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct RdSolution {
    /// Certified lower bound on `R(Q,D)`; within `residual` of the true value.
    pub rate: f64,
    pub residual: f64,
    /// Slope parameter of the final iterate (`inf` at zero distortion).
    pub slope: f64,
    /// Reproduction marginal.
    pub output: Vec<f64>,
    /// `dR/dQ(x)` up to an additive constant.
    pub gradient: Vec<f64>,
    pub iterations: usize,
}

struct SlopeRun {
    r: Vec<f64>,
    log_z: Vec<f64>,
    /// `-sum Q log Z - log c_max`, the dual value before the `-sD` term.
    dual: f64,
    /// Mutual information of the final channel.
    info: f64,
    distortion: f64,
    iterations: usize,
    gap: f64,
}

fn kernel(dist: &Distortion, s: f64) -> Vec<Vec<f64>> {
    dist.d
        .iter()
        .map(|row| {
            row.iter()
                .map(|&d| if s.is_infinite() { (d == 0.0) as u8 as f64 } else { (-s * d).exp2() })
                .collect()
        })
        .collect()
}

fn run_slope(
    q: &[f64],
    dist: &Distortion,
    s: f64,
    mut r: Vec<f64>,
    tol: f64,
    budget: usize,
) -> SlopeRun {
    let a = kernel(dist, s);
    let (nx, nh) = (q.len(), r.len());
    let mut z = vec![0.0; nx];
    let mut c = vec![0.0; nh];
    let mut iterations = 0;
    loop {
        for x in 0..nx {
            z[x] = (0..nh).map(|j| r[j] * a[x][j]).sum();
        }
        c.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..nx {
            if q[x] > 0.0 {
                for j in 0..nh {
                    c[j] += q[x] * a[x][j] / z[x];
                }
            }
        }
        let cmax = c.iter().copied().fold(0.0, f64::max);
        let mean: f64 = (0..nh)
            .filter(|&j| r[j] > 0.0 && c[j] > 0.0)
            .map(|j| r[j] * c[j] * c[j].log2())
            .sum();
        let gap = cmax.log2() - mean;
        if gap <= tol || iterations >= budget {
            let sum_qlogz: f64 = (0..nx).filter(|&x| q[x] > 0.0).map(|x| q[x] * z[x].log2()).sum();
            let mut distortion = 0.0;
            for x in 0..nx {
                if q[x] > 0.0 {
                    let num: f64 = (0..nh).map(|j| r[j] * a[x][j] * dist.d[x][j]).sum();
                    distortion += q[x] * num / z[x];
                }
            }
            let scaled = if s.is_infinite() { 0.0 } else { s * distortion };
            return SlopeRun {
                log_z: z.iter().map(|v| v.log2()).collect(),
                dual: -sum_qlogz - cmax.log2(),
                info: (-scaled - sum_qlogz - mean).max(0.0),
                distortion,
                r,
                iterations,
                gap,
            };
        }
        for j in 0..nh {
            r[j] *= c[j];
        }
        iterations += 1;
    }
}

fn check_inputs(q: &[f64], dist: &Distortion, level: f64) -> Result<()> {
    if q.len() != dist.x_alphabet.len() {
        return Err(Error::AlphabetMismatch("source and distortion alphabets differ".into()));
    }
    if !(level >= 0.0) {
        return Err(Error::Precondition(format!("distortion level must be nonnegative, got {level}")));
    }
    Ok(())
}

/// `R(Q,D)` with a certified residual, by Blahut-Arimoto at a bisected slope.
/// `warm` seeds the reproduction marginal.
pub fn rd_solve(
    q: &[f64],
    dist: &Distortion,
    level: f64,
    cfg: RdConfig,
    warm: Option<&[f64]>,
) -> Result<RdSolution> {
    check_inputs(q, dist, level)?;
    let nh = dist.xhat_alphabet.len();
    let dmax = dist.max_useful_level(q);
    if level >= dmax {
        let best = (0..nh)
            .min_by(|&a, &b| {
                let ea: f64 = q.iter().enumerate().map(|(x, w)| w * dist.d[x][a]).sum();
                let eb: f64 = q.iter().enumerate().map(|(x, w)| w * dist.d[x][b]).sum();
                ea.total_cmp(&eb)
            })
            .expect("nonempty reproduction alphabet");
        let mut output = vec![0.0; nh];
        output[best] = 1.0;
        return Ok(RdSolution {
            rate: 0.0,
            residual: 0.0,
            slope: 0.0,
            output,
            gradient: vec![0.0; q.len()],
            iterations: 0,
        });
    }
    let start = match warm {
        Some(w) if w.len() == nh && w.iter().all(|&v| v > 0.0) => w.to_vec(),
        _ => vec![1.0 / nh as f64; nh],
    };
    let inner_tol = cfg.tol * 0.1;
    let mut used = 0usize;
    let budget = |run: &SlopeRun, used: &mut usize| -> Result<()> {
        *used += run.iterations;
        if run.gap > inner_tol {
            return Err(Error::NonConvergence { iterations: *used, residual: run.gap });
        }
        Ok(())
    };

    if level == 0.0 {
        let run = run_slope(q, dist, f64::INFINITY, start, inner_tol, cfg.max_iters);
        budget(&run, &mut used)?;
        return Ok(RdSolution {
            rate: run.dual,
            residual: (run.info - run.dual).max(0.0),
            slope: f64::INFINITY,
            gradient: run.log_z.iter().map(|v| -v).collect(),
            output: run.r,
            iterations: used,
        });
    }

    // Lower end: the zero-rate point (dmax, 0). Upper end found by doubling.
    let mut lo: Option<(f64, SlopeRun)> = None;
    let mut s = 1.0;
    let hi = loop {
        let run = run_slope(q, dist, s, start.clone(), inner_tol, cfg.max_iters - used.min(cfg.max_iters));
        budget(&run, &mut used)?;
        if run.distortion <= level {
            break (s, run);
        }
        lo = Some((s, run));
        s *= 2.0;
        if s > 1e6 {
            let run = run_slope(q, dist, f64::INFINITY, start.clone(), inner_tol, cfg.max_iters);
            budget(&run, &mut used)?;
            break (f64::INFINITY, run);
        }
    };
    let (mut s_hi, mut hi) = hi;

    let bounds = |lo: &Option<(f64, SlopeRun)>, s_hi: f64, hi: &SlopeRun| -> (f64, f64) {
        let dual_at = |s: f64, run: &SlopeRun| {
            if s.is_infinite() {
                run.dual
            } else {
                run.dual - s * level
            }
        };
        let mut lower = dual_at(s_hi, hi);
        let (d_lo, i_lo) = match lo {
            Some((s_lo, run)) => {
                lower = lower.max(dual_at(*s_lo, run));
                (run.distortion, run.info)
            }
            None => (dmax, 0.0),
        };
        let upper = if hi.distortion >= level || d_lo <= hi.distortion {
            hi.info
        } else {
            let t = (level - hi.distortion) / (d_lo - hi.distortion);
            (1.0 - t) * hi.info + t * i_lo
        };
        (lower.max(0.0), upper)
    };

    for _ in 0..200 {
        let (lower, upper) = bounds(&lo, s_hi, &hi);
        if upper - lower <= cfg.tol {
            break;
        }
        let s_lo = lo.as_ref().map_or(0.0, |(v, _)| *v);
        let mid = if s_hi.is_infinite() {
            (s_lo * 2.0).max(1.0)
        } else {
            0.5 * (s_lo + s_hi)
        };
        if !s_hi.is_infinite() && (mid <= s_lo || mid >= s_hi) {
            break;
        }
        let seed = hi.r.clone();
        let run = run_slope(q, dist, mid, seed, inner_tol, cfg.max_iters - used.min(cfg.max_iters));
        budget(&run, &mut used)?;
        if run.distortion <= level {
            s_hi = mid;
            hi = run;
        } else {
            lo = Some((mid, run));
        }
    }
    let (lower, upper) = bounds(&lo, s_hi, &hi);
    let residual = (upper - lower).max(0.0);
    if residual > cfg.tol {
        return Err(Error::NonConvergence { iterations: used, residual });
    }
    // Gradient from the iterate whose slope is nearest the supporting line.
    let pick = match &lo {
        Some((s_lo, run)) if hi.distortion < level && level - hi.distortion > run.distortion - level => {
            (*s_lo, run)
        }
        _ => (s_hi, &hi),
    };
    Ok(RdSolution {
        rate: lower,
        residual,
        slope: pick.0,
        gradient: pick.1.log_z.iter().map(|v| -v).collect(),
        output: pick.1.r.clone(),
        iterations: used,
    })
}

/// `R(Q,D)` in bits.
pub fn rd_function(q: &Pmf, dist: &Distortion, level: f64) -> Result<f64> {
    Ok(rd_solve(q.probs(), dist, level, RdConfig::default(), None)?.rate)
}

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// The `x` in `[0, 1/2]` with `h(x) = y`, by bisection to `1e-12`.
pub fn binary_entropy_inverse(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed form of the Renyi rate-distortion function for a Bernoulli(p)
/// source under Hamming distortion.
pub fn binary_hamming_renyi_rd(p: f64, level: f64, rho: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "p must lie in (0,1)");
    let src = make_pmf(Alphabet::indexed(2), &[p, 1.0 - p]).expect("valid Bernoulli");
    let h = renyi_entropy(&src, rho);
    if level < binary_entropy_inverse(h) {
        h - binary_entropy(level)
    } else {
        0.0
    }
}

/// Settings for the simplex search behind [`renyi_rd`].
#[derive(Debug, Clone, Copy)]
pub struct RenyiRdConfig {
    pub restarts: usize,
    pub seed: u64,
    pub ascent: AscentConfig,
    pub rd: RdConfig,
}

impl Default for RenyiRdConfig {
    fn default() -> Self {
        RenyiRdConfig {
            restarts: 20,
            seed: 0,
            ascent: AscentConfig { max_iters: 500, tol: 1e-7, initial_step: 1.0, min_step: 1e-12 },
            rd: RdConfig { max_iters: 100_000, tol: 1e-10 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenyiRdSolution {
    pub value: f64,
    pub maximizer: Pmf,
    /// Restarts whose ascent met the gap tolerance.
    pub converged_restarts: usize,
}

/// `R(Q,D) - D(Q||P)/rho`.
pub fn renyi_rd_objective(p: &Pmf, q: &Pmf, dist: &Distortion, level: f64, rho: f64) -> Result<f64> {
    p.same_alphabet(q)?;
    let r = rd_function(q, dist, level)?;
    Ok(r - kl_divergence(q.probs(), p.probs()) / rho)
}

/// `max_Q R(Q,D) - D(Q||P)/rho` with the default search settings.
pub fn renyi_rd(p: &Pmf, dist: &Distortion, level: f64, rho: f64) -> Result<f64> {
    Ok(renyi_rd_with(p, dist, level, rho, RenyiRdConfig::default())?.value)
}

/// Exponentiated-gradient search over `supp(P)` from the tilt of `P`, from `P`
/// itself, and from seeded random points.
pub fn renyi_rd_with(
    p: &Pmf,
    dist: &Distortion,
    level: f64,
    rho: f64,
    cfg: RenyiRdConfig,
) -> Result<RenyiRdSolution> {
    if !(rho > 0.0) {
        return Err(Error::Precondition(format!("rho must be positive, got {rho}")));
    }
    check_inputs(p.probs(), dist, level)?;
    let support = p.support();
    let ps: Vec<f64> = support.iter().map(|&i| p.prob(i)).collect();
    let k = p.len();
    let embed = |w: &[f64]| {
        let mut full = vec![0.0; k];
        for (j, &i) in support.iter().enumerate() {
            full[i] = w[j];
        }
        full
    };

    let mut starts: Vec<Vec<f64>> = vec![support.iter().map(|&i| tilted(p, rho).prob(i)).collect(), ps.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while starts.len() < cfg.restarts.max(1) {
        starts.push((0..ps.len()).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect());
    }
    starts.truncate(cfg.restarts.max(1));

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = 0;
    let mut failure: Option<Error> = None;
    for start in starts {
        let mut warm: Option<Vec<f64>> = None;
        let mut err: Option<Error> = None;
        let eval = |w: &[f64]| {
            let full = embed(w);
            match rd_solve(&full, dist, level, cfg.rd, warm.as_deref()) {
                Ok(sol) => {
                    if sol.output.iter().all(|&v| v > 0.0) {
                        warm = Some(sol.output.clone());
                    }
                    let value = sol.rate - kl_divergence(w, &ps) / rho;
                    let grad = w
                        .iter()
                        .zip(&ps)
                        .enumerate()
                        .map(|(j, (&q, &pp))| {
                            sol.gradient[support[j]] - ((q / pp).log2() + LOG2_E) / rho
                        })
                        .collect();
                    (value, grad)
                }
                Err(e) => {
                    err.get_or_insert(e);
                    (f64::NEG_INFINITY, vec![0.0; w.len()])
                }
            }
        };
        let run = ascend(start, eval, cfg.ascent);
        if let Some(e) = err {
            failure.get_or_insert(e);
        }
        if !run.value.is_finite() {
            continue;
        }
        if run.converged {
            converged += 1;
        }
        if best.as_ref().is_none_or(|(v, _)| run.value > *v) {
            best = Some((run.value, run.point));
        }
    }
    let Some((value, point)) = best else {
        return Err(failure.unwrap_or(Error::Stagnation { best: f64::NAN }));
    };
    if converged == 0 {
        return Err(Error::Stagnation { best: value });
    }
    Ok(RenyiRdSolution {
        value,
        maximizer: Pmf::new(p.alphabet().clone(), embed(&point)).expect("simplex point"),
        converged_restarts: converged,
    })
}
