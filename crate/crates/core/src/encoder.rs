//! Single-shot task encoders, their moments, and the budget construction.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{conditional_renyi, renyi_entropy, sundaresan_divergence};
use crate::partition::{build_budget_partition, Budget, Lambda, Partition};
use crate::prob::{condition_joint, Alphabet, JointPmf, Pmf};

/// A map from symbols to descriptions `0..M`. Descriptions are zero-based
/// here and one-based in JSON.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskEncoder {
    alphabet: Alphabet,
    m: u64,
    assign: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct EncoderFile {
    #[serde(rename = "M")]
    m: u64,
    assign: BTreeMap<String, u64>,
}

impl TaskEncoder {
    pub fn new(alphabet: Alphabet, m: u64, assign: Vec<u64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("at least one description is needed".into()));
        }
        if assign.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch("one description per symbol".into()));
        }
        if let Some(bad) = assign.iter().find(|&&a| a >= m) {
            return Err(Error::Precondition(format!("description {bad} not below M = {m}")));
        }
        Ok(TaskEncoder { alphabet, m, assign })
    }

    /// Every symbol gets its own description.
    pub fn singleton(alphabet: Alphabet) -> Self {
        let k = alphabet.len() as u64;
        TaskEncoder { alphabet, m: k, assign: (0..k).collect() }
    }

    /// Every symbol maps to description 0.
    pub fn constant(alphabet: Alphabet, m: u64) -> Self {
        let k = alphabet.len();
        TaskEncoder { alphabet, m: m.max(1), assign: vec![0; k] }
    }

    /// Block `i` of the partition becomes description `i`.
    pub fn from_partition(part: &Partition, m: u64) -> Result<Self> {
        if part.num_blocks() as u64 > m {
            return Err(Error::Precondition(format!(
                "{} blocks do not fit in {m} descriptions",
                part.num_blocks()
            )));
        }
        let assign = part.block_of().iter().map(|&b| b as u64).collect();
        Ok(TaskEncoder { alphabet: part.alphabet().clone(), m, assign })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn assign(&self) -> &[u64] {
        &self.assign
    }

    /// The nonempty fibers as a partition.
    pub fn partition(&self) -> Partition {
        let labels: Vec<usize> = self.assign.iter().map(|&a| a as usize).collect();
        Partition::from_labels(self.alphabet.clone(), &labels).expect("labels match alphabet")
    }

    /// `|f^{-1}(f(x))|` for every `x`.
    pub fn fiber_sizes(&self) -> Vec<usize> {
        let mut count: BTreeMap<u64, usize> = BTreeMap::new();
        for &a in &self.assign {
            *count.entry(a).or_default() += 1;
        }
        self.assign.iter().map(|a| count[a]).collect()
    }

    /// Number of nonempty fibers.
    pub fn descriptions_used(&self) -> usize {
        let mut used: Vec<u64> = self.assign.clone();
        used.sort_unstable();
        used.dedup();
        used.len()
    }

    /// `{"M": 8, "assign": {"a": 1, ...}}` with one-based descriptions.
    pub fn to_json(&self) -> serde_json::Value {
        let assign = self
            .assign
            .iter()
            .enumerate()
            .map(|(x, &a)| (self.alphabet.symbol(x).to_string(), a + 1))
            .collect();
        serde_json::to_value(EncoderFile { m: self.m, assign }).expect("plain data serializes")
    }

    pub fn from_json_str(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let f: EncoderFile = serde_json::from_str(text)?;
        if f.assign.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch("encoder table does not cover the alphabet".into()));
        }
        let mut assign = vec![0; alphabet.len()];
        for (sym, idx) in f.assign {
            let x = alphabet
                .index_of(&sym)
                .ok_or_else(|| Error::AlphabetMismatch(format!("unknown symbol {sym:?}")))?;
            if idx == 0 {
                return Err(Error::Precondition("descriptions are numbered from 1".into()));
            }
            assign[x] = idx - 1;
        }
        TaskEncoder::new(alphabet.clone(), f.m, assign)
    }
}

/// `sum_m P(f^{-1}(m)) |f^{-1}(m)|^rho`.
pub fn moment(enc: &TaskEncoder, p: &Pmf, rho: f64) -> Result<f64> {
    if enc.alphabet != *p.alphabet() {
        return Err(Error::AlphabetMismatch("encoder and source alphabets differ".into()));
    }
    Ok(moment_of(&enc.assign, p.probs(), rho))
}

pub(crate) fn moment_of(assign: &[u64], probs: &[f64], rho: f64) -> f64 {
    let mut fibers: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for (&a, &w) in assign.iter().zip(probs) {
        let e = fibers.entry(a).or_default();
        e.0 += w;
        e.1 += 1;
    }
    fibers.values().map(|&(w, n)| w * (n as f64).powf(rho)).sum()
}

/// Lower and upper bounds on the smallest achievable moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentBounds {
    pub lower: f64,
    /// Present only when `M > log|X| + 2`.
    pub upper: Option<f64>,
}

/// `(M - log|X| - 2)/4`, or `None` when it is not positive.
pub fn reduced_descriptions(m: u64, alphabet_size: usize) -> Option<f64> {
    let slack = m as f64 - (alphabet_size as f64).log2() - 2.0;
    (slack > 0.0).then(|| slack / 4.0)
}

fn check_descriptions(m: u64, alphabet_size: usize) -> Result<f64> {
    reduced_descriptions(m, alphabet_size).ok_or_else(|| {
        Error::Precondition(format!(
            "M = {m} must exceed log2|X| + 2 = {:.4}",
            (alphabet_size as f64).log2() + 2.0
        ))
    })
}

fn bounds_from_entropy(h: f64, rho: f64, m: u64, alphabet_size: usize) -> MomentBounds {
    let lower = (rho * (h - (m as f64).log2())).exp2();
    let upper = reduced_descriptions(m, alphabet_size).map(|mt| 1.0 + (rho * (h - mt.log2())).exp2());
    MomentBounds { lower, upper }
}

/// `2^{rho(H - log M)}` and `1 + 2^{rho(H - log Mt)}` with `H` the Renyi
/// entropy of order `1/(1+rho)`.
pub fn moment_bounds(p: &Pmf, rho: f64, m: u64) -> MomentBounds {
    bounds_from_entropy(renyi_entropy(p, rho), rho, m, p.len())
}

/// The same pair with the conditional entropy in place of `H`.
pub fn si_bounds(j: &JointPmf, rho: f64, m: u64) -> MomentBounds {
    bounds_from_entropy(conditional_renyi(j, rho), rho, m, j.nx())
}

/// Caps `lambda(x) = ceil(beta P(x)^{-1/(1+rho)})` with
/// `beta = 2 sum P^{1/(1+rho)} / (M - log|X| - 2)`, and `lambda = inf` where `P = 0`.
pub fn encoder_budget(p: &Pmf, rho: f64, m: u64) -> Result<Budget> {
    if !(rho > 0.0) {
        return Err(Error::Precondition(format!("rho must be positive, got {rho}")));
    }
    let slack = 4.0 * check_descriptions(m, p.len())?;
    let alpha = 1.0 / (1.0 + rho);
    let power_sum: f64 = p.probs().iter().filter(|&&v| v > 0.0).map(|v| v.powf(alpha)).sum();
    let beta = 2.0 * power_sum / slack;
    let lambda = p
        .probs()
        .iter()
        .map(|&v| {
            if v == 0.0 {
                Lambda::Infinite
            } else {
                let raw = (beta * v.powf(-alpha)).ceil();
                if raw >= u64::MAX as f64 {
                    Lambda::Finite(u64::MAX)
                } else {
                    Lambda::Finite((raw as u64).max(1))
                }
            }
        })
        .collect();
    Budget::new(p.alphabet().clone(), lambda)
}

/// The budget construction: caps from [`encoder_budget`], then the budgeted
/// partition, one description per block.
pub fn build_encoder(p: &Pmf, rho: f64, m: u64) -> Result<TaskEncoder> {
    let budget = encoder_budget(p, rho, m)?;
    let part = build_budget_partition(&budget);
    TaskEncoder::from_partition(&part, m)
}

/// Encoder designed for `q_design` and the moment bound it guarantees under
/// `p_true`: `1 + 2^{rho(H(P) + Delta(P||Q) - log Mt)}`, infinite when the
/// divergence is.
pub fn build_mismatched_encoder(
    p_true: &Pmf,
    q_design: &Pmf,
    rho: f64,
    m: u64,
) -> Result<(TaskEncoder, f64)> {
    p_true.same_alphabet(q_design)?;
    let enc = build_encoder(q_design, rho, m)?;
    let mt = reduced_descriptions(m, p_true.len()).expect("checked by build_encoder");
    let delta = sundaresan_divergence(p_true, q_design, 1.0 / (1.0 + rho));
    let bound = if delta.is_infinite() {
        f64::INFINITY
    } else {
        1.0 + (rho * (renyi_entropy(p_true, rho) + delta - mt.log2())).exp2()
    };
    Ok((enc, bound))
}

/// One encoder of `X` per value of `Y`, all sharing `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiTaskEncoder {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    m: u64,
    per_y: Vec<TaskEncoder>,
}

impl SiTaskEncoder {
    pub fn new(y_alphabet: Alphabet, per_y: Vec<TaskEncoder>) -> Result<Self> {
        let first = per_y
            .first()
            .ok_or_else(|| Error::Precondition("no per-y encoders".into()))?;
        if per_y.len() != y_alphabet.len() {
            return Err(Error::AlphabetMismatch("one encoder per y".into()));
        }
        let (xa, m) = (first.alphabet.clone(), first.m);
        if per_y.iter().any(|e| e.alphabet != xa || e.m != m) {
            return Err(Error::AlphabetMismatch("per-y encoders must share X and M".into()));
        }
        Ok(SiTaskEncoder { x_alphabet: xa, y_alphabet, m, per_y })
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn for_y(&self, y: usize) -> &TaskEncoder {
        &self.per_y[y]
    }

    pub fn assign(&self, x: usize, y: usize) -> u64 {
        self.per_y[y].assign[x]
    }
}

/// Runs [`build_encoder`] on every conditional `P_{X|Y=y}`; values of `y`
/// with no mass get the constant encoder.
pub fn build_si_encoder(j: &JointPmf, rho: f64, m: u64) -> Result<SiTaskEncoder> {
    let (_, cond) = condition_joint(j);
    let per_y: Vec<TaskEncoder> = (0..j.ny())
        .into_par_iter()
        .map(|y| match cond.row_pmf(y) {
            Some(row) => build_encoder(&row, rho, m),
            None => {
                check_descriptions(m, j.nx())?;
                Ok(TaskEncoder::constant(j.x_alphabet().clone(), m))
            }
        })
        .collect::<Result<_>>()?;
    SiTaskEncoder::new(j.y_alphabet().clone(), per_y)
}

/// `sum_y sum_m P_{XY}(f^{-1}(m,y), y) |f^{-1}(m,y)|^rho`.
pub fn moment_si(enc: &SiTaskEncoder, j: &JointPmf, rho: f64) -> Result<f64> {
    if enc.x_alphabet != *j.x_alphabet() || enc.y_alphabet != *j.y_alphabet() {
        return Err(Error::AlphabetMismatch("encoder and joint alphabets differ".into()));
    }
    Ok((0..j.ny())
        .map(|y| {
            let col: Vec<f64> = (0..j.nx()).map(|x| j.get(x, y)).collect();
            moment_of(&enc.per_y[y].assign, &col, rho)
        })
        .sum())
}
