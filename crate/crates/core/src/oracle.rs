//! Exact minimum moments by exhaustive search over set partitions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::prob::{condition_joint, JointPmf, Pmf};

/// Largest alphabet the search accepts.
pub const ORACLE_MAX_SYMBOLS: usize = 12;

/// Prefix length at which the search fans out to worker threads.
const SPLIT_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub min_moment: f64,
    pub argmin: Partition,
    pub blocks_used: usize,
}

/// Per-`y` optima and their `P_Y`-weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSiResult {
    pub min_moment: f64,
    /// `None` where `P_Y(y) = 0`.
    pub per_y: Vec<Option<OracleResult>>,
}

fn tie_slack(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

struct Search<'a> {
    probs: &'a [f64],
    rho: f64,
    max_blocks: usize,
    /// `suffix[i] = sum_{j >= i} p_j`
    suffix: Vec<f64>,
    labels: Vec<usize>,
    mass: Vec<f64>,
    size: Vec<usize>,
    best: f64,
    best_labels: Option<Vec<usize>>,
}

impl Search<'_> {
    fn partial(&self) -> f64 {
        self.mass
            .iter()
            .zip(&self.size)
            .map(|(&m, &s)| m * (s as f64).powf(self.rho))
            .sum()
    }

    // Adding a symbol to any block raises that block's term by at least the
    // symbol's own mass, which gives the pruning bound.
    fn dfs(&mut self, i: usize) {
        let k = self.probs.len();
        if self.partial() + self.suffix[i] >= self.best - tie_slack(self.best) {
            return;
        }
        if i == k {
            self.best = self.partial();
            self.best_labels = Some(self.labels.clone());
            return;
        }
        let open = self.mass.len();
        let p = self.probs[i];
        for b in 0..=open.min(self.max_blocks - 1) {
            if b == open {
                self.mass.push(p);
                self.size.push(1);
            } else {
                self.mass[b] += p;
                self.size[b] += 1;
            }
            self.labels.push(b);
            self.dfs(i + 1);
            self.labels.pop();
            if b == open {
                self.mass.pop();
                self.size.pop();
            } else {
                self.mass[b] -= p;
                self.size[b] -= 1;
            }
        }
    }
}

fn prefixes(len: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for prefix in out {
            let open = prefix.iter().max().map_or(0, |&m| m + 1);
            for b in 0..=open.min(max_blocks - 1) {
                let mut v = prefix.clone();
                v.push(b);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn search_from(probs: &[f64], rho: f64, max_blocks: usize, prefix: &[usize]) -> Option<(f64, Vec<usize>)> {
    let k = probs.len();
    let mut suffix = vec![0.0; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] + probs[i];
    }
    let mut s = Search {
        probs,
        rho,
        max_blocks,
        suffix,
        labels: Vec::with_capacity(k),
        mass: Vec::new(),
        size: Vec::new(),
        best: f64::INFINITY,
        best_labels: None,
    };
    for (i, &b) in prefix.iter().enumerate() {
        if b == s.mass.len() {
            s.mass.push(probs[i]);
            s.size.push(1);
        } else {
            s.mass[b] += probs[i];
            s.size[b] += 1;
        }
        s.labels.push(b);
    }
    s.dfs(prefix.len());
    s.best_labels.map(|l| (s.best, l))
}

/// Minimum of `E|f^{-1}(f(X))|^rho` over all maps into `m` descriptions.
/// Ties go to the lexicographically smallest restricted growth string.
pub fn exact_min_moment(p: &Pmf, rho: f64, m: u64) -> Result<OracleResult> {
    let k = p.len();
    if k > ORACLE_MAX_SYMBOLS {
        return Err(Error::CapExceeded { needed: k as u128, cap: ORACLE_MAX_SYMBOLS });
    }
    if m == 0 {
        return Err(Error::Precondition("at least one description is needed".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::Precondition(format!("rho must be positive, got {rho}")));
    }
    let max_blocks = (m.min(k as u64)) as usize;
    let probs = p.probs();
    let depth = SPLIT_DEPTH.min(k);
    // results come back in prefix order, which is lexicographic
    let found: Vec<Option<(f64, Vec<usize>)>> = prefixes(depth, max_blocks)
        .par_iter()
        .map(|prefix| search_from(probs, rho, max_blocks, prefix))
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for cand in found.into_iter().flatten() {
        match &best {
            Some((v, _)) if cand.0 >= v - tie_slack(*v) => {}
            _ => best = Some(cand),
        }
    }
    let (value, labels) = best.expect("some partition exists");
    let argmin = Partition::from_labels(p.alphabet().clone(), &labels)?;
    Ok(OracleResult { min_moment: value, blocks_used: argmin.num_blocks(), argmin })
}

/// The side-information problem separates over `y`, so each conditional law
/// is minimized on its own.
pub fn exact_min_moment_si(j: &JointPmf, rho: f64, m: u64) -> Result<OracleSiResult> {
    let (py, channel) = condition_joint(j);
    let per_y = (0..j.ny())
        .map(|y| match channel.row_pmf(y) {
            Some(q) if py.prob(y) > 0.0 => exact_min_moment(&q, rho, m).map(Some),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    let min_moment = per_y
        .iter()
        .enumerate()
        .filter_map(|(y, r)| r.as_ref().map(|r| py.prob(y) * r.min_moment))
        .sum();
    Ok(OracleSiResult { min_moment, per_y })
}

/// True when the partition gives the `m - 1` most likely symbols their own
/// blocks and lumps everything else together. Probability ties are broken
/// by index.
pub fn is_atypical_grouping(part: &Partition, p: &Pmf, m: u64) -> bool {
    let k = p.len();
    let top = (m as usize).saturating_sub(1).min(k);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p.prob(b).total_cmp(&p.prob(a)).then(a.cmp(&b)));
    let rest = k - top;
    let singles_ok = order[..top].iter().all(|&x| part.block_size_of(x) == 1);
    let lumped = rest == 0
        || order[top..].iter().all(|&x| part.block_of()[x] == part.block_of()[order[top]]);
    singles_ok && lumped
}
