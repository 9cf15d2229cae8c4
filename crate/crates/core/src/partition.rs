//! Set partitions, the counting identity `sum_x 1/L(x) = #blocks`, and the
//! budgeted partition construction.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::prob::Alphabet;

/// A cardinality cap `lambda(x)`, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lambda {
    Finite(u64),
    Infinite,
}

impl Lambda {
    /// True when the cap admits a block of `size` elements.
    pub fn admits(self, size: usize) -> bool {
        match self {
            Lambda::Finite(v) => size as u128 <= v as u128,
            Lambda::Infinite => true,
        }
    }

    /// `1/lambda`, with `1/inf = 0`.
    pub fn reciprocal(self) -> BigRational {
        match self {
            Lambda::Finite(v) => BigRational::new(BigInt::from(1), BigInt::from(v)),
            Lambda::Infinite => BigRational::zero(),
        }
    }
}

impl Ord for Lambda {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Lambda::Finite(a), Lambda::Finite(b)) => a.cmp(b),
            (Lambda::Finite(_), Lambda::Infinite) => Ordering::Less,
            (Lambda::Infinite, Lambda::Finite(_)) => Ordering::Greater,
            (Lambda::Infinite, Lambda::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Lambda {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Finite(v) => write!(f, "{v}"),
            Lambda::Infinite => write!(f, "inf"),
        }
    }
}

/// Per-symbol caps together with `mu = sum_x 1/lambda(x)` held exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    alphabet: Alphabet,
    lambda: Vec<Lambda>,
    mu: BigRational,
}

impl Budget {
    pub fn new(alphabet: Alphabet, lambda: Vec<Lambda>) -> Result<Self> {
        if lambda.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch(format!(
                "{} caps for {} symbols",
                lambda.len(),
                alphabet.len()
            )));
        }
        if lambda.contains(&Lambda::Finite(0)) {
            return Err(Error::Precondition("every cap must be at least 1".into()));
        }
        let mu = lambda.iter().map(|l| l.reciprocal()).sum();
        Ok(Budget { alphabet, lambda, mu })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn lambda(&self) -> &[Lambda] {
        &self.lambda
    }

    pub fn mu(&self) -> &BigRational {
        &self.mu
    }
}

/// A partition of an alphabet into disjoint nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    alphabet: Alphabet,
    block_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Blocks are given as symbol indices; they must be nonempty, disjoint and
    /// cover the alphabet.
    pub fn from_blocks(alphabet: Alphabet, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let k = alphabet.len();
        let mut block_of = vec![usize::MAX; k];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Precondition(format!("block {b} is empty")));
            }
            for &x in block {
                if x >= k {
                    return Err(Error::Precondition(format!("symbol index {x} out of range")));
                }
                if block_of[x] != usize::MAX {
                    return Err(Error::Precondition(format!("symbol {x} appears twice")));
                }
                block_of[x] = b;
            }
        }
        if block_of.contains(&usize::MAX) {
            return Err(Error::Precondition("blocks do not cover the alphabet".into()));
        }
        Ok(Partition { alphabet, block_of, blocks })
    }

    /// Groups symbols by label. Blocks are numbered in order of first
    /// appearance, so the labels become a restricted growth string.
    pub fn from_labels(alphabet: Alphabet, labels: &[usize]) -> Result<Self> {
        if labels.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch("one label per symbol".into()));
        }
        let mut renumber = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (x, &l) in labels.iter().enumerate() {
            let b = *renumber.entry(l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(x);
            block_of.push(b);
        }
        Ok(Partition { alphabet, block_of, blocks })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `L(x)`, the size of the block holding `x`.
    pub fn block_size_of(&self, x: usize) -> usize {
        self.blocks[self.block_of[x]].len()
    }

    /// Block index of every symbol, renumbered by first appearance.
    pub fn restricted_growth_string(&self) -> Vec<usize> {
        let mut seen = vec![usize::MAX; self.blocks.len()];
        let mut next = 0;
        self.block_of
            .iter()
            .map(|&b| {
                if seen[b] == usize::MAX {
                    seen[b] = next;
                    next += 1;
                }
                seen[b]
            })
            .collect()
    }

    /// `{"blocks": [["c","d"],["a"],["b"]]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let blocks: Vec<Vec<&str>> = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&x| self.alphabet.symbol(x)).collect())
            .collect();
        json!({ "blocks": blocks })
    }
}

/// `sum_x 1/L(x)` in exact arithmetic.
pub fn partition_identity(part: &Partition) -> BigRational {
    (0..part.alphabet.len())
        .map(|x| BigRational::new(BigInt::from(1), BigInt::from(part.block_size_of(x))))
        .sum()
}

/// Budgeted partition: symbols are ordered by `(lambda, index)`; those with
/// `lambda >= |X|` form the first block, and the rest are cut greedily into
/// prefixes whose length is the cap of their first element.
pub fn build_budget_partition(b: &Budget) -> Partition {
    let k = b.alphabet.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| b.lambda[x].cmp(&b.lambda[y]).then(x.cmp(&y)));
    let whole = Lambda::Finite(k as u64);
    let mut first: Vec<usize> = order.iter().copied().filter(|&x| b.lambda[x] >= whole).collect();
    first.sort_unstable();
    let rest: Vec<usize> = order.into_iter().filter(|&x| b.lambda[x] < whole).collect();

    let mut blocks = Vec::new();
    if !first.is_empty() {
        blocks.push(first);
    }
    let mut i = 0;
    while i < rest.len() {
        let size = match b.lambda[rest[i]] {
            Lambda::Finite(v) => v as usize,
            Lambda::Infinite => unreachable!("infinite caps sit in the first block"),
        };
        let end = (i + size).min(rest.len());
        blocks.push(rest[i..end].to_vec());
        i = end;
    }
    Partition::from_blocks(b.alphabet.clone(), blocks).expect("construction yields a partition")
}

/// `min_{alpha > 1} floor(alpha mu + log_alpha k + 2)`, searched by golden
/// section on `ln alpha` and also evaluated at `alpha = 2`.
pub fn subset_count_bound(mu: &BigRational, alphabet_size: usize) -> u64 {
    assert!(alphabet_size >= 1, "alphabet must be nonempty");
    let m = mu.to_f64().expect("finite mu");
    let ln_k = (alphabet_size as f64).ln();
    let floor = |v: f64| (v + 1e-9).floor() as u64;
    if alphabet_size == 1 {
        // only alpha -> 1+ matters
        return floor(m + 2.0);
    }
    let f = |t: f64| m * t.exp() + ln_k / t + 2.0;
    let mut best = f(std::f64::consts::LN_2);
    if m == 0.0 {
        // log_alpha k + 2 decreases towards 2 without attaining it
        return 2.max(floor(f(700.0)));
    }
    let (mut a, mut b) = (1e-12f64, 700.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if b - a < 1e-14 * b.max(1.0) {
            break;
        }
    }
    best = best.min(fc).min(fd);
    floor(best)
}
