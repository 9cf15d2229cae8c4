//! Method of types: compositions, class sizes, and ranking inside a class.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::Result;
use crate::prob::{check_cap, tuple_cap, Alphabet, Pmf};

/// The empirical composition of an `n`-tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeDescriptor {
    alphabet: Alphabet,
    counts: Vec<u32>,
}

impl TypeDescriptor {
    pub fn new(alphabet: Alphabet, counts: Vec<u32>) -> Self {
        assert_eq!(alphabet.len(), counts.len(), "one count per symbol");
        TypeDescriptor { alphabet, counts }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    /// `|T_Q|`, the multinomial coefficient.
    pub fn class_size(&self) -> BigUint {
        multinomial(&self.counts)
    }

    /// Probability of any single sequence of this type under IID `p`.
    pub fn sequence_probability(&self, p: &Pmf) -> f64 {
        sequence_probability(&self.counts, p.probs())
    }

    /// The type as a distribution.
    pub fn empirical(&self) -> Pmf {
        let n = self.n() as f64;
        let probs = self.counts.iter().map(|&c| c as f64 / n).collect();
        Pmf::new(self.alphabet.clone(), probs).expect("counts sum to n")
    }
}

/// `prod_a p(a)^{counts(a)}`, zero when a used symbol has no mass.
pub(crate) fn sequence_probability(counts: &[u32], probs: &[f64]) -> f64 {
    let mut log = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        if c > 0 {
            if p == 0.0 {
                return 0.0;
            }
            log += c as f64 * p.ln();
        }
    }
    log.exp()
}

/// Number of compositions of `n` into `k` parts, `C(n+k-1, k-1)`.
pub fn count_compositions(n: usize, k: usize) -> u128 {
    if k == 0 {
        return (n == 0) as u128;
    }
    let mut r: u128 = 1;
    for i in 1..k as u128 {
        r = r * (n as u128 + i) / i;
    }
    r
}

/// All compositions of `n` into `k` parts in lexicographic order.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(n as u32, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Every type of `n`-tuples over the alphabet, lexicographic in the counts.
pub fn enumerate_types(n: usize, alphabet: &Alphabet) -> Result<Vec<TypeDescriptor>> {
    check_cap(count_compositions(n, alphabet.len()), tuple_cap())?;
    Ok(compositions(n, alphabet.len())
        .into_iter()
        .map(|c| TypeDescriptor::new(alphabet.clone(), c))
        .collect())
}

/// `(sum c)! / prod c!`.
pub fn multinomial(counts: &[u32]) -> BigUint {
    let mut r = BigUint::one();
    let mut total = 0u64;
    for &c in counts {
        for j in 1..=c as u64 {
            total += 1;
            r = r * total / j;
        }
    }
    r
}

pub fn type_of(seq: &[usize], k: usize) -> Vec<u32> {
    let mut counts = vec![0u32; k];
    for &s in seq {
        counts[s] += 1;
    }
    counts
}

/// Lexicographic rank of `seq` among the sequences sharing its type.
pub fn rank_in_class(seq: &[usize], k: usize) -> BigUint {
    let mut counts = type_of(seq, k);
    let mut size = multinomial(&counts);
    let mut rank = BigUint::zero();
    let mut len = seq.len() as u64;
    for &s in seq {
        for &c in counts.iter().take(s) {
            if c > 0 {
                rank += &size * c / len;
            }
        }
        size = size * counts[s] / len;
        counts[s] -= 1;
        len -= 1;
    }
    rank
}

/// Inverse of [`rank_in_class`].
pub fn unrank_in_class(rank: &BigUint, counts: &[u32]) -> Vec<usize> {
    let mut counts = counts.to_vec();
    let mut len: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut size = multinomial(&counts);
    let mut rank = rank.clone();
    assert!(rank < size, "rank outside the type class");
    let mut out = Vec::with_capacity(len as usize);
    while len > 0 {
        for a in 0..counts.len() {
            if counts[a] == 0 {
                continue;
            }
            let block = &size * counts[a] / len;
            if rank < block {
                out.push(a);
                size = block;
                counts[a] -= 1;
                len -= 1;
                break;
            }
            rank -= block;
        }
    }
    out
}

pub(crate) fn to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}
