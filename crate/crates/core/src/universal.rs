//! Distribution-free block encoders built from type classes and V-shells.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use num_bigint::BigUint;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use num_integer::Integer;
use rayon::prelude::*;

use crate::encoder::{SiTaskEncoder, TaskEncoder};
use crate::error::{Error, Result};
use crate::measures::{conditional_renyi, renyi_entropy};
use crate::prob::{check_cap, tuple_cap, tuple_count, tuple_digits, Alphabet, JointPmf, Pmf};
use crate::types::{
    compositions, count_compositions, multinomial, rank_in_class, sequence_probability, to_f64,
    type_of, TypeDescriptor,
};

/// Block length, rate, and the description count `M = floor(2^{nR})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCodeParams {
    n: usize,
    rate: f64,
    m: u64,
}

impl BlockCodeParams {
    pub fn new(n: usize, rate: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("block length must be at least 1".into()));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Precondition(format!("rate must be nonnegative, got {rate}")));
        }
        let exp = n as f64 * rate;
        if exp >= 63.0 {
            return Err(Error::Precondition(format!("2^(nR) = 2^{exp} descriptions is too many")));
        }
        // absorb rounding in n*R before taking the floor
        let m = (exp.exp2() * (1.0 + 1e-12)).floor() as u64;
        Ok(BlockCodeParams { n, rate, m: m.max(1) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn m(&self) -> u64 {
        self.m
    }
}

/// How type classes are cut into chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChunkPolicy {
    /// Chunks of size at most `ceil(|T| 2^{-n(R-d)})` and no more chunks than
    /// that requires.
    ProofCap,
    /// Starts from `ProofCap`, then spends the unused descriptions by splitting
    /// whichever class currently has the largest chunk (lowest index on ties).
    #[default]
    FillBudget,
}

/// `|X| log(n+1) / n`, the slack used when sizing chunks.
pub fn construction_penalty(n: usize, alphabet_size: usize) -> f64 {
    alphabet_size as f64 * ((n + 1) as f64).log2() / n as f64
}

/// `(1 + (1 + 1/rho)|X| log(n+1)) / n`.
pub fn universal_penalty(n: usize, alphabet_size: usize, rho: f64) -> f64 {
    (1.0 + (1.0 + 1.0 / rho) * alphabet_size as f64 * ((n + 1) as f64).log2()) / n as f64
}

/// `(1 + (1 + 1/rho)|X||Y| log(n+1) + |X| log(n+1)/rho) / n`.
pub fn universal_si_penalty(n: usize, x_size: usize, y_size: usize, rho: f64) -> f64 {
    let l = ((n + 1) as f64).log2();
    (1.0 + (1.0 + 1.0 / rho) * (x_size * y_size) as f64 * l + x_size as f64 * l / rho) / n as f64
}

/// `1 + 2^{-n rho (R - H - delta_n)}`.
pub fn universal_moment_bound(n: usize, rate: f64, rho: f64, p: &Pmf) -> f64 {
    let d = universal_penalty(n, p.len(), rho);
    1.0 + (-(n as f64) * rho * (rate - renyi_entropy(p, rho) - d)).exp2()
}

/// The side-information analogue with the conditional entropy.
pub fn universal_si_moment_bound(n: usize, rate: f64, rho: f64, j: &JointPmf) -> f64 {
    let d = universal_si_penalty(n, j.nx(), j.ny(), rho);
    1.0 + (-(n as f64) * rho * (rate - conditional_renyi(j, rho) - d)).exp2()
}

/// Splits `size` items into `chunks` contiguous runs whose lengths differ by at most one.
pub(crate) fn chunk_of(rank: &BigUint, size: &BigUint, chunks: u64) -> u64 {
    let c = BigUint::from(chunks);
    let (q, r) = size.div_rem(&c);
    let long = &r * (&q + 1u32);
    let idx = if *rank < long {
        rank / (&q + 1u32)
    } else {
        &r + (rank - &long) / &q
    };
    idx.to_u64().expect("chunk index fits")
}

/// Length of chunk `idx`.
pub(crate) fn chunk_len(idx: u64, size: &BigUint, chunks: u64) -> BigUint {
    let (q, r) = size.div_rem(&BigUint::from(chunks));
    if BigUint::from(idx) < r {
        q + 1u32
    } else {
        q
    }
}

/// `sum over chunks of len^e`.
pub(crate) fn chunk_power_sum(size: &BigUint, chunks: u64, e: f64) -> f64 {
    let (q, r) = size.div_rem(&BigUint::from(chunks));
    let long = to_f64(&r);
    let short = chunks as f64 - long;
    let qf = to_f64(&q);
    let mut s = long * (qf + 1.0).powf(e);
    if qf > 0.0 {
        s += short * qf.powf(e);
    }
    s
}

fn max_chunk(size: &BigUint, chunks: u64) -> BigUint {
    size.div_ceil(&BigUint::from(chunks))
}

/// Chunk counts per class for a budget of `m` descriptions, with chunk sizes
/// capped at `ceil(|T| 2^{-exponent})`.
pub(crate) fn allocate_chunks(
    sizes: &[BigUint],
    exponent: f64,
    m: u64,
    policy: ChunkPolicy,
) -> Result<Vec<u64>> {
    let scale = (-exponent).exp2();
    let mut chunks = Vec::with_capacity(sizes.len());
    for t in sizes {
        if t.is_zero() {
            chunks.push(0);
            continue;
        }
        let cap_f = (to_f64(t) * scale).ceil().max(1.0);
        let c = if cap_f >= to_f64(t) {
            1
        } else {
            let cap = BigUint::from_f64(cap_f).expect("finite cap");
            t.div_ceil(&cap).to_u64().unwrap_or(u64::MAX)
        };
        chunks.push(c);
    }
    let used = chunks.iter().try_fold(0u64, |a, &c| a.checked_add(c)).unwrap_or(u64::MAX);
    if used > m {
        return Err(Error::Infeasible(format!(
            "{used} chunks are needed but only {m} descriptions are available"
        )));
    }
    if policy == ChunkPolicy::FillBudget {
        let mut left = m - used;
        let mut heap: BinaryHeap<(BigUint, Reverse<usize>)> = sizes
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.is_zero())
            .map(|(i, t)| (max_chunk(t, chunks[i]), Reverse(i)))
            .collect();
        while left > 0 {
            let Some((largest, Reverse(i))) = heap.pop() else { break };
            if largest <= BigUint::one() {
                break;
            }
            chunks[i] += 1;
            left -= 1;
            heap.push((max_chunk(&sizes[i], chunks[i]), Reverse(i)));
        }
    }
    Ok(chunks)
}

/// The IID universal encoder on `n`-tuples, held implicitly per type class.
#[derive(Debug, Clone)]
pub struct UniversalEncoder {
    params: BlockCodeParams,
    alphabet: Alphabet,
    policy: ChunkPolicy,
    types: Vec<Vec<u32>>,
    sizes: Vec<BigUint>,
    chunks: Vec<u64>,
    offsets: Vec<u64>,
    index: HashMap<Vec<u32>, usize>,
}

/// Builds the universal encoder with the given chunk policy.
pub fn build_universal_encoder(
    params: BlockCodeParams,
    alphabet: &Alphabet,
    policy: ChunkPolicy,
) -> Result<UniversalEncoder> {
    let (n, k) = (params.n, alphabet.len());
    check_cap(count_compositions(n, k), tuple_cap())?;
    let types = compositions(n, k);
    let sizes: Vec<BigUint> = types.iter().map(|c| multinomial(c)).collect();
    let exponent = n as f64 * (params.rate - construction_penalty(n, k));
    let chunks = allocate_chunks(&sizes, exponent, params.m, policy)?;
    let mut offsets = Vec::with_capacity(chunks.len());
    let mut acc = 0u64;
    for &c in &chunks {
        offsets.push(acc);
        acc += c;
    }
    let index = types.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    Ok(UniversalEncoder { params, alphabet: alphabet.clone(), policy, types, sizes, chunks, offsets, index })
}

impl UniversalEncoder {
    pub fn params(&self) -> BlockCodeParams {
        self.params
    }

    pub fn policy(&self) -> ChunkPolicy {
        self.policy
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn descriptions_used(&self) -> u64 {
        self.chunks.iter().sum()
    }

    /// `(type, |T_Q|, chunk count)` for every class.
    pub fn classes(&self) -> impl Iterator<Item = (TypeDescriptor, &BigUint, u64)> + '_ {
        self.types
            .iter()
            .zip(&self.sizes)
            .zip(&self.chunks)
            .map(|((t, s), &c)| (TypeDescriptor::new(self.alphabet.clone(), t.clone()), s, c))
    }

    /// Description (zero-based) of a tuple.
    pub fn encode(&self, seq: &[usize]) -> u64 {
        let (ti, rank) = self.locate(seq);
        self.offsets[ti] + chunk_of(&rank, &self.sizes[ti], self.chunks[ti])
    }

    /// `|f^{-1}(f(x^n))|`.
    pub fn fiber_size(&self, seq: &[usize]) -> BigUint {
        let (ti, rank) = self.locate(seq);
        let c = chunk_of(&rank, &self.sizes[ti], self.chunks[ti]);
        chunk_len(c, &self.sizes[ti], self.chunks[ti])
    }

    fn locate(&self, seq: &[usize]) -> (usize, BigUint) {
        assert_eq!(seq.len(), self.params.n, "tuple length must be n");
        let k = self.alphabet.len();
        let ti = self.index[&type_of(seq, k)];
        (ti, rank_in_class(seq, k))
    }

    /// Exact moment under IID `p`, summed per class without enumerating tuples.
    pub fn moment(&self, p: &Pmf, rho: f64) -> Result<f64> {
        if *p.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch("encoder and source alphabets differ".into()));
        }
        Ok(self
            .types
            .iter()
            .zip(&self.sizes)
            .zip(&self.chunks)
            .map(|((t, s), &c)| {
                let w = sequence_probability(t, p.probs());
                if w == 0.0 {
                    0.0
                } else {
                    w * chunk_power_sum(s, c, 1.0 + rho)
                }
            })
            .sum())
    }

    /// Explicit table over the lexicographic tuple alphabet.
    pub fn to_task_encoder(&self) -> Result<TaskEncoder> {
        let (k, n) = (self.alphabet.len(), self.params.n);
        let count = check_cap(tuple_count(k, n), tuple_cap())?;
        let assign: Vec<u64> = (0..count)
            .into_par_iter()
            .map(|i| self.encode(&tuple_digits(i, k, n)))
            .collect();
        TaskEncoder::new(self.alphabet.power(n)?, self.params.m, assign)
    }
}

/// One V-shell: per-`y` compositions of the `x` letters.
#[derive(Debug, Clone)]
struct Shell {
    cond: Vec<Vec<u32>>,
    size: BigUint,
    /// Sizes of the per-`y` subsequence classes, most significant first.
    radix: Vec<BigUint>,
}

#[derive(Debug, Clone)]
struct YTypeCode {
    shells: Vec<Shell>,
    chunks: Vec<u64>,
    offsets: Vec<u64>,
    index: HashMap<Vec<Vec<u32>>, usize>,
}

/// The side-information universal encoder: for every `y^n` an encoder of
/// `X^n` that cuts V-shells into chunks. It depends on `y^n` only through
/// its type.
#[derive(Debug, Clone)]
pub struct UniversalSiEncoder {
    params: BlockCodeParams,
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    policy: ChunkPolicy,
    y_types: Vec<Vec<u32>>,
    codes: Vec<YTypeCode>,
    index: HashMap<Vec<u32>, usize>,
}

fn product_of_compositions(parts: &[Vec<Vec<u32>>]) -> Vec<Vec<Vec<u32>>> {
    let mut out: Vec<Vec<Vec<u32>>> = vec![Vec::new()];
    for choices in parts {
        let mut next = Vec::with_capacity(out.len() * choices.len());
        for prefix in &out {
            for c in choices {
                let mut v = prefix.clone();
                v.push(c.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

pub fn build_universal_si_encoder(
    params: BlockCodeParams,
    x_alphabet: &Alphabet,
    y_alphabet: &Alphabet,
    policy: ChunkPolicy,
) -> Result<UniversalSiEncoder> {
    let (n, kx, ky) = (params.n, x_alphabet.len(), y_alphabet.len());
    check_cap(count_compositions(n, ky), tuple_cap())?;
    let y_types = compositions(n, ky);
    let exponent = n as f64 * (params.rate - construction_penalty(n, kx * ky));
    let codes = y_types
        .par_iter()
        .map(|yt| {
            let shell_count: u128 = yt.iter().map(|&m| count_compositions(m as usize, kx)).product();
            check_cap(shell_count, tuple_cap())?;
            let parts: Vec<Vec<Vec<u32>>> = yt.iter().map(|&m| compositions(m as usize, kx)).collect();
            let shells: Vec<Shell> = product_of_compositions(&parts)
                .into_iter()
                .map(|cond| {
                    let radix: Vec<BigUint> = cond.iter().map(|c| multinomial(c)).collect();
                    let size = radix.iter().product();
                    Shell { cond, size, radix }
                })
                .collect();
            let sizes: Vec<BigUint> = shells.iter().map(|s| s.size.clone()).collect();
            let chunks = allocate_chunks(&sizes, exponent, params.m, policy)?;
            let mut offsets = Vec::with_capacity(chunks.len());
            let mut acc = 0;
            for &c in &chunks {
                offsets.push(acc);
                acc += c;
            }
            let index = shells.iter().enumerate().map(|(i, s)| (s.cond.clone(), i)).collect();
            Ok(YTypeCode { shells, chunks, offsets, index })
        })
        .collect::<Result<Vec<_>>>()?;
    let index = y_types.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    Ok(UniversalSiEncoder {
        params,
        x_alphabet: x_alphabet.clone(),
        y_alphabet: y_alphabet.clone(),
        policy,
        y_types,
        codes,
        index,
    })
}

impl UniversalSiEncoder {
    pub fn params(&self) -> BlockCodeParams {
        self.params
    }

    pub fn policy(&self) -> ChunkPolicy {
        self.policy
    }

    /// Largest number of descriptions used for any `y^n`.
    pub fn descriptions_used(&self) -> u64 {
        self.codes.iter().map(|c| c.chunks.iter().sum::<u64>()).max().unwrap_or(0)
    }

    fn locate(&self, xs: &[usize], ys: &[usize]) -> (usize, usize, BigUint) {
        let (kx, ky) = (self.x_alphabet.len(), self.y_alphabet.len());
        let yi = self.index[&type_of(ys, ky)];
        let code = &self.codes[yi];
        let subs: Vec<Vec<usize>> = (0..ky)
            .map(|b| xs.iter().zip(ys).filter(|(_, &y)| y == b).map(|(&x, _)| x).collect())
            .collect();
        let cond: Vec<Vec<u32>> = subs.iter().map(|s| type_of(s, kx)).collect();
        let si = code.index[&cond];
        let shell = &code.shells[si];
        let mut rank = BigUint::zero();
        for (b, s) in subs.iter().enumerate() {
            rank = rank * &shell.radix[b] + rank_in_class(s, kx);
        }
        (yi, si, rank)
    }

    pub fn encode(&self, xs: &[usize], ys: &[usize]) -> u64 {
        let (yi, si, rank) = self.locate(xs, ys);
        let code = &self.codes[yi];
        code.offsets[si] + chunk_of(&rank, &code.shells[si].size, code.chunks[si])
    }

    /// Sorted fiber sizes of the encoder used for `y^n`.
    pub fn fiber_size_multiset(&self, ys: &[usize]) -> Vec<BigUint> {
        let code = &self.codes[self.index[&type_of(ys, self.y_alphabet.len())]];
        let mut out = Vec::new();
        for (s, &c) in code.shells.iter().zip(&code.chunks) {
            for i in 0..c {
                out.push(chunk_len(i, &s.size, c));
            }
        }
        out.sort();
        out
    }

    /// Exact moment under IID `P_XY`, grouped by `y`-type and shell.
    pub fn moment(&self, j: &JointPmf, rho: f64) -> Result<f64> {
        if *j.x_alphabet() != self.x_alphabet || *j.y_alphabet() != self.y_alphabet {
            return Err(Error::AlphabetMismatch("encoder and joint alphabets differ".into()));
        }
        let (kx, ky) = (self.x_alphabet.len(), self.y_alphabet.len());
        let cells: Vec<f64> = (0..kx).flat_map(|x| (0..ky).map(move |y| (x, y))).map(|(x, y)| j.get(x, y)).collect();
        let mut total = 0.0;
        for (yt, code) in self.y_types.iter().zip(&self.codes) {
            let count = to_f64(&multinomial(yt));
            for (shell, &c) in code.shells.iter().zip(&code.chunks) {
                let mut joint_counts = vec![0u32; kx * ky];
                for (b, comp) in shell.cond.iter().enumerate() {
                    for (a, &n_ab) in comp.iter().enumerate() {
                        joint_counts[a * ky + b] = n_ab;
                    }
                }
                let w = sequence_probability(&joint_counts, &cells);
                if w > 0.0 {
                    total += count * w * chunk_power_sum(&shell.size, c, 1.0 + rho);
                }
            }
        }
        Ok(total)
    }

    /// Explicit per-`y^n` tables over the tuple alphabets.
    pub fn to_si_task_encoder(&self) -> Result<SiTaskEncoder> {
        let (kx, ky, n) = (self.x_alphabet.len(), self.y_alphabet.len(), self.params.n);
        let nx = check_cap(tuple_count(kx, n), tuple_cap())?;
        let ny = check_cap(tuple_count(ky, n), tuple_cap())?;
        check_cap(nx as u128 * ny as u128, tuple_cap())?;
        let xa = self.x_alphabet.power(n)?;
        let per_y = (0..ny)
            .map(|yi| {
                let ys = tuple_digits(yi, ky, n);
                let assign = (0..nx).map(|xi| self.encode(&tuple_digits(xi, kx, n), &ys)).collect();
                TaskEncoder::new(xa.clone(), self.params.m, assign)
            })
            .collect::<Result<Vec<_>>>()?;
        SiTaskEncoder::new(self.y_alphabet.power(n)?, per_y)
    }
}
