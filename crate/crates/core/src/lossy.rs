//! Lossy task coding: greedy covers of type classes by distortion balls,
//! chunked into description sets.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::encoder::TaskEncoder;
use crate::error::{Error, Result};
use crate::measures::Distortion;
use crate::prob::{check_cap, tuple_cap, tuple_count, tuple_digits, Pmf};
use crate::types::{compositions, type_of, TypeDescriptor};
use crate::universal::{allocate_chunks, chunk_len, construction_penalty, BlockCodeParams, ChunkPolicy};

/// Slack on summed distortions when testing `d <= D`.
const LEVEL_SLACK: f64 = 1e-9;

/// An encoder `f` on source `n`-tuples with a reproduction set `phi(m)` for
/// every description. Tuples are indexed lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct LossyCodec {
    n: usize,
    m: u64,
    dist: Distortion,
    level: f64,
    assign: Vec<u64>,
    phi: Vec<Vec<usize>>,
}

/// All pairwise summed distortions between source and reproduction tuples.
struct Table {
    n: usize,
    nx: usize,
    nh: usize,
    sums: Vec<f64>,
}

impl Table {
    fn new(n: usize, dist: &Distortion) -> Result<Self> {
        let (kx, kh) = (dist.x_alphabet().len(), dist.xhat_alphabet().len());
        let nx = check_cap(tuple_count(kx, n), tuple_cap())?;
        let nh = check_cap(tuple_count(kh, n), tuple_cap())?;
        check_cap(nx as u128 * nh as u128, tuple_cap().saturating_mul(4))?;
        let hats: Vec<Vec<usize>> = (0..nh).map(|h| tuple_digits(h, kh, n)).collect();
        let sums = (0..nx)
            .into_par_iter()
            .flat_map_iter(|x| {
                let xs = tuple_digits(x, kx, n);
                hats.iter()
                    .map(move |hs| xs.iter().zip(hs).map(|(&a, &b)| dist.get(a, b)).sum::<f64>())
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Table { n, nx, nh, sums })
    }

    fn get(&self, x: usize, h: usize) -> f64 {
        self.sums[x * self.nh + h]
    }

    fn within(&self, x: usize, h: usize, threshold: f64) -> bool {
        self.get(x, h) <= threshold + LEVEL_SLACK
    }

    /// Distinct summed distortions at most `n D`, ascending.
    fn thresholds(&self, level: f64) -> Vec<f64> {
        let limit = self.n as f64 * level + LEVEL_SLACK;
        let mut v: Vec<f64> = self.sums.iter().copied().filter(|&s| s <= limit).collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= LEVEL_SLACK);
        v
    }
}

/// Greedy cover of `members` by reproduction tuples within summed distortion
/// `threshold`; the candidate covering most uncovered members wins, ties go
/// to the smaller index. Returned sorted.
fn greedy_cover(table: &Table, members: &[usize], threshold: f64) -> Vec<usize> {
    let words = members.len().div_ceil(64);
    let balls: Vec<Vec<u64>> = (0..table.nh)
        .map(|h| {
            let mut bits = vec![0u64; words];
            for (i, &x) in members.iter().enumerate() {
                if table.within(x, h, threshold) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            bits
        })
        .collect();
    let mut uncovered = vec![u64::MAX; words];
    if !members.len().is_multiple_of(64) {
        uncovered[words - 1] = (1u64 << (members.len() % 64)) - 1;
    }
    let mut left = members.len();
    let mut chosen = Vec::new();
    while left > 0 {
        let (best, gain) = balls
            .iter()
            .enumerate()
            .map(|(h, b)| (h, b.iter().zip(&uncovered).map(|(a, u)| (a & u).count_ones() as usize).sum::<usize>()))
            .fold((0, 0), |acc, c| if c.1 > acc.1 { c } else { acc });
        assert!(gain > 0, "every source tuple has a zero-distortion reproduction");
        for (u, b) in uncovered.iter_mut().zip(&balls[best]) {
            *u &= !b;
        }
        left -= gain;
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen
}

/// Greedy cover of the type class `q` at per-letter level `level`, as
/// reproduction tuple indices.
pub fn greedy_type_cover(q: &TypeDescriptor, dist: &Distortion, level: f64) -> Result<Vec<usize>> {
    if q.alphabet() != dist.x_alphabet() {
        return Err(Error::AlphabetMismatch("type and distortion alphabets differ".into()));
    }
    let n = q.n();
    let table = Table::new(n, dist)?;
    let k = q.alphabet().len();
    let members: Vec<usize> = (0..table.nx).filter(|&x| type_of(&tuple_digits(x, k, n), k) == q.counts()).collect();
    Ok(greedy_cover(&table, &members, n as f64 * level))
}

fn codec_at(
    table: &Table,
    classes: &[Vec<usize>],
    params: BlockCodeParams,
    dist: &Distortion,
    level: f64,
    threshold: f64,
    policy: ChunkPolicy,
) -> Result<LossyCodec> {
    let n = params.n();
    let covers: Vec<Vec<usize>> = classes.par_iter().map(|m| greedy_cover(table, m, threshold)).collect();
    let sizes: Vec<BigUint> = covers.iter().map(|c| BigUint::from(c.len())).collect();
    let exponent = n as f64 * (params.rate() - construction_penalty(n, dist.x_alphabet().len()));
    let chunks = allocate_chunks(&sizes, exponent, params.m(), policy)?;

    let mut phi: Vec<Vec<usize>> = Vec::new();
    for ((cover, size), &c) in covers.iter().zip(&sizes).zip(&chunks) {
        let mut start = 0;
        for i in 0..c {
            let len = chunk_len(i, size, c).to_usize().expect("cover fits in memory");
            phi.push(cover[start..start + len].to_vec());
            start += len;
        }
    }

    // A codeword shared by several sets stays only in the smallest of them.
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); table.nh];
    for (i, set) in phi.iter().enumerate() {
        for &h in set {
            holders[h].push(i);
        }
    }
    let mut removed: Vec<HashSet<usize>> = vec![HashSet::new(); phi.len()];
    let mut live: Vec<usize> = phi.iter().map(Vec::len).collect();
    for (h, hs) in holders.iter().enumerate() {
        if hs.len() < 2 {
            continue;
        }
        let keep = *hs.iter().min_by_key(|&&i| (live[i], i)).expect("nonempty");
        for &i in hs {
            if i != keep {
                removed[i].insert(h);
                live[i] -= 1;
            }
        }
    }
    let phi: Vec<Vec<usize>> = phi
        .into_iter()
        .zip(&removed)
        .map(|(set, gone)| set.into_iter().filter(|h| !gone.contains(h)).collect::<Vec<_>>())
        .filter(|set| !set.is_empty())
        .collect();

    let mut owner = vec![usize::MAX; table.nh];
    for (i, set) in phi.iter().enumerate() {
        for &h in set {
            owner[h] = i;
        }
    }
    let assign = (0..table.nx)
        .into_par_iter()
        .map(|x| {
            (0..table.nh)
                .filter(|&h| owner[h] != usize::MAX && table.within(x, h, threshold))
                .map(|h| owner[h])
                .min()
                .expect("covers reach every source tuple") as u64
        })
        .collect();
    Ok(LossyCodec { n, m: params.m(), dist: dist.clone(), level, assign, phi })
}

/// Builds a codec with the default chunk policy.
pub fn build_lossy_codec(n: usize, rate: f64, dist: &Distortion, level: f64) -> Result<LossyCodec> {
    build_lossy_codec_with(n, rate, dist, level, ChunkPolicy::default())
}

/// Builds the greedy codec at every attainable threshold up to `level`,
/// moving to a higher threshold only when its codec gives every source tuple
/// a reproduction set no larger than before. The result therefore never gets
/// worse as `level` grows.
pub fn build_lossy_codec_with(
    n: usize,
    rate: f64,
    dist: &Distortion,
    level: f64,
    policy: ChunkPolicy,
) -> Result<LossyCodec> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::Precondition(format!("distortion level must be nonnegative, got {level}")));
    }
    let params = BlockCodeParams::new(n, rate)?;
    let table = Table::new(n, dist)?;
    let kx = dist.x_alphabet().len();
    let types = compositions(n, kx);
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); types.len()];
    let type_index: std::collections::HashMap<&Vec<u32>, usize> = types.iter().enumerate().map(|(i, t)| (t, i)).collect();
    for x in 0..table.nx {
        classes[type_index[&type_of(&tuple_digits(x, kx, n), kx)]].push(x);
    }

    let mut best: Option<(LossyCodec, Vec<usize>)> = None;
    let mut last_err = None;
    for t in table.thresholds(level) {
        match codec_at(&table, &classes, params, dist, level, t, policy) {
            Ok(codec) => {
                let profile = codec.set_sizes();
                let better = match &best {
                    None => true,
                    Some((_, old)) => profile.iter().zip(old).all(|(a, b)| a <= b),
                };
                if better {
                    best = Some((codec, profile));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((mut codec, _)) => {
            codec.level = level;
            Ok(codec)
        }
        None => Err(last_err.unwrap_or_else(|| Error::Infeasible("no attainable distortion threshold".into()))),
    }
}

impl LossyCodec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn distortion(&self) -> &Distortion {
        &self.dist
    }

    /// Zero-based description of every source tuple.
    pub fn assign(&self) -> &[u64] {
        &self.assign
    }

    /// Reproduction tuple indices for each used description.
    pub fn phi(&self) -> &[Vec<usize>] {
        &self.phi
    }

    pub fn descriptions_used(&self) -> usize {
        self.phi.len()
    }

    /// `|phi(f(x^n))|` for every source tuple.
    pub fn set_sizes(&self) -> Vec<usize> {
        self.assign.iter().map(|&a| self.phi[a as usize].len()).collect()
    }

    /// Every source tuple has a reproduction within the level in its set.
    pub fn satisfies_fidelity(&self) -> bool {
        let (kx, kh) = (self.dist.x_alphabet().len(), self.dist.xhat_alphabet().len());
        let limit = self.n as f64 * self.level + LEVEL_SLACK;
        self.assign.par_iter().enumerate().all(|(x, &a)| {
            let xs = tuple_digits(x, kx, self.n);
            self.phi[a as usize].iter().any(|&h| {
                let hs = tuple_digits(h, kh, self.n);
                xs.iter().zip(&hs).map(|(&u, &v)| self.dist.get(u, v)).sum::<f64>() <= limit
            })
        })
    }

    pub fn sets_disjoint(&self) -> bool {
        let mut seen = HashSet::new();
        self.phi.iter().flatten().all(|h| seen.insert(*h))
    }

    /// The encoder `f` as a task encoder on source tuples.
    pub fn task_encoder(&self) -> Result<TaskEncoder> {
        TaskEncoder::new(self.dist.x_alphabet().power(self.n)?, self.m, self.assign.clone())
    }
}

/// `sum_{x^n} P^n(x^n) |phi(f(x^n))|^rho`.
pub fn lossy_moment(codec: &LossyCodec, p: &Pmf, rho: f64) -> Result<f64> {
    if p.alphabet() != codec.dist.x_alphabet() {
        return Err(Error::AlphabetMismatch("source and distortion alphabets differ".into()));
    }
    let k = p.len();
    let probs: Vec<f64> = (0..codec.assign.len())
        .into_par_iter()
        .map(|x| tuple_digits(x, k, codec.n).iter().map(|&d| p.probs()[d]).product())
        .collect();
    // same reduction order as the lossless moment, so D = 0 agrees bit for bit
    let mut mass = vec![0.0; codec.phi.len()];
    for (&a, w) in codec.assign.iter().zip(&probs) {
        mass[a as usize] += w;
    }
    Ok(mass.iter().zip(&codec.phi).map(|(w, set)| w * (set.len() as f64).powf(rho)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{make_pmf, Alphabet};
    use crate::universal::build_universal_encoder;

    fn bin() -> Alphabet {
        Alphabet::indexed(2)
    }

    #[test]
    fn zero_level_cover_is_the_class() {
        let d = Distortion::hamming(&bin());
        let q = TypeDescriptor::new(bin(), vec![2, 2]);
        let cover = greedy_type_cover(&q, &d, 0.0).unwrap();
        assert_eq!(cover, vec![3, 5, 6, 9, 10, 12]);
    }

    #[test]
    fn half_level_cover_is_small() {
        let d = Distortion::hamming(&bin());
        let q = TypeDescriptor::new(bin(), vec![2, 2]);
        let cover = greedy_type_cover(&q, &d, 0.5).unwrap();
        assert!(!cover.is_empty() && cover.len() <= 3);
    }

    #[test]
    fn universal_reach_gives_one_codeword() {
        // every tuple is within 1 of anything
        let d = Distortion::hamming(&bin());
        let q = TypeDescriptor::new(bin(), vec![1, 2]);
        assert_eq!(greedy_type_cover(&q, &d, 1.0).unwrap().len(), 1);
    }

    #[test]
    fn zero_level_matches_lossless() {
        let d = Distortion::hamming(&bin());
        let p = make_pmf(bin(), &[0.25, 0.75]).unwrap();
        for n in 2..=6 {
            let codec = build_lossy_codec(n, 0.8, &d, 0.0);
            let uni = build_universal_encoder(BlockCodeParams::new(n, 0.8).unwrap(), &bin(), ChunkPolicy::default());
            match (codec, uni) {
                (Ok(c), Ok(u)) => {
                    assert_eq!(c.assign(), u.to_task_encoder().unwrap().assign());
                    let a = lossy_moment(&c, &p, 1.0).unwrap();
                    assert!((a - u.moment(&p, 1.0).unwrap()).abs() < 1e-12);
                }
                (Err(_), Err(_)) => {}
                (c, u) => panic!("feasibility differs at n = {n}: {:?} vs {:?}", c.is_ok(), u.is_ok()),
            }
        }
    }

    #[test]
    fn codecs_are_valid_and_monotone() {
        let d = Distortion::hamming(&bin());
        let p = make_pmf(bin(), &[0.25, 0.75]).unwrap();
        let mut prev = f64::INFINITY;
        for level in [0.0, 0.1, 0.2, 0.3, 0.5] {
            let c = build_lossy_codec(8, 0.6, &d, level).unwrap();
            assert!(c.satisfies_fidelity());
            assert!(c.sets_disjoint());
            assert!(c.descriptions_used() as u64 <= c.m());
            let v = lossy_moment(&c, &p, 1.0).unwrap();
            assert!(v >= 1.0 && v <= prev + 1e-12, "level {level}: {v} after {prev}");
            prev = v;
        }
    }
}
