//! A seeded invariant suite over every module, small enough to run in seconds.
//! The report is a pure function of the seed.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{cost_converse_bound, cost_moment, CostFn};
use crate::encoder::{build_encoder, build_si_encoder, moment, moment_bounds, moment_si, si_bounds, SiTaskEncoder, TaskEncoder};
use crate::lossy::{build_lossy_codec, lossy_moment};
use crate::measures::{
    binary_hamming_renyi_rd, conditional_renyi, renyi_entropy, renyi_rd, shannon_entropy, sundaresan_divergence,
    variational_entropy, Distortion,
};
use crate::oracle::{exact_min_moment, exact_min_moment_si};
use crate::partition::{build_budget_partition, partition_identity, subset_count_bound, Budget, Lambda, Partition};
use crate::prob::{ceil_pow, ceil_pow_bound, make_pmf, product_pmf, Alphabet, JointPmf, Pmf};
use crate::universal::{
    build_universal_encoder, build_universal_si_encoder, universal_moment_bound, universal_si_moment_bound,
    BlockCodeParams, ChunkPolicy,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub instances: usize,
    /// First violation, if any.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failure.is_none())
    }
}

impl fmt::Display for SelfTestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "selftest seed {}", self.seed)?;
        for c in &self.checks {
            match &c.failure {
                None => writeln!(f, "ok   {} ({} instances)", c.name, c.instances)?,
                Some(why) => writeln!(f, "FAIL {} ({} instances): {}", c.name, c.instances, why)?,
            }
        }
        let bad = self.checks.iter().filter(|c| c.failure.is_some()).count();
        write!(f, "{} checks, {} failed", self.checks.len(), bad)
    }
}

/// Random law on `k` symbols; each symbol is zeroed with probability `zero`.
pub fn random_pmf(rng: &mut impl Rng, k: usize, zero: f64) -> Pmf {
    loop {
        let w: Vec<f64> = (0..k)
            .map(|_| if rng.gen::<f64>() < zero { 0.0 } else { -rng.gen::<f64>().max(1e-300).ln() })
            .collect();
        if w.iter().any(|&v| v > 0.0) {
            return make_pmf(Alphabet::indexed(k), &w).expect("positive mass");
        }
    }
}

pub fn random_joint(rng: &mut impl Rng, nx: usize, ny: usize) -> JointPmf {
    let flat = random_pmf(rng, nx * ny, 0.2);
    let rows = (0..nx).map(|x| flat.probs()[x * ny..(x + 1) * ny].to_vec()).collect();
    JointPmf::new(Alphabet::indexed(nx), Alphabet::indexed(ny), rows).expect("valid joint")
}

type Check = fn(&mut ChaCha8Rng) -> (usize, Option<String>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_cases(count: usize, mut case: impl FnMut(usize) -> Result<(), String>) -> (usize, Option<String>) {
    for i in 0..count {
        if let Err(e) = case(i) {
            return (count, Some(format!("case {i}: {e}")));
        }
    }
    (count, None)
}

fn check_normalization(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(100, |_| {
        let k = rng.gen_range(1..=5);
        let p = random_pmf(rng, k, 0.3);
        let pn = product_pmf(&p, 3).map_err(|e| e.to_string())?;
        let s: f64 = pn.probs().iter().sum();
        ensure((s - 1.0).abs() < 1e-12, || format!("product mass {s}"))
    })
}

fn check_ceiling(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(1000, |_| {
        let xi = rng.gen_range(0.0..50.0);
        let rho = rng.gen_range(0.05..5.0);
        ensure(ceil_pow(xi, rho) < ceil_pow_bound(xi, rho), || format!("xi {xi}, rho {rho}"))
    })
}

fn check_renyi(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(300, |_| {
        let k = rng.gen_range(1..=8);
        let p = random_pmf(rng, k, 0.2);
        let (r1, r2) = (rng.gen_range(0.05..3.0), rng.gen_range(0.05..3.0));
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let (a, b) = (renyi_entropy(&p, lo), renyi_entropy(&p, hi));
        let cap = (p.support_size() as f64).log2();
        ensure(shannon_entropy(&p) <= a + 1e-12 && a <= b + 1e-12 && b <= cap + 1e-12, || {
            format!("entropies out of order: H={} {a} {b} cap {cap}", shannon_entropy(&p))
        })
    })
}

fn check_conditional(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(200, |_| {
        let (nx, ny) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let j = random_joint(rng, nx, ny);
        let rho = rng.gen_range(0.1..3.0);
        let (c, h) = (conditional_renyi(&j, rho), renyi_entropy(&j.marginal_x(), rho));
        ensure(c >= -1e-12 && c <= h + 1e-12, || format!("conditional {c} vs marginal {h}"))
    })
}

fn check_divergence(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(200, |_| {
        let k = rng.gen_range(1..=5);
        let (p, q) = (random_pmf(rng, k, 0.0), random_pmf(rng, k, 0.0));
        let alpha = rng.gen_range(0.1..4.0);
        let d = sundaresan_divergence(&p, &q, alpha);
        ensure(d >= 0.0 && sundaresan_divergence(&p, &p, alpha).abs() < 1e-12, || format!("delta {d}"))?;
        let (p2, q2) = (product_pmf(&p, 2).unwrap(), product_pmf(&q, 2).unwrap());
        let d2 = sundaresan_divergence(&p2, &q2, alpha);
        ensure((d2 - 2.0 * d).abs() < 1e-9, || format!("additivity {d2} vs 2 x {d}"))
    })
}

fn check_variational(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(50, |_| {
        let k = rng.gen_range(1..=6);
        let p = random_pmf(rng, k, 0.2);
        let rho = rng.gen_range(0.2..3.0);
        let v = variational_entropy(&p, rho);
        ensure((v.value - v.closed_form_value).abs() < 1e-9, || format!("{} vs {}", v.value, v.closed_form_value))
    })
}

fn check_rate_distortion(_: &mut ChaCha8Rng) -> (usize, Option<String>) {
    let b = Alphabet::indexed(2);
    let p = make_pmf(b.clone(), &[0.25, 0.75]).unwrap();
    let d = Distortion::hamming(&b);
    let grid = [0.0, 0.1, 0.2, 0.3];
    run_cases(grid.len(), |i| {
        let level = grid[i];
        let closed = binary_hamming_renyi_rd(0.25, level, 1.0);
        let numeric = renyi_rd(&p, &d, level, 1.0).map_err(|e| e.to_string())?;
        ensure((closed - numeric).abs() < 1e-4, || format!("D {level}: {numeric} vs {closed}"))
    })
}

fn check_partition_identity(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(500, |_| {
        let k = rng.gen_range(1..=10);
        let labels: Vec<usize> = (0..k).map(|_| rng.gen_range(0..k)).collect();
        let part = Partition::from_labels(Alphabet::indexed(k), &labels).unwrap();
        let id = partition_identity(&part);
        ensure(id == num_rational::BigRational::from_integer(part.num_blocks().into()), || format!("{id}"))
    })
}

fn check_budget_partition(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(500, |_| {
        let k = rng.gen_range(1..=10);
        let lambda: Vec<Lambda> = (0..k)
            .map(|_| if rng.gen_bool(0.1) { Lambda::Infinite } else { Lambda::Finite(rng.gen_range(1..=12)) })
            .collect();
        let b = Budget::new(Alphabet::indexed(k), lambda.clone()).unwrap();
        let part = build_budget_partition(&b);
        for (x, l) in lambda.iter().enumerate() {
            let size = part.block_size_of(x);
            ensure(l.admits(size) && size <= k, || format!("symbol {x}: block {size}, cap {l}"))?;
        }
        let bound = subset_count_bound(b.mu(), k);
        ensure(part.num_blocks() as u64 <= bound, || format!("{} blocks, bound {bound}", part.num_blocks()))
    })
}

fn check_sandwich(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(200, |_| {
        let k = rng.gen_range(1..=8);
        let p = random_pmf(rng, k, 0.1);
        let rho = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
        let lo = ((k as f64).log2() + 2.0).floor() as u64 + 1;
        let m = rng.gen_range(lo..=12);
        let b = moment_bounds(&p, rho, m);
        let best = exact_min_moment(&p, rho, m).map_err(|e| e.to_string())?.min_moment;
        let built = moment(&build_encoder(&p, rho, m).map_err(|e| e.to_string())?, &p, rho).unwrap();
        let upper = b.upper.expect("M above the threshold");
        let slack = 1e-12 * best;
        ensure(b.lower <= best + slack && best <= built + slack && built < upper, || {
            format!("{} <= {best} <= {built} < {upper} fails (k {k}, M {m}, rho {rho})", b.lower)
        })
    })
}

fn check_side_information(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(100, |_| {
        let (nx, ny) = (rng.gen_range(1..=5), rng.gen_range(1..=3));
        let j = random_joint(rng, nx, ny);
        let rho = rng.gen_range(0.3..2.5);
        let m = rng.gen_range(1..=6u64);
        let per_y = (0..ny)
            .map(|_| TaskEncoder::new(Alphabet::indexed(nx), m, (0..nx).map(|_| rng.gen_range(0..m)).collect()).unwrap())
            .collect();
        let enc = SiTaskEncoder::new(Alphabet::indexed(ny), per_y).unwrap();
        let b = si_bounds(&j, rho, m);
        let v = moment_si(&enc, &j, rho).unwrap();
        let best = exact_min_moment_si(&j, rho, m).map_err(|e| e.to_string())?.min_moment;
        ensure(b.lower <= best * (1.0 + 1e-12) && best <= v * (1.0 + 1e-12), || {
            format!("{} <= {best} <= {v} fails", b.lower)
        })?;
        let big = 12;
        let built = moment_si(&build_si_encoder(&j, rho, big).map_err(|e| e.to_string())?, &j, rho).unwrap();
        let upper = si_bounds(&j, rho, big).upper.expect("M above the threshold");
        ensure(built < upper, || format!("built {built}, upper {upper}"))
    })
}

fn check_oracle(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    run_cases(100, |_| {
        let k = rng.gen_range(1..=7);
        let p = random_pmf(rng, k, 0.2);
        let rho = rng.gen_range(0.2..3.0);
        let mut prev = f64::INFINITY;
        for m in 1..=k as u64 {
            let v = exact_min_moment(&p, rho, m).map_err(|e| e.to_string())?.min_moment;
            ensure(v <= prev * (1.0 + 1e-12), || format!("M {m}: {v} after {prev}"))?;
            // zero-mass symbols need a block of their own to leave the moment at 1
            let needed = p.support_size() + usize::from(p.support_size() < k);
            let one = (v - 1.0).abs() < 1e-12;
            ensure(one == (m as usize >= needed), || format!("M {m}: value {v}"))?;
            prev = v;
        }
        let py = random_pmf(rng, 2, 0.0);
        let m = rng.gen_range(1..=k as u64);
        let joint = exact_min_moment_si(&JointPmf::independent(&p, &py), rho, m).unwrap().min_moment;
        let single = exact_min_moment(&p, rho, m).unwrap().min_moment;
        ensure((joint - single).abs() < 1e-12, || format!("independent {joint} vs {single}"))
    })
}

fn check_universal(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    let b = Alphabet::indexed(2);
    run_cases(7, |i| {
        let n = i + 2;
        let params = BlockCodeParams::new(n, 1.0).unwrap();
        let enc = build_universal_encoder(params, &b, ChunkPolicy::ProofCap).map_err(|e| e.to_string())?;
        ensure(enc.descriptions_used() <= params.m(), || "over budget".into())?;
        for _ in 0..20 {
            let p = random_pmf(rng, 2, 0.0);
            let v = enc.moment(&p, 1.0).unwrap();
            let bound = universal_moment_bound(n, 1.0, 1.0, &p);
            ensure(v <= bound, || format!("n {n}: {v} above {bound}"))?;
        }
        Ok(())
    })
}

fn check_universal_si(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    let b = Alphabet::indexed(2);
    run_cases(3, |i| {
        let n = i + 2;
        let enc = build_universal_si_encoder(BlockCodeParams::new(n, 1.0).unwrap(), &b, &b, ChunkPolicy::ProofCap)
            .map_err(|e| e.to_string())?;
        let j = random_joint(rng, 2, 2);
        let v = enc.moment(&j, 1.0).unwrap();
        let bound = universal_si_moment_bound(n, 1.0, 1.0, &j);
        ensure(v <= bound, || format!("n {n}: {v} above {bound}"))?;
        let mut ys: Vec<usize> = (0..n).map(|t| t % 2).collect();
        let first = enc.fiber_size_multiset(&ys);
        ys.reverse();
        ensure(first == enc.fiber_size_multiset(&ys), || "shell sizes depend on more than the type".into())
    })
}

fn check_lossy(_: &mut ChaCha8Rng) -> (usize, Option<String>) {
    let b = Alphabet::indexed(2);
    let d = Distortion::hamming(&b);
    let p = make_pmf(b.clone(), &[0.25, 0.75]).unwrap();
    let levels = [0.0, 0.2, 0.4];
    let mut prev = f64::INFINITY;
    run_cases(levels.len(), |i| {
        let codec = build_lossy_codec(6, 0.7, &d, levels[i]).map_err(|e| e.to_string())?;
        ensure(codec.satisfies_fidelity() && codec.sets_disjoint(), || "fidelity or disjointness".into())?;
        let v = lossy_moment(&codec, &p, 1.0).unwrap();
        ensure(v <= prev * (1.0 + 1e-12), || format!("moment {v} after {prev}"))?;
        prev = v;
        if i == 0 {
            let u = build_universal_encoder(BlockCodeParams::new(6, 0.7).unwrap(), &b, ChunkPolicy::default())
                .map_err(|e| e.to_string())?;
            ensure(u.to_task_encoder().unwrap().assign() == codec.assign(), || "lossless mismatch".into())?;
        }
        Ok(())
    })
}

fn check_cost(rng: &mut ChaCha8Rng) -> (usize, Option<String>) {
    let b = Alphabet::indexed(2);
    run_cases(200, |_| {
        let n = rng.gen_range(1..=3);
        let p = random_pmf(rng, 2, 0.0);
        let c = CostFn::new(b.clone(), vec![rng.gen_range(0.0..2.0), rng.gen_range(0.1..2.0)]).unwrap();
        let m = rng.gen_range(1..=4u64);
        let assign = (0..1usize << n).map(|_| rng.gen_range(0..m)).collect();
        let enc = TaskEncoder::new(b.power(n).unwrap(), m, assign).unwrap();
        let v = cost_moment(&enc, &p, &c, n).unwrap();
        let bound = cost_converse_bound(&p, &c, (m as f64).log2() / n as f64, n).unwrap();
        ensure(v >= bound * (1.0 - 1e-12), || format!("{v} below {bound}"))
    })
}

const CHECKS: &[(&str, Check)] = &[
    ("prob.normalization", check_normalization),
    ("prob.ceiling", check_ceiling),
    ("measures.renyi_order", check_renyi),
    ("measures.conditional", check_conditional),
    ("measures.divergence", check_divergence),
    ("measures.variational", check_variational),
    ("measures.rate_distortion", check_rate_distortion),
    ("partition.identity", check_partition_identity),
    ("partition.budget", check_budget_partition),
    ("encoder.sandwich", check_sandwich),
    ("encoder.side_information", check_side_information),
    ("oracle.monotone_separable", check_oracle),
    ("universal.bound", check_universal),
    ("universal.side_information", check_universal_si),
    ("lossy.fidelity", check_lossy),
    ("cost.converse", check_cost),
];

/// Runs every check; each gets its own generator derived from the seed.
pub fn run(seed: u64) -> SelfTestReport {
    let checks = CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (instances, failure) = check(&mut rng);
            CheckOutcome { name, instances, failure }
        })
        .collect();
    SelfTestReport { seed, checks }
}
