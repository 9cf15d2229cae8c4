mod common;

use num_bigint::BigUint;
use num_traits::Pow;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskcode::encoder::{moment, moment_bounds};
use taskcode::measures::renyi_entropy;
use taskcode::prob::{make_pmf, product_pmf, Alphabet, Pmf};
use taskcode::types::*;
use taskcode::universal::*;

fn random_law(rng: &mut ChaCha8Rng, k: usize) -> Pmf {
    let w: Vec<f64> = (0..k).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..1.0) }).collect();
    let w = if w.iter().all(|&v| v == 0.0) { vec![1.0; k] } else { w };
    make_pmf(Alphabet::indexed(k), &w).unwrap()
}

#[test]
fn one_encoder_serves_every_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sources: Vec<Pmf> = (0..100).map(|_| random_law(&mut rng, 2)).collect();
    for policy in [ChunkPolicy::ProofCap, ChunkPolicy::FillBudget] {
        for n in 2..=12 {
            let params = BlockCodeParams::new(n, 1.0).unwrap();
            let enc = build_universal_encoder(params, &Alphabet::indexed(2), policy).unwrap();
            assert!(enc.descriptions_used() <= params.m());
            for rho in [0.5, 1.0, 2.0] {
                for p in &sources {
                    let v = enc.moment(p, rho).unwrap();
                    assert!(v <= universal_moment_bound(n, 1.0, rho, p), "{policy:?} n={n}");
                }
            }
        }
    }
}

#[test]
fn ternary_sources_under_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sources: Vec<Pmf> = (0..100).map(|_| random_law(&mut rng, 3)).collect();
    let mut feasible = 0;
    for n in 2..=9 {
        for rate in [1.2, 1.58] {
            let Ok(params) = BlockCodeParams::new(n, rate) else { continue };
            let Ok(enc) = build_universal_encoder(params, &Alphabet::indexed(3), ChunkPolicy::FillBudget) else {
                continue;
            };
            feasible += 1;
            assert!(enc.descriptions_used() <= params.m());
            for p in &sources {
                assert!(enc.moment(p, 1.0).unwrap() <= universal_moment_bound(n, rate, 1.0, p));
            }
        }
    }
    assert!(feasible >= 8);
}

#[test]
fn proof_cap_small_example() {
    let enc = build_universal_encoder(BlockCodeParams::new(2, 1.0).unwrap(), &Alphabet::indexed(2), ChunkPolicy::ProofCap)
        .unwrap();
    assert_eq!(enc.descriptions_used(), 3);
    let half = Pmf::uniform(Alphabet::indexed(2));
    assert!((enc.moment(&half, 1.0).unwrap() - 1.5).abs() < 1e-12);
    assert!(1.5 <= universal_moment_bound(2, 1.0, 1.0, &half));
}

#[test]
fn class_sizes_add_up() {
    for k in 1..=5usize {
        for n in 1..=30usize {
            if count_compositions(n, k) > 100_000 {
                continue;
            }
            let total: BigUint = compositions(n, k).iter().map(|c| multinomial(c)).sum();
            assert_eq!(total, BigUint::from(k).pow(n as u32), "k={k} n={n}");
        }
    }
    assert_eq!(enumerate_types(4, &Alphabet::indexed(3)).unwrap().len(), 15);
}

#[test]
fn full_rate_trend_on_quarter_source() {
    let p = make_pmf(Alphabet::indexed(2), &[0.25, 0.75]).unwrap();
    assert!(renyi_entropy(&p, 1.0) < 1.0);
    let mut last = f64::INFINITY;
    for n in 2..=12 {
        let enc = build_universal_encoder(BlockCodeParams::new(n, 1.0).unwrap(), &Alphabet::indexed(2), ChunkPolicy::FillBudget)
            .unwrap();
        let v = enc.moment(&p, 1.0).unwrap();
        assert!(v <= last + 1e-12);
        assert!(v >= 1.0 - 1e-12);
        last = v;
    }
    assert!((last - 1.0).abs() < 1e-12);
}

#[test]
fn below_entropy_the_moment_grows_at_least_exponentially() {
    let p = make_pmf(Alphabet::indexed(2), &[0.25, 0.75]).unwrap();
    let (rate, rho) = (0.5, 1.0);
    let gap = rho * (renyi_entropy(&p, rho) - rate);
    for n in 2..=12 {
        let params = BlockCodeParams::new(n, rate).unwrap();
        let lower = moment_bounds(&product_pmf(&p, n).unwrap(), rho, params.m()).lower;
        assert!(lower.log2() / n as f64 >= gap - 1e-12, "n={n}");
        if let Ok(enc) = build_universal_encoder(params, &Alphabet::indexed(2), ChunkPolicy::FillBudget) {
            assert!(enc.moment(&p, rho).unwrap() >= lower * (1.0 - 1e-12));
        }
    }
}

#[test]
fn implicit_moment_matches_table() {
    let p = make_pmf(Alphabet::indexed(3), &[0.2, 0.5, 0.3]).unwrap();
    for n in 1..=6 {
        for policy in [ChunkPolicy::ProofCap, ChunkPolicy::FillBudget] {
            let Ok(enc) = build_universal_encoder(BlockCodeParams::new(n, 1.3).unwrap(), &Alphabet::indexed(3), policy)
            else {
                continue;
            };
            let table = enc.to_task_encoder().unwrap();
            let pn = product_pmf(&p, n).unwrap();
            for rho in [0.5, 2.0] {
                let a = enc.moment(&p, rho).unwrap();
                let b = moment(&table, &pn, rho).unwrap();
                assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn shells_depend_only_on_the_side_type() {
    let n = 5;
    let params = BlockCodeParams::new(n, 1.0).unwrap();
    for policy in [ChunkPolicy::ProofCap, ChunkPolicy::FillBudget] {
        let enc = build_universal_si_encoder(params, &Alphabet::indexed(2), &Alphabet::indexed(2), policy).unwrap();
        let mut by_type: std::collections::BTreeMap<Vec<u32>, Vec<BigUint>> = Default::default();
        for code in 0..1usize << n {
            let ys: Vec<usize> = (0..n).map(|i| code >> (n - 1 - i) & 1).collect();
            let sizes = enc.fiber_size_multiset(&ys);
            let total: BigUint = sizes.iter().sum();
            assert_eq!(total, BigUint::from(1u32 << n));
            let seen = by_type.entry(type_of(&ys, 2)).or_insert_with(|| sizes.clone());
            assert_eq!(*seen, sizes);
        }
    }
}

#[test]
fn side_information_under_its_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=4 {
        let params = BlockCodeParams::new(n, 1.0).unwrap();
        let enc = build_universal_si_encoder(params, &Alphabet::indexed(2), &Alphabet::indexed(2), ChunkPolicy::FillBudget)
            .unwrap();
        assert!(enc.descriptions_used() <= params.m());
        for _ in 0..20 {
            let j = taskcode::selftest::random_joint(&mut rng, 2, 2);
            let v = enc.moment(&j, 1.0).unwrap();
            assert!(v <= universal_si_moment_bound(n, 1.0, 1.0, &j));
            assert!(v >= 1.0 - 1e-12);
        }
    }
}

#[test]
fn penalty_shrinks_with_n() {
    assert!((universal_penalty(10, 2, 1.0) - 1.4838).abs() < 1e-4);
    for k in [2usize, 3, 5] {
        for rho in [0.25, 1.0, 4.0] {
            let mut last = universal_penalty(3, k, rho);
            for n in 4..=10_000 {
                let d = universal_penalty(n, k, rho);
                assert!(d < last, "k={k} rho={rho} n={n}");
                last = d;
            }
        }
    }
    for n in [1usize, 5, 50] {
        let limit = (1.0 + 2.0 * ((n + 1) as f64).log2()) / n as f64;
        assert!((universal_penalty(n, 2, 1e12) - limit).abs() < 1e-9);
    }
}

#[test]
fn bound_tends_to_one_above_entropy() {
    let p = make_pmf(Alphabet::indexed(2), &[0.1, 0.9]).unwrap();
    let b: Vec<f64> = [100usize, 150, 200].iter().map(|&n| universal_moment_bound(n, 1.0, 1.0, &p)).collect();
    assert!(b[2] < b[1] && b[1] < b[0] && b[2] - 1.0 < 1e-6);
}

proptest! {
    #[test]
    fn rank_round_trip(seq in proptest::collection::vec(0usize..4, 1..=14)) {
        let counts = type_of(&seq, 4);
        let rank = rank_in_class(&seq, 4);
        prop_assert!(rank < multinomial(&counts));
        prop_assert_eq!(unrank_in_class(&rank, &counts), seq);
    }

    #[test]
    fn ranks_are_lexicographic(a in proptest::collection::vec(0usize..3, 6), perm_seed in any::<u64>()) {
        let mut b = a.clone();
        let mut s = perm_seed;
        for i in (1..b.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            b.swap(i, (s >> 33) as usize % (i + 1));
        }
        let (ra, rb) = (rank_in_class(&a, 3), rank_in_class(&b, 3));
        prop_assert_eq!(a.cmp(&b), ra.cmp(&rb));
    }
}
