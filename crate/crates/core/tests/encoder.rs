mod common;

use proptest::prelude::*;
use taskcode::encoder::*;
use taskcode::measures::{conditional_renyi, sundaresan_divergence};
use taskcode::oracle::exact_min_moment;
use taskcode::partition::Lambda;
use taskcode::prob::{make_pmf, Alphabet, Pmf};

fn rho3() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0)]
}

/// Smallest budget the construction accepts.
fn m_min(k: usize) -> u64 {
    (k as f64).log2().floor() as u64 + 3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn sandwich(p in common::pmf(1..=8, 0.15), rho in rho3(), slot in 0u64..12) {
        let lo = m_min(p.len());
        let m = lo + slot % (13 - lo);
        let b = moment_bounds(&p, rho, m);
        let exact = exact_min_moment(&p, rho, m).unwrap().min_moment;
        let built = moment(&build_encoder(&p, rho, m).unwrap(), &p, rho).unwrap();
        prop_assert!(b.lower <= exact * (1.0 + 1e-12));
        prop_assert!(exact <= built * (1.0 + 1e-12));
        prop_assert!(built < b.upper.unwrap());
    }

    #[test]
    fn optimum_nonincreasing_in_m(p in common::pmf(1..=8, 0.15), rho in rho3()) {
        let mut last = f64::INFINITY;
        for m in 1..=12 {
            let v = exact_min_moment(&p, rho, m).unwrap().min_moment;
            prop_assert!(v <= last * (1.0 + 1e-12));
            last = v;
        }
    }

    // The construction itself is not monotone in M (see the fixture below);
    // what holds is that it stays under an upper bound that shrinks with M.
    #[test]
    fn construction_under_shrinking_bound(p in common::pmf(1..=8, 0.15), rho in rho3()) {
        let mut last_upper = f64::INFINITY;
        for m in m_min(p.len())..=12 {
            let upper = moment_bounds(&p, rho, m).upper.unwrap();
            prop_assert!(upper < last_upper);
            prop_assert!(moment(&build_encoder(&p, rho, m).unwrap(), &p, rho).unwrap() < upper);
            last_upper = upper;
        }
    }

    #[test]
    fn mismatched_bound((p, q) in common::pmf_pair(1..=8, 0.15), rho in rho3(), slot in 0u64..12) {
        prop_assume!(sundaresan_divergence(&p, &q, 1.0 / (1.0 + rho)).is_finite());
        let lo = m_min(p.len());
        let m = lo + slot % (13 - lo);
        let (enc, bound) = build_mismatched_encoder(&p, &q, rho, m).unwrap();
        prop_assert!(moment(&enc, &p, rho).unwrap() < bound);
    }

    #[test]
    fn side_information_lower_bound(
        j in common::joint(1..=5, 1..=4),
        rho in common::rho(),
        m in 1u64..=6,
        seed in any::<u64>(),
    ) {
        let mut s = seed;
        let per_y = (0..j.ny())
            .map(|_| {
                let assign = (0..j.nx())
                    .map(|_| {
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        (s >> 33) % m
                    })
                    .collect();
                TaskEncoder::new(j.x_alphabet().clone(), m, assign).unwrap()
            })
            .collect();
        let enc = SiTaskEncoder::new(j.y_alphabet().clone(), per_y).unwrap();
        let lower = (rho * (conditional_renyi(&j, rho) - (m as f64).log2())).exp2();
        prop_assert!(moment_si(&enc, &j, rho).unwrap() >= lower * (1.0 - 1e-12));
        let built = build_si_encoder(&j, rho, m.max(m_min(j.nx()))).unwrap();
        let b = si_bounds(&j, rho, built.m());
        let v = moment_si(&built, &j, rho).unwrap();
        prop_assert!(b.lower <= v * (1.0 + 1e-12) && v < b.upper.unwrap());
    }
}

#[test]
fn construction_can_get_worse_with_more_descriptions() {
    let p = make_pmf(Alphabet::indexed(3), &[0.7, 0.2, 0.1]).unwrap();
    let caps = |m| encoder_budget(&p, 1.0, m).unwrap().lambda().to_vec();
    assert_eq!(caps(8), [1, 2, 3].map(Lambda::Finite));
    assert_eq!(caps(9), [1, 2, 2].map(Lambda::Finite));
    let at = |m| moment(&build_encoder(&p, 1.0, m).unwrap(), &p, 1.0).unwrap();
    assert!((at(8) - 1.0).abs() < 1e-12);
    assert!((at(9) - 1.3).abs() < 1e-12);
    assert!(exact_min_moment(&p, 1.0, 9).unwrap().min_moment <= at(8) + 1e-12);
}

#[test]
fn uniform_meets_lower_bound() {
    for k in [2usize, 4, 6, 8] {
        let p = Pmf::uniform(Alphabet::indexed(k));
        for m in (1..=k as u64).filter(|m| (k as u64).is_multiple_of(*m)) {
            for rho in [0.5, 1.0, 2.0] {
                let exact = exact_min_moment(&p, rho, m).unwrap().min_moment;
                let target = (k as f64 / m as f64).powf(rho);
                assert!((exact - target).abs() <= 1e-12 * target, "k={k} M={m}");
                assert!((moment_bounds(&p, rho, m).lower - target).abs() <= 1e-12 * target);
            }
        }
    }
}

#[test]
fn too_few_descriptions_is_a_precondition_error() {
    let p = Pmf::uniform(Alphabet::indexed(4));
    assert!(build_encoder(&p, 1.0, 4).is_err());
    assert!(build_encoder(&p, 1.0, 5).is_ok());
}
