mod common;

use proptest::prelude::*;
use taskcode::encoder::{build_encoder, moment, moment_bounds, moment_si, SiTaskEncoder, TaskEncoder};
use taskcode::oracle::*;
use taskcode::prob::{make_pmf, Alphabet, Pmf};

fn pmf(w: &[f64]) -> Pmf {
    make_pmf(Alphabet::indexed(w.len()), w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bounded_below_and_by_construction(p in common::pmf(1..=8, 0.15), rho in common::rho(), m in 1u64..=12) {
        let r = exact_min_moment(&p, rho, m).unwrap();
        prop_assert!(moment_bounds(&p, rho, m).lower <= r.min_moment * (1.0 + 1e-12));
        if let Ok(enc) = build_encoder(&p, rho, m) {
            prop_assert!(r.min_moment <= moment(&enc, &p, rho).unwrap() * (1.0 + 1e-12));
        }
        let enc = TaskEncoder::from_partition(&r.argmin, m).unwrap();
        prop_assert!((moment(&enc, &p, rho).unwrap() - r.min_moment).abs() <= 1e-12 * r.min_moment);
        prop_assert_eq!(r.blocks_used, enc.descriptions_used());
    }

    #[test]
    fn equals_one_exactly_when_every_positive_symbol_can_be_alone(p in common::pmf(1..=8, 0.3), m in 1u64..=9) {
        let supp = p.support_size();
        let needed = (supp + usize::from(supp < p.len())) as u64;
        let v = exact_min_moment(&p, 1.0, m).unwrap().min_moment;
        prop_assert_eq!((v - 1.0).abs() <= 1e-12, m >= needed, "v = {}", v);
    }
}

#[test]
fn side_information_separates() {
    // every map (x, y) -> {0, 1} on a 3 x 2 alphabet
    let joints = [
        [[0.1, 0.2], [0.3, 0.05], [0.15, 0.2]],
        [[0.4, 0.0], [0.1, 0.1], [0.0, 0.4]],
        [[0.25, 0.05], [0.25, 0.05], [0.1, 0.3]],
    ];
    for rows in joints {
        let j = taskcode::prob::JointPmf::new(
            Alphabet::indexed(3),
            Alphabet::indexed(2),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap();
        for rho in [0.5, 1.0, 2.0] {
            let mut best = f64::INFINITY;
            for code in 0u32..64 {
                let bit = |x: usize, y: usize| u64::from(code >> (2 * x + y) & 1);
                let per_y = (0..2)
                    .map(|y| TaskEncoder::new(Alphabet::indexed(3), 2, (0..3).map(|x| bit(x, y)).collect()).unwrap())
                    .collect();
                let enc = SiTaskEncoder::new(Alphabet::indexed(2), per_y).unwrap();
                best = best.min(moment_si(&enc, &j, rho).unwrap());
            }
            let split = exact_min_moment_si(&j, rho, 2).unwrap().min_moment;
            assert!((best - split).abs() <= 1e-12, "{best} vs {split}");
        }
    }
}

#[test]
fn lumping_the_unlikely_symbols_can_lose() {
    // first strict counterexample in a scan of p = (a,b,c,d)/20 with a > b > c > d
    let p = pmf(&[9.0, 8.0, 2.0, 1.0]);
    let r = exact_min_moment(&p, 1.0, 2).unwrap();
    assert_eq!(r.argmin.restricted_growth_string(), vec![0, 0, 1, 1]);
    assert!((r.min_moment - 2.0).abs() < 1e-12);
    assert!(!is_atypical_grouping(&r.argmin, &p, 2));
    let lumped = TaskEncoder::new(Alphabet::indexed(4), 2, vec![0, 1, 1, 1]).unwrap();
    assert!((moment(&lumped, &p, 1.0).unwrap() - 2.1).abs() < 1e-12);
}

#[test]
fn scan_finds_the_fixture_first() {
    let mut first = None;
    'scan: for a in (1..=20u32).rev() {
        for b in (1..a).rev() {
            for c in (1..b).rev() {
                if a + b + c >= 20 || 20 - a - b - c >= c {
                    continue;
                }
                let d = 20 - a - b - c;
                let p = pmf(&[a, b, c, d].map(f64::from));
                let r = exact_min_moment(&p, 1.0, 2).unwrap();
                let lumped = TaskEncoder::new(Alphabet::indexed(4), 2, vec![0, 1, 1, 1]).unwrap();
                let gap = moment(&lumped, &p, 1.0).unwrap() - r.min_moment;
                if !is_atypical_grouping(&r.argmin, &p, 2) && gap > 1e-12 {
                    first = Some([a, b, c, d]);
                    break 'scan;
                }
            }
        }
    }
    assert_eq!(first, Some([9, 8, 2, 1]));
}

#[test]
fn too_many_symbols_is_refused() {
    let p = Pmf::uniform(Alphabet::indexed(ORACLE_MAX_SYMBOLS + 1));
    assert!(exact_min_moment(&p, 1.0, 2).is_err());
    let p = Pmf::uniform(Alphabet::indexed(ORACLE_MAX_SYMBOLS));
    assert!((exact_min_moment(&p, 1.0, 3).unwrap().min_moment - 4.0).abs() < 1e-12);
}
