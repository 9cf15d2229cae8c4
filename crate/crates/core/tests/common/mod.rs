#![allow(dead_code)]

use proptest::prelude::*;
use taskcode::prob::{make_pmf, Alphabet, JointPmf, Pmf};

/// Laws on `k` symbols for `k` in the range; a symbol is zero with probability `zero`.
pub fn pmf(ks: std::ops::RangeInclusive<usize>, zero: f64) -> impl Strategy<Value = Pmf> {
    ks.prop_flat_map(move |k| {
        proptest::collection::vec((proptest::bool::weighted(zero), 0.01f64..1.0), k).prop_map(move |w| {
            let mut v: Vec<f64> = w.iter().map(|&(z, x)| if z { 0.0 } else { x }).collect();
            if v.iter().all(|&x| x == 0.0) {
                v[0] = 1.0;
            }
            make_pmf(Alphabet::indexed(k), &v).unwrap()
        })
    })
}

/// Two laws on the same alphabet.
pub fn pmf_pair(ks: std::ops::RangeInclusive<usize>, zero: f64) -> impl Strategy<Value = (Pmf, Pmf)> {
    ks.prop_flat_map(move |k| (pmf(k..=k, zero), pmf(k..=k, zero)))
}

pub fn joint(nx: std::ops::RangeInclusive<usize>, ny: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = JointPmf> {
    (nx, ny).prop_flat_map(|(a, b)| {
        proptest::collection::vec(proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], b), a)
            .prop_map(move |mut rows| {
                if rows.iter().flatten().all(|&x| x == 0.0) {
                    rows[0][0] = 1.0;
                }
                let total: f64 = rows.iter().flatten().sum();
                rows.iter_mut().flatten().for_each(|v| *v /= total);
                JointPmf::new(Alphabet::indexed(a), Alphabet::indexed(b), rows).unwrap()
            })
    })
}

pub fn rho() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0), 0.05f64..5.0]
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
