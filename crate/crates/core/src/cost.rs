//! Tasks with costs: expected cost of the performed tasks, at `rho = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::TaskEncoder;
use crate::error::{Error, Result};
use crate::prob::{check_cap, tuple_cap, tuple_count, tuple_digits, Alphabet, Pmf};
use crate::types::{compositions, count_compositions, multinomial, sequence_probability, to_f64};
use crate::universal::{chunk_power_sum, UniversalEncoder};

/// Nonnegative finite cost per task.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFn {
    alphabet: Alphabet,
    costs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CostFile {
    alphabet: Vec<String>,
    costs: Vec<f64>,
}

impl CostFn {
    pub fn new(alphabet: Alphabet, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch("one cost per symbol".into()));
        }
        if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Precondition(format!("costs must be finite and nonnegative, got {c}")));
        }
        Ok(CostFn { alphabet, costs })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: CostFile = serde_json::from_str(text)?;
        CostFn::new(Alphabet::new(f.alphabet)?, f.costs)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CostFile { alphabet: self.alphabet.symbols().to_vec(), costs: self.costs.clone() })
            .expect("plain data serializes")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn c_max(&self) -> f64 {
        self.costs.iter().copied().fold(0.0, f64::max)
    }

    pub fn c_min(&self) -> f64 {
        self.costs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `E_P[c(X)]`.
    pub fn expected(&self, p: &Pmf) -> Result<f64> {
        self.check(p)?;
        Ok(p.probs().iter().zip(&self.costs).map(|(w, c)| w * c).sum())
    }

    /// Per-task average cost of a tuple.
    pub fn tuple_cost(&self, xs: &[usize]) -> f64 {
        xs.iter().map(|&x| self.costs[x]).sum::<f64>() / xs.len() as f64
    }

    fn type_cost(&self, counts: &[u32]) -> f64 {
        let n: u32 = counts.iter().sum();
        counts.iter().zip(&self.costs).map(|(&k, c)| k as f64 * c).sum::<f64>() / n as f64
    }

    fn check(&self, p: &Pmf) -> Result<()> {
        if *p.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch("cost and source alphabets differ".into()));
        }
        Ok(())
    }
}

fn tuple_tables(enc: &TaskEncoder, p: &Pmf, cost: &CostFn, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    cost.check(p)?;
    let k = p.len();
    let count = check_cap(tuple_count(k, n), tuple_cap())?;
    if enc.assign().len() != count {
        return Err(Error::AlphabetMismatch(format!("encoder must act on {n}-tuples over {k} symbols")));
    }
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let xs = tuple_digits(i, k, n);
            let mut counts = vec![0u32; k];
            for &x in &xs {
                counts[x] += 1;
            }
            (sequence_probability(&counts, p.probs()), cost.tuple_cost(&xs))
        })
        .unzip())
}

/// `E[c(f, X^n)]` where `c(f, x^n)` sums the tuple costs over the fiber of `x^n`.
pub fn cost_moment(enc: &TaskEncoder, p: &Pmf, cost: &CostFn, n: usize) -> Result<f64> {
    let (probs, costs) = tuple_tables(enc, p, cost, n)?;
    let used = enc.assign().iter().max().map_or(0, |&m| m as usize + 1);
    let mut mass = vec![0.0; used];
    let mut total = vec![0.0; used];
    for ((&a, w), c) in enc.assign().iter().zip(&probs).zip(&costs) {
        mass[a as usize] += w;
        total[a as usize] += c;
    }
    Ok(mass.iter().zip(&total).map(|(w, c)| w * c).sum())
}

/// `sum_{x^n} P(x^n) sum_{other fiber members} c`, computed pair by pair.
pub fn cross_fiber_cost(enc: &TaskEncoder, p: &Pmf, cost: &CostFn, n: usize) -> Result<f64> {
    let (probs, costs) = tuple_tables(enc, p, cost, n)?;
    let assign = enc.assign();
    let mut members: std::collections::BTreeMap<u64, Vec<usize>> = Default::default();
    for (i, &a) in assign.iter().enumerate() {
        members.entry(a).or_default().push(i);
    }
    Ok((0..assign.len())
        .map(|i| {
            let others: f64 = members[&assign[i]].iter().filter(|&&j| j != i).map(|&j| costs[j]).sum();
            probs[i] * others
        })
        .sum())
}

/// Cost moment of a universal encoder, grouped by type class. Every member
/// of a class has the same average cost, so a chunk of length `L` costs `L c(Q)`.
pub fn universal_cost_moment(enc: &UniversalEncoder, p: &Pmf, cost: &CostFn) -> Result<f64> {
    cost.check(p)?;
    if enc.alphabet() != p.alphabet() {
        return Err(Error::AlphabetMismatch("encoder and source alphabets differ".into()));
    }
    Ok(enc
        .classes()
        .map(|(t, size, chunks)| {
            let w = sequence_probability(t.counts(), p.probs());
            if w == 0.0 {
                0.0
            } else {
                w * cost.type_cost(t.counts()) * chunk_power_sum(size, chunks, 2.0)
            }
        })
        .sum())
}

/// `2^{-nR} (sum_{x^n} sqrt(c(x^n) P^n(x^n)))^2`, summed by type class.
pub fn cost_converse_bound(p: &Pmf, cost: &CostFn, rate: f64, n: usize) -> Result<f64> {
    if cost.expected(p)? <= 0.0 {
        return Err(Error::Precondition("the bound needs a positive expected cost".into()));
    }
    let k = p.len();
    check_cap(count_compositions(n, k), tuple_cap())?;
    let root_sum: f64 = compositions(n, k)
        .iter()
        .map(|t| to_f64(&multinomial(t)) * (cost.type_cost(t) * sequence_probability(t, p.probs())).sqrt())
        .sum();
    Ok((-(n as f64) * rate).exp2() * root_sum * root_sum)
}

/// Two descriptions: one for the zero-cost tuples, one for the rest.
pub fn zero_cost_encoder(cost: &CostFn, n: usize) -> Result<TaskEncoder> {
    let k = cost.alphabet.len();
    let count = check_cap(tuple_count(k, n), tuple_cap())?;
    let assign = (0..count)
        .map(|i| if cost.tuple_cost(&tuple_digits(i, k, n)) == 0.0 { 0 } else { 1 })
        .collect();
    TaskEncoder::new(cost.alphabet.power(n)?, 2, assign)
}
