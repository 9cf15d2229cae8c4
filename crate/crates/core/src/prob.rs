//! Finite alphabets, distributions, joints and channels.
//!
//! Probabilities are stored as `f64`. A [`Pmf`] built with
//! [`Pmf::from_rationals`] additionally carries its exact rational masses,
//! which survive [`product_pmf`] and are used wherever a check has to be free
//! of float drift.
//!
//! Tuple alphabets are always in lexicographic order: the tuple with digits
//! `(d_1, ..., d_n)` sits at index `d_1 k^{n-1} + ... + d_n`.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the number of tuples any routine will materialize.
pub const DEFAULT_TUPLE_CAP: usize = 1 << 20;

/// Accepted deviation of the total mass from one when reading input.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Current enumeration cap; `TASKCODE_MAX_TUPLES` overrides the default.
pub fn tuple_cap() -> usize {
    std::env::var("TASKCODE_MAX_TUPLES")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_TUPLE_CAP)
}

pub(crate) fn check_cap(needed: u128, cap: usize) -> Result<usize> {
    if needed > cap as u128 {
        Err(Error::CapExceeded { needed, cap })
    } else {
        Ok(needed as usize)
    }
}

/// `k^n` as an exact integer, saturating at `u128::MAX`.
pub fn tuple_count(k: usize, n: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..n {
        acc = acc.saturating_mul(k as u128);
    }
    acc
}

/// Digits of the `index`-th tuple of length `n` over `k` symbols.
pub fn tuple_digits(mut index: usize, k: usize, n: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    for slot in digits.iter_mut().rev() {
        *slot = index % k;
        index /= k;
    }
    digits
}

/// Inverse of [`tuple_digits`].
pub fn tuple_index(digits: &[usize], k: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * k + d)
}

/// Ordered set of distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = Error;

    fn try_from(symbols: Vec<String>) -> Result<Self> {
        Alphabet::new(symbols)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidPmf("alphabet must be nonempty".into()));
        }
        let mut seen = HashSet::with_capacity(symbols.len());
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return Err(Error::InvalidPmf(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// The alphabet `{0, 1, ..., k-1}`.
    pub fn indexed(k: usize) -> Self {
        assert!(k > 0, "alphabet must be nonempty");
        Alphabet {
            symbols: (0..k).map(|i| i.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }

    /// Label of a tuple given by its digits.
    pub fn tuple_label(&self, digits: &[usize]) -> String {
        let compact = self.symbols.iter().all(|s| s.chars().count() == 1);
        let parts = digits.iter().map(|&d| self.symbols[d].as_str());
        if compact {
            parts.collect()
        } else {
            parts.collect::<Vec<_>>().join(",")
        }
    }

    /// Lexicographically ordered alphabet of `n`-tuples.
    pub fn power(&self, n: usize) -> Result<Alphabet> {
        self.power_with_cap(n, tuple_cap())
    }

    pub fn power_with_cap(&self, n: usize, cap: usize) -> Result<Alphabet> {
        if n == 0 {
            return Err(Error::Precondition("tuple length must be at least 1".into()));
        }
        let k = self.len();
        let count = check_cap(tuple_count(k, n), cap)?;
        let symbols = (0..count)
            .map(|i| self.tuple_label(&tuple_digits(i, k, n)))
            .collect();
        Ok(Alphabet { symbols })
    }
}

/// A probability mass function on a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    alphabet: Alphabet,
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

/// Builds a PMF by normalizing nonnegative weights.
pub fn make_pmf(alphabet: Alphabet, weights: &[f64]) -> Result<Pmf> {
    if weights.len() != alphabet.len() {
        return Err(Error::AlphabetMismatch(format!(
            "{} weights for {} symbols",
            weights.len(),
            alphabet.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidPmf(format!("weight {w} is not a nonnegative number")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidPmf("all weights are zero".into()));
    }
    let probs = weights.iter().map(|w| w / total).collect();
    Ok(Pmf {
        alphabet,
        probs,
        exact: None,
    })
}

impl Pmf {
    /// Accepts probabilities that already sum to one within [`MASS_TOLERANCE`].
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("total mass {total} is not 1")));
        }
        make_pmf(alphabet, &probs)
    }

    /// Exact PMF from nonnegative rational weights.
    pub fn from_rationals(alphabet: Alphabet, weights: Vec<BigRational>) -> Result<Self> {
        if weights.len() != alphabet.len() {
            return Err(Error::AlphabetMismatch(format!(
                "{} weights for {} symbols",
                weights.len(),
                alphabet.len()
            )));
        }
        if weights.iter().any(|w| *w < BigRational::zero()) {
            return Err(Error::InvalidPmf("negative weight".into()));
        }
        let total: BigRational = weights.iter().sum();
        if total.is_zero() {
            return Err(Error::InvalidPmf("all weights are zero".into()));
        }
        let exact: Vec<BigRational> = weights.into_iter().map(|w| w / &total).collect();
        let probs = exact.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(Pmf {
            alphabet,
            probs,
            exact: Some(exact),
        })
    }

    /// Exact PMF from integer weights, e.g. `[1, 3]` for `(1/4, 3/4)`.
    pub fn from_counts(alphabet: Alphabet, counts: &[u64]) -> Result<Self> {
        let weights = counts
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)))
            .collect();
        Pmf::from_rationals(alphabet, weights)
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.len();
        Pmf::from_counts(alphabet, &vec![1; k]).expect("uniform weights are valid")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// Indices with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    pub fn same_alphabet(&self, other: &Pmf) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch(
                "distributions live on different alphabets".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PmfFile {
            alphabet: self.alphabet.symbols.clone(),
            probs: self.probs.clone(),
        })
        .expect("serializable")
    }

    /// Parses `{"alphabet": [...], "probs": [...]}`.
    pub fn from_json_str(text: &str, normalize: bool) -> Result<Self> {
        let file: PmfFile = serde_json::from_str(text)?;
        let alphabet = Alphabet::new(file.alphabet)?;
        if normalize {
            make_pmf(alphabet, &file.probs)
        } else {
            Pmf::new(alphabet, file.probs)
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PmfFile {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

/// The product distribution on lexicographically ordered `n`-tuples.
pub fn product_pmf(p: &Pmf, n: usize) -> Result<Pmf> {
    product_pmf_with_cap(p, n, tuple_cap())
}

pub fn product_pmf_with_cap(p: &Pmf, n: usize, cap: usize) -> Result<Pmf> {
    let alphabet = p.alphabet.power_with_cap(n, cap)?;
    let k = p.len();
    let count = alphabet.len();
    let mut probs = vec![0.0; count];
    let mut exact = p.exact.as_ref().map(|_| Vec::with_capacity(count));
    for (i, slot) in probs.iter_mut().enumerate() {
        let digits = tuple_digits(i, k, n);
        *slot = digits.iter().map(|&d| p.probs[d]).product();
        if let (Some(out), Some(src)) = (exact.as_mut(), p.exact.as_ref()) {
            let mut acc = BigRational::from_integer(BigInt::from(1));
            for &d in &digits {
                acc *= &src[d];
            }
            out.push(acc);
        }
    }
    Ok(Pmf {
        alphabet,
        probs,
        exact,
    })
}

/// Distribution on `X x Y`, stored row-major with `x` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    probs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JointFile {
    x_alphabet: Vec<String>,
    y_alphabet: Vec<String>,
    probs: Vec<Vec<f64>>,
}

impl JointPmf {
    /// `rows[x][y]` must be nonnegative with total mass one within [`MASS_TOLERANCE`].
    pub fn new(x_alphabet: Alphabet, y_alphabet: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(x_alphabet, y_alphabet, rows, false)
    }

    fn build(
        x_alphabet: Alphabet,
        y_alphabet: Alphabet,
        rows: Vec<Vec<f64>>,
        normalize: bool,
    ) -> Result<Self> {
        if rows.len() != x_alphabet.len() || rows.iter().any(|r| r.len() != y_alphabet.len()) {
            return Err(Error::AlphabetMismatch(format!(
                "joint table must be {}x{}",
                x_alphabet.len(),
                y_alphabet.len()
            )));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        if flat.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPmf("joint entries must be nonnegative".into()));
        }
        let total: f64 = flat.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("joint has zero mass".into()));
        }
        if !normalize && (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("joint mass {total} is not 1")));
        }
        Ok(JointPmf {
            x_alphabet,
            y_alphabet,
            probs: flat.into_iter().map(|p| p / total).collect(),
        })
    }

    /// Builds from a list of `((x, y), mass)` atoms; missing cells are zero.
    pub fn from_atoms(
        x_alphabet: Alphabet,
        y_alphabet: Alphabet,
        atoms: &[((usize, usize), f64)],
    ) -> Result<Self> {
        let mut rows = vec![vec![0.0; y_alphabet.len()]; x_alphabet.len()];
        for &((x, y), p) in atoms {
            rows[x][y] += p;
        }
        Self::new(x_alphabet, y_alphabet, rows)
    }

    /// `P_X(x) P_Y(y)`.
    pub fn independent(px: &Pmf, py: &Pmf) -> Self {
        let rows = px
            .probs
            .iter()
            .map(|&a| py.probs.iter().map(|&b| a * b).collect())
            .collect();
        Self::build(px.alphabet.clone(), py.alphabet.clone(), rows, true)
            .expect("product of PMFs is a PMF")
    }

    /// `X = Y` with the given marginal.
    pub fn diagonal(p: &Pmf) -> Self {
        let k = p.len();
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if x == y { p.probs[x] } else { 0.0 }).collect())
            .collect();
        Self::build(p.alphabet.clone(), p.alphabet.clone(), rows, true)
            .expect("diagonal of a PMF is a PMF")
    }

    /// `Q(y) V(x|y)` for a marginal on `Y` and a channel from `Y` to `X`.
    pub fn compose(q_y: &Pmf, v: &Channel) -> Result<Self> {
        if q_y.alphabet != v.input {
            return Err(Error::AlphabetMismatch("marginal and channel input differ".into()));
        }
        let nx = v.output.len();
        let mut rows = vec![vec![0.0; q_y.len()]; nx];
        for (y, &qy) in q_y.probs.iter().enumerate() {
            if qy == 0.0 {
                continue;
            }
            let row = v.rows[y].as_ref().ok_or_else(|| {
                Error::Precondition(format!("channel row {y} is undefined but Q({y}) > 0"))
            })?;
            for x in 0..nx {
                rows[x][y] = qy * row[x];
            }
        }
        Self::build(v.output.clone(), v.input.clone(), rows, true)
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x_alphabet
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y_alphabet
    }

    pub fn nx(&self) -> usize {
        self.x_alphabet.len()
    }

    pub fn ny(&self) -> usize {
        self.y_alphabet.len()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.ny() + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.ny()).map(|r| r.to_vec()).collect()
    }

    pub fn marginal_x(&self) -> Pmf {
        let w: Vec<f64> = (0..self.nx())
            .map(|x| (0..self.ny()).map(|y| self.get(x, y)).sum())
            .collect();
        make_pmf(self.x_alphabet.clone(), &w).expect("marginal of a joint is a PMF")
    }

    pub fn marginal_y(&self) -> Pmf {
        let w: Vec<f64> = (0..self.ny())
            .map(|y| (0..self.nx()).map(|x| self.get(x, y)).sum())
            .collect();
        make_pmf(self.y_alphabet.clone(), &w).expect("marginal of a joint is a PMF")
    }

    /// Joint of `(X^n, Y^n)` for `n` IID copies of the pair.
    pub fn product(&self, n: usize) -> Result<JointPmf> {
        let cap = tuple_cap();
        let x_alphabet = self.x_alphabet.power_with_cap(n, cap)?;
        let y_alphabet = self.y_alphabet.power_with_cap(n, cap)?;
        check_cap(
            (x_alphabet.len() as u128) * (y_alphabet.len() as u128),
            cap,
        )?;
        let (kx, ky) = (self.nx(), self.ny());
        let ys: Vec<Vec<usize>> = (0..y_alphabet.len())
            .map(|j| tuple_digits(j, ky, n))
            .collect();
        let rows = (0..x_alphabet.len())
            .map(|i| {
                let xd = tuple_digits(i, kx, n);
                ys.iter()
                    .map(|yd| xd.iter().zip(yd).map(|(&a, &b)| self.get(a, b)).product())
                    .collect()
            })
            .collect();
        Self::build(x_alphabet, y_alphabet, rows, true)
    }

    /// Parses `{"x_alphabet": [...], "y_alphabet": [...], "probs": [[...], ...]}`.
    pub fn from_json_str(text: &str, normalize: bool) -> Result<Self> {
        let file: JointFile = serde_json::from_str(text)?;
        Self::build(
            Alphabet::new(file.x_alphabet)?,
            Alphabet::new(file.y_alphabet)?,
            file.probs,
            normalize,
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(JointFile {
            x_alphabet: self.x_alphabet.symbols.clone(),
            y_alphabet: self.y_alphabet.symbols.clone(),
            probs: self.rows(),
        })
        .expect("serializable")
    }
}

/// Conditional kernel from `input` to `output`. A row is `None` where the
/// conditioning symbol has zero mass and the conditional is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    input: Alphabet,
    output: Alphabet,
    rows: Vec<Option<Vec<f64>>>,
}

impl Channel {
    pub fn new(input: Alphabet, output: Alphabet, rows: Vec<Option<Vec<f64>>>) -> Result<Self> {
        if rows.len() != input.len() {
            return Err(Error::AlphabetMismatch("one row per input symbol".into()));
        }
        let mut checked = Vec::with_capacity(rows.len());
        for row in rows {
            checked.push(match row {
                Some(r) => Some(Pmf::new(output.clone(), r)?.probs),
                None => None,
            });
        }
        Ok(Channel {
            input,
            output,
            rows: checked,
        })
    }

    pub fn input(&self) -> &Alphabet {
        &self.input
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn row(&self, i: usize) -> Option<&[f64]> {
        self.rows[i].as_deref()
    }

    pub fn row_pmf(&self, i: usize) -> Option<Pmf> {
        self.rows[i].as_ref().map(|r| Pmf {
            alphabet: self.output.clone(),
            probs: r.clone(),
            exact: None,
        })
    }
}

/// Splits a joint into `P_Y` and the channel `P_{X|Y}`.
pub fn condition_joint(j: &JointPmf) -> (Pmf, Channel) {
    let py = j.marginal_y();
    let rows = (0..j.ny())
        .map(|y| {
            let mass = py.probs[y];
            (mass > 0.0).then(|| (0..j.nx()).map(|x| j.get(x, y) / mass).collect())
        })
        .collect();
    let channel = Channel {
        input: j.y_alphabet.clone(),
        output: j.x_alphabet.clone(),
        rows,
    };
    (py, channel)
}

/// `ceil(xi)^rho`.
pub fn ceil_pow(xi: f64, rho: f64) -> f64 {
    xi.ceil().powf(rho)
}

/// Right-hand side of the ceiling inequality `ceil(xi)^rho < 1 + 2^rho xi^rho`.
pub fn ceil_pow_bound(xi: f64, rho: f64) -> f64 {
    1.0 + (2.0 * xi).powf(rho)
}
