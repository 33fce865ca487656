//! Finitely supported exponent maps on a labeled basis, and the combinatorial
//! coefficients attached to them.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value as Json};

use crate::error::{Error, Result};
use crate::scalars::{binomial, exact_div, factorial, json_u32};

/// Ordered, duplicate-free list of basis labels.
#[derive(Debug, Clone)]
pub struct BasisLabels {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

pub type Basis = Arc<BasisLabels>;

impl BasisLabels {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Basis> {
        let labels: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::InvalidBasis("empty label".into()));
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidBasis(format!("duplicate label {l:?}")));
            }
        }
        Ok(Arc::new(BasisLabels { labels, index }))
    }

    /// `prefix1, prefix2, ..., prefix{rank}`.
    pub fn numbered(prefix: &str, rank: usize) -> Basis {
        let labels: Vec<String> = (1..=rank).map(|i| format!("{prefix}{i}")).collect();
        BasisLabels::new(&labels).expect("numbered labels are distinct")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn to_json(&self) -> Json {
        json!(self.labels)
    }

    pub fn from_json(j: &Json) -> Result<Basis> {
        let arr = j
            .as_array()
            .ok_or_else(|| Error::parse("basis must be an array of labels"))?;
        let labels = arr
            .iter()
            .map(|l| {
                l.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::parse("basis labels must be strings"))
            })
            .collect::<Result<Vec<_>>>()?;
        BasisLabels::new(&labels)
    }
}

impl PartialEq for BasisLabels {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for BasisLabels {}

pub(crate) fn same_basis(a: &Basis, b: &Basis) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Exponent map on a basis, stored densely in basis order.
#[derive(Debug, Clone)]
pub struct MultiIndex {
    basis: Basis,
    exps: Vec<u32>,
}

impl MultiIndex {
    pub fn zero(basis: &Basis) -> Self {
        MultiIndex { basis: basis.clone(), exps: vec![0; basis.rank()] }
    }

    pub fn from_dense(basis: &Basis, exps: Vec<u32>) -> Result<Self> {
        if exps.len() != basis.rank() {
            return Err(Error::InvalidBasis(format!(
                "exponent vector of length {} on a basis of rank {}",
                exps.len(),
                basis.rank()
            )));
        }
        Ok(MultiIndex { basis: basis.clone(), exps })
    }

    /// Builds an index from `(label, exponent)` pairs; repeated labels add up.
    pub fn from_pairs<S: AsRef<str>>(basis: &Basis, pairs: &[(S, u32)]) -> Result<Self> {
        let mut k = MultiIndex::zero(basis);
        for (label, e) in pairs {
            let i = basis
                .position(label.as_ref())
                .ok_or_else(|| Error::InvalidBasis(format!("unknown label {:?}", label.as_ref())))?;
            k.exps[i] += e;
        }
        Ok(k)
    }

    /// The index `{label_i: 1}`.
    pub fn unit(basis: &Basis, i: usize) -> Self {
        let mut k = MultiIndex::zero(basis);
        k.exps[i] = 1;
        k
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn get(&self, label: &str) -> u32 {
        self.basis.position(label).map_or(0, |i| self.exps[i])
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// Nonzero entries in basis order.
    pub fn support(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, e)| **e > 0)
            .map(|(i, e)| (self.basis.label(i), *e))
    }

    fn check(&self, other: &MultiIndex) -> Result<()> {
        if !same_basis(&self.basis, &other.basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex {
            basis: self.basis.clone(),
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
        }
    }

    /// `prod_i binomial(a_i + b_i, a_i)`: the structure constant of
    /// `b^[a] * b^[b] = c * b^[a+b]`.
    pub fn binomial_product(&self, other: &MultiIndex) -> Result<BigUint> {
        self.check(other)?;
        Ok(self.binomial_product_unchecked(other))
    }

    pub(crate) fn binomial_product_unchecked(&self, other: &MultiIndex) -> BigUint {
        let mut acc = BigUint::one();
        for (&a, &b) in self.exps.iter().zip(&other.exps) {
            if a > 0 && b > 0 {
                acc *= binomial((a + b) as u64, a as u64);
            }
        }
        acc
    }

    /// Pointwise multiplication by `m`.
    pub fn scale(&self, m: u32) -> MultiIndex {
        MultiIndex {
            basis: self.basis.clone(),
            exps: self.exps.iter().map(|e| e * m).collect(),
        }
    }

    /// `(1/m!) prod_i (m k_i)! / (k_i!)^m`: the constant `c` in
    /// `γ_m(b^[k]) = c · b^[m k]`.
    pub fn dp_coeff(&self, m: u32) -> Result<BigUint> {
        if self.is_zero() {
            return Err(Error::EmptyIndex);
        }
        let mut num = BigUint::one();
        let mut den = factorial(m as u64);
        for &k in self.exps.iter().filter(|&&k| k > 0) {
            num *= factorial((m * k) as u64);
            den *= factorial(k as u64).pow(m);
        }
        exact_div(&num, &den, "multi-index dp coefficient")
    }

    /// Canonical name of the monomial `b^[k]`, used as a basis label for
    /// graded slices; `1` for the empty index.
    pub fn monomial_label(&self) -> String {
        let parts: Vec<String> = self.support().map(|(l, e)| format!("{l}^[{e}]")).collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    pub fn to_json(&self) -> Json {
        let exps: Map<String, Json> = self.support().map(|(l, e)| (l.to_string(), json!(e))).collect();
        Json::Object(exps)
    }

    /// Parses an `{label: nat}` object.
    pub fn from_json(basis: &Basis, j: &Json) -> Result<MultiIndex> {
        let obj = j.as_object().ok_or_else(|| Error::parse("\"exps\" must be an object"))?;
        let mut k = MultiIndex::zero(basis);
        for (label, e) in obj {
            let i = basis
                .position(label)
                .ok_or_else(|| Error::parse(format!("unknown basis label {label:?}")))?;
            k.exps[i] = json_u32(e)?;
        }
        Ok(k)
    }
}

impl PartialEq for MultiIndex {
    fn eq(&self, other: &Self) -> bool {
        self.exps == other.exps && same_basis(&self.basis, &other.basis)
    }
}

impl Eq for MultiIndex {}

impl std::hash::Hash for MultiIndex {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.exps.hash(state);
    }
}

impl Ord for MultiIndex {
    /// Degree first, then lexicographically with larger leading exponents
    /// first: `b1^[2] < b1^[1]b2^[1] < b2^[2]`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
            .then_with(|| {
                if same_basis(&self.basis, &other.basis) {
                    Ordering::Equal
                } else {
                    self.basis.labels.cmp(&other.basis.labels)
                }
            })
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.monomial_label())
    }
}

/// Every `e: slots -> N` with `sum e = n`, in decreasing lexicographic order:
/// for `n = 2` over two slots, `(2,0), (1,1), (0,2)`.
pub fn weak_compositions(n: u32, slots: usize) -> WeakCompositions {
    let first = if slots == 0 {
        (n == 0).then(Vec::new)
    } else {
        let mut c = vec![0; slots];
        c[0] = n;
        Some(c)
    };
    WeakCompositions { next: first }
}

/// Number of weak compositions of `n` into `slots` parts.
pub fn weak_composition_count(n: u32, slots: usize) -> BigUint {
    if slots == 0 {
        return if n == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binomial(n as u64 + slots as u64 - 1, slots as u64 - 1)
}

#[derive(Debug, Clone)]
pub struct WeakCompositions {
    next: Option<Vec<u32>>,
}

impl Iterator for WeakCompositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let current = self.next.take()?;
        let k = current.len();
        if k >= 2 {
            let mut c = current.clone();
            let tail = c[k - 1];
            c[k - 1] = 0;
            if let Some(i) = (0..k - 1).rev().find(|&i| c[i] > 0) {
                c[i] -= 1;
                c[i + 1] = tail + 1;
                self.next = Some(c);
            }
        }
        Some(current)
    }
}
