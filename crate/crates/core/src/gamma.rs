//! The universal divided power algebra of a free module of finite rank.
//!
//! Elements are kept in the monomial basis `b^[k] = prod_i b_i^[k_i]`, one
//! coefficient per multi-index, so equality is structural. Multiplication
//! follows `b^[j] b^[k] = (prod_i binomial(j_i + k_i, j_i)) b^[j+k]`.
//!
//! The divided powers `γ_n` on the augmentation ideal (the span of the
//! monomials of positive degree) are computed from the closed form
//!
//! ```text
//! γ_n(sum_k r_k b^[k]) = sum_{e ⊢ n} prod_k r_k^{e_k} c(e_k, k) b^[e_k k]
//! ```
//!
//! where `e` runs over the weak compositions of `n` indexed by the support
//! and `c(m, k)` is [`MultiIndex::dp_coeff`]. The product is taken in the
//! algebra, so cross terms pick up the binomial structure constants.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{json, Value as Json};

use crate::dpaxioms::DpStructure;
use crate::error::{Error, Result};
use crate::freemodule::{FreeModuleSpec, LinearMap, ModuleVector};
use crate::multiindex::{weak_composition_count, weak_compositions, BasisLabels, MultiIndex};
use crate::scalars::{Ring, RingDescriptor, Scalar, Value};

/// Default cap on the number of compositions `gamma_n` may enumerate.
pub const DEFAULT_TERM_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaElement {
    spec: FreeModuleSpec,
    terms: BTreeMap<MultiIndex, Value>,
}

fn add_term(ring: &RingDescriptor, terms: &mut BTreeMap<MultiIndex, Value>, k: MultiIndex, c: Value) {
    if ring.is_zero(&c) {
        return;
    }
    match terms.entry(k) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            let s = ring.add(o.get(), &c);
            if ring.is_zero(&s) {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

impl GammaElement {
    pub fn zero(spec: &FreeModuleSpec) -> Self {
        GammaElement { spec: spec.clone(), terms: BTreeMap::new() }
    }

    pub fn one(spec: &FreeModuleSpec) -> Self {
        GammaElement::constant_value(spec, spec.ring().one())
    }

    pub(crate) fn constant_value(spec: &FreeModuleSpec, c: Value) -> Self {
        GammaElement::monomial_value(spec, MultiIndex::zero(spec.basis()), c)
    }

    pub(crate) fn monomial_value(spec: &FreeModuleSpec, k: MultiIndex, c: Value) -> Self {
        let mut terms = BTreeMap::new();
        add_term(spec.ring(), &mut terms, k, c);
        GammaElement { spec: spec.clone(), terms }
    }

    pub(crate) fn from_term_map(spec: &FreeModuleSpec, terms: BTreeMap<MultiIndex, Value>) -> Self {
        debug_assert!(terms.values().all(|c| !spec.ring().is_zero(c)));
        GammaElement { spec: spec.clone(), terms }
    }

    /// `c * b^[k]`.
    pub fn monomial(spec: &FreeModuleSpec, k: &MultiIndex, c: &Scalar) -> Result<Self> {
        if c.ring() != spec.ring() {
            return Err(Error::RingMismatch { left: spec.ring().to_string(), right: c.ring().to_string() });
        }
        if k.basis() != spec.basis() {
            return Err(Error::BasisMismatch);
        }
        Ok(GammaElement::monomial_value(spec, k.clone(), c.value().clone()))
    }

    /// Sum of `c * b^[k]` over `(pairs, c)` with small integer coefficients;
    /// convenient for tests and examples.
    pub fn from_int_terms<S: AsRef<str>>(spec: &FreeModuleSpec, terms: &[(&[(S, u32)], i64)]) -> Result<Self> {
        let mut out = GammaElement::zero(spec);
        for (pairs, c) in terms {
            let k = MultiIndex::from_pairs(spec.basis(), pairs)?;
            add_term(spec.ring(), &mut out.terms, k, spec.ring().from_i64(*c));
        }
        Ok(out)
    }

    pub fn spec(&self) -> &FreeModuleSpec {
        &self.spec
    }

    pub fn ring(&self) -> &Ring {
        self.spec.ring()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Value)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: &MultiIndex) -> Scalar {
        let c = self.terms.get(k).cloned().unwrap_or_else(|| self.ring().zero());
        Scalar::from_parts(self.ring(), c)
    }

    /// Largest degree of a monomial in the support (0 for the zero element).
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    fn check(&self, other: &GammaElement) -> Result<()> {
        self.spec.check(&other.spec)
    }

    pub fn add(&self, other: &GammaElement) -> Result<GammaElement> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &GammaElement) -> GammaElement {
        let (big, small) = if self.len() >= other.len() { (self, other) } else { (other, self) };
        let mut terms = big.terms.clone();
        for (k, c) in &small.terms {
            add_term(self.ring(), &mut terms, k.clone(), c.clone());
        }
        GammaElement { spec: self.spec.clone(), terms }
    }

    pub fn neg(&self) -> GammaElement {
        let r = self.ring();
        let terms = self.terms.iter().map(|(k, c)| (k.clone(), r.neg(c))).collect();
        GammaElement { spec: self.spec.clone(), terms }
    }

    pub fn sub(&self, other: &GammaElement) -> Result<GammaElement> {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Scalar) -> Result<GammaElement> {
        if s.ring() != self.ring() {
            return Err(Error::RingMismatch { left: self.ring().to_string(), right: s.ring().to_string() });
        }
        Ok(self.scale_value(s.value()))
    }

    pub(crate) fn scale_value(&self, s: &Value) -> GammaElement {
        let r = self.ring();
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            add_term(r, &mut terms, k.clone(), r.mul(s, c));
        }
        GammaElement { spec: self.spec.clone(), terms }
    }

    pub fn mul_nat(&self, n: &BigUint) -> GammaElement {
        let r = self.ring();
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            add_term(r, &mut terms, k.clone(), r.mul_nat(n, c));
        }
        GammaElement { spec: self.spec.clone(), terms }
    }

    /// Product in the divided power algebra.
    pub fn mul(&self, other: &GammaElement) -> Result<GammaElement> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &GammaElement) -> GammaElement {
        let r = self.ring();
        let mut terms = BTreeMap::new();
        for (j, a) in &self.terms {
            for (k, b) in &other.terms {
                let c = r.mul(a, b);
                if r.is_zero(&c) {
                    continue;
                }
                let c = r.mul_nat(&j.binomial_product_unchecked(k), &c);
                add_term(r, &mut terms, j.add_unchecked(k), c);
            }
        }
        GammaElement { spec: self.spec.clone(), terms }
    }

    /// Ordinary `n`-th power.
    pub fn pow(&self, n: u32) -> GammaElement {
        (0..n).fold(GammaElement::one(&self.spec), |acc, _| acc.mul_unchecked(self))
    }

    pub fn grade_component(&self, d: u32) -> GammaElement {
        let terms = self
            .terms
            .iter()
            .filter(|(k, _)| k.degree() == d)
            .map(|(k, c)| (k.clone(), c.clone()))
            .collect();
        GammaElement { spec: self.spec.clone(), terms }
    }

    /// Nonzero homogeneous components by degree.
    pub fn grade_decompose(&self) -> BTreeMap<u32, GammaElement> {
        let mut out: BTreeMap<u32, GammaElement> = BTreeMap::new();
        for (k, c) in &self.terms {
            out.entry(k.degree())
                .or_insert_with(|| GammaElement::zero(&self.spec))
                .terms
                .insert(k.clone(), c.clone());
        }
        out
    }

    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.terms.keys().all(|k| k.degree() == d)
    }

    /// True iff the degree-0 part vanishes.
    pub fn in_augmentation_ideal(&self) -> bool {
        self.terms.keys().all(|k| !k.is_zero())
    }

    /// `γ_n` with the default term budget.
    pub fn gamma_n(&self, n: u32) -> Result<GammaElement> {
        self.gamma_n_with_budget(n, DEFAULT_TERM_BUDGET)
    }

    /// `γ_n`, refusing to enumerate more than `budget` compositions.
    pub fn gamma_n_with_budget(&self, n: u32, budget: u64) -> Result<GammaElement> {
        if n == 0 {
            return Ok(GammaElement::one(&self.spec));
        }
        if !self.in_augmentation_ideal() {
            return Err(Error::NotInAugmentationIdeal);
        }
        let support: Vec<(&MultiIndex, &Value)> = self.terms.iter().collect();
        let count = weak_composition_count(n, support.len());
        if count > BigUint::from(budget) {
            return Err(Error::BudgetExceeded { needed: count.to_u128().unwrap_or(u128::MAX), budget });
        }
        let r = self.ring();
        // γ_e(r_k b^[k]) = r_k^e c(e, k) b^[e k], for every support term and e <= n
        let mut powers: Vec<Vec<(MultiIndex, Value)>> = Vec::with_capacity(support.len());
        for (k, c) in &support {
            let mut row = Vec::with_capacity(n as usize + 1);
            for e in 0..=n {
                let coeff = r.mul_nat(&k.dp_coeff(e)?, &r.pow(c, e));
                row.push((k.scale(e), coeff));
            }
            powers.push(row);
        }
        let mut terms = BTreeMap::new();
        'outer: for comp in weak_compositions(n, support.len()) {
            let mut idx = MultiIndex::zero(self.spec.basis());
            let mut coeff = r.one();
            for (slot, &e) in comp.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let (k, c) = &powers[slot][e as usize];
                coeff = r.mul(&coeff, c);
                if r.is_zero(&coeff) {
                    continue 'outer;
                }
                coeff = r.mul_nat(&idx.binomial_product_unchecked(k), &coeff);
                idx = idx.add_unchecked(k);
            }
            add_term(r, &mut terms, idx, coeff);
        }
        Ok(GammaElement { spec: self.spec.clone(), terms })
    }

    /// Restriction of `spec` over a different ring, keeping the basis;
    /// coefficients are pushed through `f`.
    pub(crate) fn map_coefficients(&self, ring: &Ring, f: impl Fn(&Value) -> Value) -> GammaElement {
        let spec = self.spec.with_ring(ring);
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            add_term(ring, &mut terms, k.clone(), f(c));
        }
        GammaElement { spec, terms }
    }

    pub fn to_json(&self) -> Json {
        let r = self.ring();
        let terms: Vec<Json> = self
            .terms
            .iter()
            .map(|(k, c)| json!({"exps": k.to_json(), "coeff": r.value_to_json(c)}))
            .collect();
        json!({"ring": r.to_string(), "basis": self.spec.basis().to_json(), "terms": terms})
    }

    pub fn from_json(j: &Json) -> Result<GammaElement> {
        let spec = FreeModuleSpec::from_json(j)?;
        GammaElement::from_json_with_spec(&spec, j)
    }

    /// Parses the `"terms"` list against a known spec.
    pub fn from_json_with_spec(spec: &FreeModuleSpec, j: &Json) -> Result<GammaElement> {
        let terms = j
            .get("terms")
            .and_then(Json::as_array)
            .ok_or_else(|| Error::parse("gamma element needs a \"terms\" array"))?;
        let mut out = GammaElement::zero(spec);
        for t in terms {
            let k = MultiIndex::from_json(spec.basis(), t.get("exps").unwrap_or(&json!({})))?;
            let c = spec
                .ring()
                .value_from_json(t.get("coeff").ok_or_else(|| Error::parse("term without \"coeff\""))?)?;
            add_term(spec.ring(), &mut out.terms, k, c);
        }
        Ok(out)
    }
}

impl fmt::Display for GammaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            self.ring().fmt_value(c, f)?;
            if !k.is_zero() {
                write!(f, "*{k}")?;
            }
        }
        Ok(())
    }
}

/// `x^[n] = sum_{deg k = n} (prod_i x_i^{k_i}) b^[k]`.
pub fn dp_generator(n: u32, x: &ModuleVector) -> GammaElement {
    let spec = x.spec();
    let r = spec.ring();
    let support: Vec<usize> = (0..spec.rank()).filter(|&i| !r.is_zero(&x.values()[i])).collect();
    let mut terms = BTreeMap::new();
    for comp in weak_compositions(n, support.len()) {
        let mut exps = vec![0u32; spec.rank()];
        let mut coeff = r.one();
        for (&i, &e) in support.iter().zip(&comp) {
            exps[i] = e;
            coeff = r.mul(&coeff, &r.pow(&x.values()[i], e));
        }
        let k = MultiIndex::from_dense(spec.basis(), exps).expect("rank matches");
        add_term(r, &mut terms, k, coeff);
    }
    GammaElement { spec: spec.clone(), terms }
}

/// `Γ(f)`: the algebra morphism with `x^[n] -> f(x)^[n]`.
pub fn map_linear(f: &LinearMap, a: &GammaElement) -> Result<GammaElement> {
    f.source().check(a.spec())?;
    let target = f.target();
    let mut cache: HashMap<(usize, u32), GammaElement> = HashMap::new();
    let mut out = GammaElement::zero(target);
    for (k, c) in a.terms() {
        let mut image = GammaElement::constant_value(target, c.clone());
        for (i, &e) in k.exps().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let g = cache
                .entry((i, e))
                .or_insert_with(|| dp_generator(e, f.column(i)));
            image = image.mul_unchecked(g);
        }
        out = out.add_unchecked(&image);
    }
    Ok(out)
}

/// Spec of `M / span(drop)` together with the kept basis positions.
pub fn quotient_spec<S: AsRef<str>>(spec: &FreeModuleSpec, drop: &[S]) -> Result<(FreeModuleSpec, Vec<usize>)> {
    let mut dropped = BTreeSet::new();
    for d in drop {
        let i = spec
            .basis()
            .position(d.as_ref())
            .ok_or_else(|| Error::InvalidBasis(format!("unknown label {:?}", d.as_ref())))?;
        dropped.insert(i);
    }
    let kept: Vec<usize> = (0..spec.rank()).filter(|i| !dropped.contains(i)).collect();
    if kept.is_empty() {
        return Err(Error::EmptyQuotientBasis);
    }
    let labels: Vec<&str> = kept.iter().map(|&i| spec.basis().label(i)).collect();
    let reduced = FreeModuleSpec::new(spec.ring(), &BasisLabels::new(&labels)?)?;
    Ok((reduced, kept))
}

/// `Γ(M) -> Γ(M / span(drop))`: monomials touching a dropped label die, the
/// rest are kept verbatim.
pub fn quotient_by_basis_span<S: AsRef<str>>(drop: &[S], a: &GammaElement) -> Result<GammaElement> {
    let (reduced, kept) = quotient_spec(a.spec(), drop)?;
    Ok(project_to_quotient(&reduced, &kept, a))
}

pub(crate) fn project_to_quotient(reduced: &FreeModuleSpec, kept: &[usize], a: &GammaElement) -> GammaElement {
    let kept_set: BTreeSet<usize> = kept.iter().copied().collect();
    let mut terms = BTreeMap::new();
    for (k, c) in a.terms() {
        let touches_dropped = k.exps().iter().enumerate().any(|(i, &e)| e > 0 && !kept_set.contains(&i));
        if touches_dropped {
            continue;
        }
        let exps = kept.iter().map(|&i| k.exps()[i]).collect();
        let k = MultiIndex::from_dense(reduced.basis(), exps).expect("reduced rank");
        terms.insert(k, c.clone());
    }
    GammaElement::from_term_map(reduced, terms)
}

/// Section of the quotient map: reads an element of `Γ(M/P)` as an element
/// of `Γ(M)` supported on the kept labels.
pub(crate) fn include_from_quotient(full: &FreeModuleSpec, kept: &[usize], a: &GammaElement) -> GammaElement {
    let mut terms = BTreeMap::new();
    for (k, c) in a.terms() {
        let mut exps = vec![0u32; full.rank()];
        for (j, &i) in kept.iter().enumerate() {
            exps[i] = k.exps()[j];
        }
        let k = MultiIndex::from_dense(full.basis(), exps).expect("full rank");
        terms.insert(k, c.clone());
    }
    GammaElement::from_term_map(full, terms)
}

/// `ι(x) = x^[1]`.
pub fn grade_one_iota(x: &ModuleVector) -> GammaElement {
    let spec = x.spec();
    let mut terms = BTreeMap::new();
    for (i, c) in x.values().iter().enumerate() {
        add_term(spec.ring(), &mut terms, MultiIndex::unit(spec.basis(), i), c.clone());
    }
    GammaElement { spec: spec.clone(), terms }
}

/// Inverse of [`grade_one_iota`] on the degree-1 part.
pub fn grade_one_inverse(a: &GammaElement) -> Result<ModuleVector> {
    if !a.is_homogeneous(1) {
        return Err(Error::NotDegreeOne);
    }
    let spec = a.spec();
    let mut coords = vec![spec.ring().zero(); spec.rank()];
    for (k, c) in a.terms() {
        let i = k.exps().iter().position(|&e| e == 1).expect("degree one");
        coords[i] = c.clone();
    }
    Ok(ModuleVector::from_values(spec, coords))
}

/// Weak universal property: the algebra morphism `Γ(M) -> A` sending
/// `b^[k]` to `prod_i γ_{k_i}(φ(b_i))`, where `phi[i]` is the image of the
/// `i`-th basis vector and must lie in the target's dp-ideal.
pub fn lift_to_dp<D: DpStructure>(target: &D, phi: &[D::Elem], a: &GammaElement) -> Result<D::Elem> {
    let spec = a.spec();
    if phi.len() != spec.rank() {
        return Err(Error::SpecMismatch(format!(
            "{} basis images for a module of rank {}",
            phi.len(),
            spec.rank()
        )));
    }
    for (i, p) in phi.iter().enumerate() {
        if !target.in_ideal(p) {
            return Err(Error::ImageNotInIdeal(spec.basis().label(i).to_string()));
        }
    }
    let mut cache: HashMap<(usize, u32), D::Elem> = HashMap::new();
    let mut out = target.zero();
    for (k, c) in a.terms() {
        let mut image = target.from_scalar(&Scalar::from_parts(spec.ring(), c.clone()))?;
        for (i, &e) in k.exps().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let g = match cache.entry((i, e)) {
                std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
                std::collections::hash_map::Entry::Vacant(v) => v.insert(target.gamma(e, &phi[i])?),
            };
            image = target.mul(&image, g);
        }
        out = target.add(&out, &image);
    }
    Ok(out)
}
