//! Divided power structures and a randomized checker for their axioms.
//!
//! A [`DpStructure`] bundles a commutative algebra with exact equality, an
//! ideal-membership predicate and the maps `γ_n`. [`check_axioms`] samples
//! ideal elements and ring elements and evaluates both sides of each axiom
//! exactly:
//!
//! ```text
//! (i)   γ_0(x) = 1
//! (ii)  γ_1(x) = x
//! (iii) γ_n(x) ∈ I                                   (n ≥ 1)
//! (iv)  γ_n(x + y) = Σ_{i+j=n} γ_i(x) γ_j(y)
//! (v)   γ_n(r x) = r^n γ_n(x)
//! (vi)  γ_m(x) γ_n(x) = binomial(m+n, m) γ_{m+n}(x)
//! (vii) γ_m(γ_n(x)) = (mn)! / (m! (n!)^m) γ_{mn}(x)   (n ≥ 1)
//! ```
//!
//! Failures are recorded in the [`AxiomReport`], never raised.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::error::{Error, Result};
use crate::freemodule::FreeModuleSpec;
use crate::gamma::{include_from_quotient, project_to_quotient, quotient_spec, GammaElement, DEFAULT_TERM_BUDGET};
use crate::multiindex::MultiIndex;
use crate::sampling::{self, random_gamma, random_nonzero_scalar, random_scalar, SampleRng};
use crate::scalars::{binomial, factorial, uniform_dp_coeff, Exponents, Ring, RingDescriptor, Scalar, Value};

/// A commutative algebra with an ideal carrying divided powers.
pub trait DpStructure: Send + Sync {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync;

    fn name(&self) -> String;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul_nat(&self, n: &BigUint, a: &Self::Elem) -> Self::Elem;
    fn in_ideal(&self, a: &Self::Elem) -> bool;
    /// `γ_n(a)`; `a` must lie in the ideal when `n ≥ 1`.
    fn gamma(&self, n: u32, a: &Self::Elem) -> Result<Self::Elem>;
    /// Image of a scalar under the structure map from its ring.
    fn from_scalar(&self, r: &Scalar) -> Result<Self::Elem>;
    fn sample_ideal(&self, rng: &mut SampleRng) -> Self::Elem;
    fn sample_element(&self, rng: &mut SampleRng) -> Self::Elem;
    fn elem_to_json(&self, a: &Self::Elem) -> Json;

    fn pow(&self, a: &Self::Elem, n: u32) -> Self::Elem {
        (0..n).fold(self.one(), |acc, _| self.mul(&acc, a))
    }
}

impl<D: DpStructure + ?Sized> DpStructure for &D {
    type Elem = D::Elem;

    fn name(&self) -> String {
        (**self).name()
    }
    fn zero(&self) -> Self::Elem {
        (**self).zero()
    }
    fn one(&self) -> Self::Elem {
        (**self).one()
    }
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        (**self).add(a, b)
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        (**self).mul(a, b)
    }
    fn mul_nat(&self, n: &BigUint, a: &Self::Elem) -> Self::Elem {
        (**self).mul_nat(n, a)
    }
    fn in_ideal(&self, a: &Self::Elem) -> bool {
        (**self).in_ideal(a)
    }
    fn gamma(&self, n: u32, a: &Self::Elem) -> Result<Self::Elem> {
        (**self).gamma(n, a)
    }
    fn from_scalar(&self, r: &Scalar) -> Result<Self::Elem> {
        (**self).from_scalar(r)
    }
    fn sample_ideal(&self, rng: &mut SampleRng) -> Self::Elem {
        (**self).sample_ideal(rng)
    }
    fn sample_element(&self, rng: &mut SampleRng) -> Self::Elem {
        (**self).sample_element(rng)
    }
    fn elem_to_json(&self, a: &Self::Elem) -> Json {
        (**self).elem_to_json(a)
    }
}

fn scalar_into(ring: &Ring, r: &Scalar) -> Result<Value> {
    if r.ring() == ring {
        return Ok(r.value().clone());
    }
    match (&**r.ring(), ring.base()) {
        (RingDescriptor::Integers, _) => match r.value() {
            Value::Int(n) => Ok(ring.from_bigint(n)),
            _ => unreachable!("integer ring holds integers"),
        },
        (base, target_base) if base == target_base => Ok(ring.from_base(r.value())),
        _ => Err(Error::RingMismatch { left: ring.to_string(), right: r.ring().to_string() }),
    }
}

/// The divided powers of the augmentation ideal of `Γ_R(M)`.
#[derive(Debug, Clone)]
pub struct GammaAugmentation {
    spec: FreeModuleSpec,
    budget: u64,
}

impl GammaAugmentation {
    pub fn new(spec: &FreeModuleSpec) -> Self {
        GammaAugmentation { spec: spec.clone(), budget: DEFAULT_TERM_BUDGET }
    }

    pub fn with_budget(spec: &FreeModuleSpec, budget: u64) -> Self {
        GammaAugmentation { spec: spec.clone(), budget }
    }

    pub fn spec(&self) -> &FreeModuleSpec {
        &self.spec
    }
}

impl DpStructure for GammaAugmentation {
    type Elem = GammaElement;

    fn name(&self) -> String {
        format!("gamma-augmentation {}", self.spec)
    }
    fn zero(&self) -> GammaElement {
        GammaElement::zero(&self.spec)
    }
    fn one(&self) -> GammaElement {
        GammaElement::one(&self.spec)
    }
    fn add(&self, a: &GammaElement, b: &GammaElement) -> GammaElement {
        a.add_unchecked(b)
    }
    fn mul(&self, a: &GammaElement, b: &GammaElement) -> GammaElement {
        a.mul_unchecked(b)
    }
    fn mul_nat(&self, n: &BigUint, a: &GammaElement) -> GammaElement {
        a.mul_nat(n)
    }
    fn in_ideal(&self, a: &GammaElement) -> bool {
        a.in_augmentation_ideal()
    }
    fn gamma(&self, n: u32, a: &GammaElement) -> Result<GammaElement> {
        self.spec.check(a.spec())?;
        a.gamma_n_with_budget(n, self.budget)
    }
    fn from_scalar(&self, r: &Scalar) -> Result<GammaElement> {
        Ok(GammaElement::constant_value(&self.spec, scalar_into(self.spec.ring(), r)?))
    }
    fn sample_ideal(&self, rng: &mut SampleRng) -> GammaElement {
        random_gamma(&self.spec, true, rng)
    }
    fn sample_element(&self, rng: &mut SampleRng) -> GammaElement {
        random_gamma(&self.spec, false, rng)
    }
    fn elem_to_json(&self, a: &GammaElement) -> Json {
        a.to_json()
    }
    fn pow(&self, a: &GammaElement, n: u32) -> GammaElement {
        a.pow(n)
    }
}

/// `γ_n(x) = x^n / n!` on a monomial ideal of `Q` or `Q[vars]`.
#[derive(Debug, Clone)]
pub struct RationalCanonical {
    ring: Ring,
    generators: Vec<Exponents>,
    whole_ring: bool,
}

/// Canonical divided powers of a `Q`-algebra on the ideal generated by the
/// given monomials.
pub fn rational_canonical(ring: &Ring, generators: &[Scalar]) -> Result<RationalCanonical> {
    if !ring.is_rational_algebra() {
        return Err(Error::NotRationalAlgebra(ring.to_string()));
    }
    let mut gens = Vec::new();
    let mut whole_ring = false;
    for g in generators {
        if g.ring() != ring {
            return Err(Error::RingMismatch { left: ring.to_string(), right: g.ring().to_string() });
        }
        match g.value() {
            Value::Rat(q) => whole_ring |= !q.is_zero(),
            Value::Poly(p) if p.is_empty() => {}
            Value::Poly(p) if p.len() == 1 => {
                let e = p.keys().next().expect("one term").clone();
                whole_ring |= e.iter().all(|&k| k == 0);
                gens.push(e);
            }
            _ => return Err(Error::UnsupportedIdeal(format!("{g} is not a monomial"))),
        }
    }
    Ok(RationalCanonical { ring: ring.clone(), generators: gens, whole_ring })
}

impl RationalCanonical {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }
}

impl DpStructure for RationalCanonical {
    type Elem = Value;

    fn name(&self) -> String {
        format!("rational-canonical {}", self.ring)
    }
    fn zero(&self) -> Value {
        self.ring.zero()
    }
    fn one(&self) -> Value {
        self.ring.one()
    }
    fn add(&self, a: &Value, b: &Value) -> Value {
        self.ring.add(a, b)
    }
    fn mul(&self, a: &Value, b: &Value) -> Value {
        self.ring.mul(a, b)
    }
    fn mul_nat(&self, n: &BigUint, a: &Value) -> Value {
        self.ring.mul_nat(n, a)
    }
    fn in_ideal(&self, a: &Value) -> bool {
        if self.whole_ring || self.ring.is_zero(a) {
            return true;
        }
        match a {
            Value::Poly(p) => p.keys().all(|e| {
                self.generators
                    .iter()
                    .any(|g| g.iter().zip(e).all(|(gk, ek)| gk <= ek))
            }),
            _ => false,
        }
    }
    fn gamma(&self, n: u32, a: &Value) -> Result<Value> {
        if n > 0 && !self.in_ideal(a) {
            return Err(Error::NotInAugmentationIdeal);
        }
        let fact = factorial(n as u64).into();
        Ok(self.ring.div_integer(&self.ring.pow(a, n), &fact).expect("Q-algebra"))
    }
    fn from_scalar(&self, r: &Scalar) -> Result<Value> {
        scalar_into(&self.ring, r)
    }
    fn sample_ideal(&self, rng: &mut SampleRng) -> Value {
        if self.whole_ring || self.generators.is_empty() {
            return if self.whole_ring { random_scalar(&self.ring, rng) } else { self.ring.zero() };
        }
        let base = self.ring.base();
        let mut acc = self.ring.zero();
        for _ in 0..rng.gen_range(1..=sampling::MAX_SUPPORT) {
            let g = &self.generators[rng.gen_range(0..self.generators.len())];
            let mut e = g.clone();
            let room = sampling::MAX_MONOMIAL_DEGREE.saturating_sub(g.iter().sum());
            for _ in 0..rng.gen_range(0..=room) {
                let i = rng.gen_range(0..e.len());
                e[i] += 1;
            }
            let c = random_nonzero_scalar(base, rng);
            let term = Value::Poly(BTreeMap::from([(e, c)]));
            acc = self.ring.add(&acc, &term);
        }
        acc
    }
    fn sample_element(&self, rng: &mut SampleRng) -> Value {
        random_scalar(&self.ring, rng)
    }
    fn elem_to_json(&self, a: &Value) -> Json {
        self.ring.value_to_json(a)
    }
}

/// `γ_n` on `Γ_Z(M)` (or `Γ_Q(M)`) computed through the embedding into
/// `Q[X_1, ..., X_r]` given by `b^[k] -> prod_i X_i^{k_i} / k_i!`: the image
/// is raised to the `n`-th power, divided by `n!`, and pulled back along
/// `X^v -> (prod_i v_i!) b^[v]`. Over `Z` every pulled-back coefficient must
/// be an integer; [`Error::NotIntegral`] reports a violation.
pub fn gamma_oracle(n: u32, a: &GammaElement) -> Result<GammaElement> {
    let integral = match &**a.ring() {
        RingDescriptor::Integers => true,
        RingDescriptor::Rationals => false,
        other => {
            return Err(Error::UnsupportedRing(format!(
                "the fraction-field oracle needs Z or Q, got {other}"
            )))
        }
    };
    if n == 0 {
        return Ok(GammaElement::one(a.spec()));
    }
    if !a.in_augmentation_ideal() {
        return Err(Error::NotInAugmentationIdeal);
    }
    let rank = a.spec().rank();
    // zero-padded names keep the variable order equal to the basis order
    let names: Vec<String> = (0..rank).map(|i| format!("x{i:04}")).collect();
    let qx = RingDescriptor::poly(&RingDescriptor::Rationals, &names)?;
    let fact_prod = |e: &[u32]| e.iter().fold(BigUint::one(), |acc, &k| acc * factorial(k as u64));

    let mut image = qx.zero();
    for (k, c) in a.terms() {
        let c = match c {
            Value::Int(z) => BigRational::from_integer(z.clone()),
            Value::Rat(q) => q.clone(),
            _ => unreachable!("Z or Q coefficients"),
        };
        let c = c / BigRational::from_integer(fact_prod(k.exps()).into());
        let term = Value::Poly(BTreeMap::from([(k.exps().to_vec(), Value::Rat(c))]));
        image = qx.add(&image, &term);
    }
    let power = qx.pow(&image, n);
    let divided = qx
        .div_integer(&power, &factorial(n as u64).into())
        .expect("Q-algebra");

    let spec = a.spec();
    let mut out = GammaElement::zero(spec);
    if let Value::Poly(p) = divided {
        for (e, c) in p {
            let Value::Rat(q) = c else { unreachable!("Q coefficients") };
            let q = q * BigRational::from_integer(fact_prod(&e).into());
            let coeff = if integral {
                if !q.is_integer() {
                    return Err(Error::NotIntegral(format!("oracle coefficient {q} at {e:?}")));
                }
                Value::Int(q.to_integer())
            } else {
                Value::Rat(q)
            };
            let k = MultiIndex::from_dense(spec.basis(), e)?;
            out = out.add_unchecked(&GammaElement::monomial_value(spec, k, coeff));
        }
    }
    Ok(out)
}

/// The augmentation-ideal structure with `γ` computed by [`gamma_oracle`].
#[derive(Debug, Clone)]
pub struct OracleDp {
    inner: GammaAugmentation,
}

impl OracleDp {
    pub fn new(spec: &FreeModuleSpec) -> Result<Self> {
        match &**spec.ring() {
            RingDescriptor::Integers | RingDescriptor::Rationals => {
                Ok(OracleDp { inner: GammaAugmentation::new(spec) })
            }
            other => Err(Error::UnsupportedRing(other.to_string())),
        }
    }
}

impl DpStructure for OracleDp {
    type Elem = GammaElement;

    fn name(&self) -> String {
        format!("fraction-field-oracle {}", self.inner.spec)
    }
    fn zero(&self) -> GammaElement {
        self.inner.zero()
    }
    fn one(&self) -> GammaElement {
        self.inner.one()
    }
    fn add(&self, a: &GammaElement, b: &GammaElement) -> GammaElement {
        self.inner.add(a, b)
    }
    fn mul(&self, a: &GammaElement, b: &GammaElement) -> GammaElement {
        self.inner.mul(a, b)
    }
    fn mul_nat(&self, n: &BigUint, a: &GammaElement) -> GammaElement {
        self.inner.mul_nat(n, a)
    }
    fn in_ideal(&self, a: &GammaElement) -> bool {
        self.inner.in_ideal(a)
    }
    fn gamma(&self, n: u32, a: &GammaElement) -> Result<GammaElement> {
        gamma_oracle(n, a)
    }
    fn from_scalar(&self, r: &Scalar) -> Result<GammaElement> {
        self.inner.from_scalar(r)
    }
    fn sample_ideal(&self, rng: &mut SampleRng) -> GammaElement {
        self.inner.sample_ideal(rng)
    }
    fn sample_element(&self, rng: &mut SampleRng) -> GammaElement {
        self.inner.sample_element(rng)
    }
    fn elem_to_json(&self, a: &GammaElement) -> Json {
        a.to_json()
    }
}

/// Divided powers on `Γ(M / span(drop))` induced from a structure on `Γ(M)`:
/// lift along the inclusion of the kept labels, apply `γ`, project.
#[derive(Debug, Clone)]
pub struct QuotientDp<D> {
    inner: D,
    full: FreeModuleSpec,
    reduced: FreeModuleSpec,
    kept: Vec<usize>,
}

/// Builds the quotient structure after checking that `γ_m(p^[n] · y)`
/// projects to zero for every dropped label `p`, `m, n ≤ 3` and `y` either `1`
/// or a kept basis vector.
pub fn quotient_dp<D, S>(dp: D, full: &FreeModuleSpec, drop: &[S]) -> Result<QuotientDp<D>>
where
    D: DpStructure<Elem = GammaElement>,
    S: AsRef<str>,
{
    let (reduced, kept) = quotient_spec(full, drop)?;
    let one = full.ring().one();
    for (p, _) in full.basis().labels().iter().enumerate().filter(|(i, _)| !kept.contains(i)) {
        let mut cofactors = vec![GammaElement::one(full)];
        cofactors.extend(
            kept.iter()
                .map(|&j| GammaElement::monomial_value(full, MultiIndex::unit(full.basis(), j), one.clone())),
        );
        for n in 1..=3 {
            let gen = GammaElement::monomial_value(full, MultiIndex::unit(full.basis(), p).scale(n), one.clone());
            for y in &cofactors {
                let x = gen.mul_unchecked(y);
                for m in 1..=3 {
                    let g = dp.gamma(m, &x)?;
                    if !project_to_quotient(&reduced, &kept, &g).is_zero() {
                        return Err(Error::KernelNotStable(format!(
                            "γ_{m}({x}) leaves the kernel of the projection"
                        )));
                    }
                }
            }
        }
    }
    Ok(QuotientDp { inner: dp, full: full.clone(), reduced, kept })
}

impl<D> QuotientDp<D> {
    pub fn reduced_spec(&self) -> &FreeModuleSpec {
        &self.reduced
    }
}

impl<D: DpStructure<Elem = GammaElement>> DpStructure for QuotientDp<D> {
    type Elem = GammaElement;

    fn name(&self) -> String {
        format!("quotient {} of {}", self.reduced, self.inner.name())
    }
    fn zero(&self) -> GammaElement {
        GammaElement::zero(&self.reduced)
    }
    fn one(&self) -> GammaElement {
        GammaElement::one(&self.reduced)
    }
    fn add(&self, a: &GammaElement, b: &GammaElement) -> GammaElement {
        a.add_unchecked(b)
    }
    fn mul(&self, a: &GammaElement, b: &GammaElement) -> GammaElement {
        a.mul_unchecked(b)
    }
    fn mul_nat(&self, n: &BigUint, a: &GammaElement) -> GammaElement {
        a.mul_nat(n)
    }
    fn in_ideal(&self, a: &GammaElement) -> bool {
        a.in_augmentation_ideal()
    }
    fn gamma(&self, n: u32, a: &GammaElement) -> Result<GammaElement> {
        self.reduced.check(a.spec())?;
        let lifted = include_from_quotient(&self.full, &self.kept, a);
        let g = self.inner.gamma(n, &lifted)?;
        Ok(project_to_quotient(&self.reduced, &self.kept, &g))
    }
    fn from_scalar(&self, r: &Scalar) -> Result<GammaElement> {
        Ok(GammaElement::constant_value(&self.reduced, scalar_into(self.reduced.ring(), r)?))
    }
    fn sample_ideal(&self, rng: &mut SampleRng) -> GammaElement {
        random_gamma(&self.reduced, true, rng)
    }
    fn sample_element(&self, rng: &mut SampleRng) -> GammaElement {
        random_gamma(&self.reduced, false, rng)
    }
    fn elem_to_json(&self, a: &GammaElement) -> Json {
        a.to_json()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Axiom {
    #[serde(rename = "i")]
    Zeroth,
    #[serde(rename = "ii")]
    First,
    #[serde(rename = "iii")]
    Membership,
    #[serde(rename = "iv")]
    Additivity,
    #[serde(rename = "v")]
    Scaling,
    #[serde(rename = "vi")]
    Product,
    #[serde(rename = "vii")]
    Composition,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [
        Axiom::Zeroth,
        Axiom::First,
        Axiom::Membership,
        Axiom::Additivity,
        Axiom::Scaling,
        Axiom::Product,
        Axiom::Composition,
    ];

    pub fn roman(self) -> &'static str {
        match self {
            Axiom::Zeroth => "i",
            Axiom::First => "ii",
            Axiom::Membership => "iii",
            Axiom::Additivity => "iv",
            Axiom::Scaling => "v",
            Axiom::Product => "vi",
            Axiom::Composition => "vii",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomResult {
    pub axiom: Axiom,
    pub pass: usize,
    pub fail: usize,
    /// First failing sample (lowest index), with inputs and both sides.
    pub counterexample: Option<Json>,
    pub seed: u64,
    #[serde(rename = "maxN")]
    pub max_n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub structure: String,
    pub seed: u64,
    pub samples: usize,
    #[serde(rename = "maxN")]
    pub max_n: u32,
    pub axioms: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.axioms.iter().all(|a| a.fail == 0)
    }

    pub fn result(&self, axiom: Axiom) -> &AxiomResult {
        self.axioms.iter().find(|a| a.axiom == axiom).expect("every axiom is reported")
    }

    pub fn to_json(&self) -> Json {
        serde_json::to_value(self).expect("report serializes")
    }
}

struct Sample<E> {
    x: E,
    y: E,
    r: E,
    m: u32,
    n: u32,
    n_pos: u32,
}

enum Outcome {
    Pass,
    Fail { lhs: Json, rhs: Json },
}

/// Evaluates all seven axioms on `samples` seeded random inputs with
/// `m, n ≤ max_n`. Samples are evaluated in parallel on the current rayon
/// pool; the report does not depend on the scheduling.
pub fn check_axioms<D: DpStructure>(dp: &D, seed: u64, samples: usize, max_n: u32) -> Result<AxiomReport> {
    if max_n < 2 {
        return Err(Error::InvalidArgument(format!("maxN must be at least 2, got {max_n}")));
    }
    let mut rng = sampling::rng(seed);
    let inputs: Vec<Sample<D::Elem>> = (0..samples)
        .map(|_| Sample {
            x: dp.sample_ideal(&mut rng),
            y: dp.sample_ideal(&mut rng),
            r: dp.sample_element(&mut rng),
            m: rng.gen_range(0..=max_n),
            n: rng.gen_range(0..=max_n),
            n_pos: rng.gen_range(1..=max_n),
        })
        .collect();

    let outcomes: Vec<Vec<Outcome>> = inputs
        .par_iter()
        .map(|s| Axiom::ALL.iter().map(|&ax| evaluate(dp, ax, s)).collect())
        .collect();

    let axioms = Axiom::ALL
        .iter()
        .enumerate()
        .map(|(a, &axiom)| {
            let mut pass = 0;
            let mut fail = 0;
            let mut counterexample = None;
            for (i, row) in outcomes.iter().enumerate() {
                match &row[a] {
                    Outcome::Pass => pass += 1,
                    Outcome::Fail { lhs, rhs } => {
                        fail += 1;
                        if counterexample.is_none() {
                            let s = &inputs[i];
                            counterexample = Some(json!({
                                "sample": i,
                                "inputs": {
                                    "x": dp.elem_to_json(&s.x),
                                    "y": dp.elem_to_json(&s.y),
                                    "r": dp.elem_to_json(&s.r),
                                    "m": s.m,
                                    "n": if matches!(axiom, Axiom::Membership | Axiom::Composition) { s.n_pos } else { s.n },
                                },
                                "lhs": lhs,
                                "rhs": rhs,
                            }));
                        }
                    }
                }
            }
            AxiomResult { axiom, pass, fail, counterexample, seed, max_n }
        })
        .collect();

    Ok(AxiomReport { structure: dp.name(), seed, samples, max_n, axioms })
}

fn evaluate<D: DpStructure>(dp: &D, axiom: Axiom, s: &Sample<D::Elem>) -> Outcome {
    match evaluate_sides(dp, axiom, s) {
        Ok((lhs, rhs)) if lhs == rhs => Outcome::Pass,
        Ok((lhs, rhs)) => Outcome::Fail { lhs: side_json(dp, &lhs), rhs: side_json(dp, &rhs) },
        Err(e) => Outcome::Fail { lhs: json!({"error": e.kind(), "detail": e.to_string()}), rhs: Json::Null },
    }
}

/// Either an algebra element or a membership verdict.
#[derive(PartialEq)]
enum Side<E> {
    Elem(E),
    InIdeal(bool),
}

fn side_json<D: DpStructure>(dp: &D, s: &Side<D::Elem>) -> Json {
    match s {
        Side::Elem(e) => dp.elem_to_json(e),
        Side::InIdeal(b) => json!({"inIdeal": b}),
    }
}

fn evaluate_sides<D: DpStructure>(dp: &D, axiom: Axiom, s: &Sample<D::Elem>) -> Result<(Side<D::Elem>, Side<D::Elem>)> {
    let (x, y, r, m, n) = (&s.x, &s.y, &s.r, s.m, s.n);
    let e = Side::Elem;
    Ok(match axiom {
        Axiom::Zeroth => (e(dp.gamma(0, x)?), e(dp.one())),
        Axiom::First => (e(dp.gamma(1, x)?), e(x.clone())),
        Axiom::Membership => (Side::InIdeal(dp.in_ideal(&dp.gamma(s.n_pos, x)?)), Side::InIdeal(true)),
        Axiom::Additivity => {
            let lhs = dp.gamma(n, &dp.add(x, y))?;
            let mut rhs = dp.zero();
            for i in 0..=n {
                rhs = dp.add(&rhs, &dp.mul(&dp.gamma(i, x)?, &dp.gamma(n - i, y)?));
            }
            (e(lhs), e(rhs))
        }
        Axiom::Scaling => {
            let lhs = dp.gamma(n, &dp.mul(r, x))?;
            let rhs = dp.mul(&dp.pow(r, n), &dp.gamma(n, x)?);
            (e(lhs), e(rhs))
        }
        Axiom::Product => {
            let lhs = dp.mul(&dp.gamma(m, x)?, &dp.gamma(n, x)?);
            let rhs = dp.mul_nat(&binomial((m + n) as u64, m as u64), &dp.gamma(m + n, x)?);
            (e(lhs), e(rhs))
        }
        Axiom::Composition => {
            let n = s.n_pos;
            let lhs = dp.gamma(m, &dp.gamma(n, x)?)?;
            let rhs = dp.mul_nat(&uniform_dp_coeff(m, n)?, &dp.gamma(m * n, x)?);
            (e(lhs), e(rhs))
        }
    })
}

/// Seeded single-axiom corruptions used to show that the harness is not
/// vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mutation {
    /// `γ_0(x) = 0`
    ZeroOfZeroth,
    /// `γ_1(x) = x + x^2`
    SquareInFirst,
    /// `γ_n(x) + 1` for `n ≥ 2`
    UnitShift,
    /// `γ_2(x) + x^2`
    SquareInSecond,
    /// `γ_2(x) + x^3`
    CubeInSecond,
    /// `2 γ_2(x)`
    DoubledSecond,
    /// `2 γ_n(x)` for `n ≥ 3`
    DoubledHigher,
}

impl Mutation {
    pub const ALL: [Mutation; 7] = [
        Mutation::ZeroOfZeroth,
        Mutation::SquareInFirst,
        Mutation::UnitShift,
        Mutation::SquareInSecond,
        Mutation::CubeInSecond,
        Mutation::DoubledSecond,
        Mutation::DoubledHigher,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::ZeroOfZeroth => "zero-of-zeroth",
            Mutation::SquareInFirst => "square-in-first",
            Mutation::UnitShift => "unit-shift",
            Mutation::SquareInSecond => "square-in-second",
            Mutation::CubeInSecond => "cube-in-second",
            Mutation::DoubledSecond => "doubled-second",
            Mutation::DoubledHigher => "doubled-higher",
        }
    }

    pub fn parse(name: &str) -> Result<Mutation> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mutation {name:?}")))
    }

    /// The axiom this corruption is designed to violate.
    pub fn target(self) -> Axiom {
        match self {
            Mutation::ZeroOfZeroth => Axiom::Zeroth,
            Mutation::SquareInFirst => Axiom::First,
            Mutation::UnitShift => Axiom::Membership,
            Mutation::SquareInSecond => Axiom::Additivity,
            Mutation::CubeInSecond => Axiom::Scaling,
            Mutation::DoubledSecond => Axiom::Product,
            Mutation::DoubledHigher => Axiom::Composition,
        }
    }
}

/// A structure whose `γ` has been deliberately corrupted.
#[derive(Debug, Clone)]
pub struct Corrupted<D> {
    inner: D,
    mutation: Mutation,
}

impl<D> Corrupted<D> {
    pub fn new(inner: D, mutation: Mutation) -> Self {
        Corrupted { inner, mutation }
    }
}

impl<D: DpStructure> DpStructure for Corrupted<D> {
    type Elem = D::Elem;

    fn name(&self) -> String {
        format!("{} corrupted by {:?}", self.inner.name(), self.mutation)
    }
    fn zero(&self) -> D::Elem {
        self.inner.zero()
    }
    fn one(&self) -> D::Elem {
        self.inner.one()
    }
    fn add(&self, a: &D::Elem, b: &D::Elem) -> D::Elem {
        self.inner.add(a, b)
    }
    fn mul(&self, a: &D::Elem, b: &D::Elem) -> D::Elem {
        self.inner.mul(a, b)
    }
    fn mul_nat(&self, n: &BigUint, a: &D::Elem) -> D::Elem {
        self.inner.mul_nat(n, a)
    }
    fn in_ideal(&self, a: &D::Elem) -> bool {
        self.inner.in_ideal(a)
    }
    fn gamma(&self, n: u32, x: &D::Elem) -> Result<D::Elem> {
        let d = &self.inner;
        let g = d.gamma(n, x)?;
        let two = BigUint::from(2u32);
        Ok(match (self.mutation, n) {
            (Mutation::ZeroOfZeroth, 0) => d.zero(),
            (Mutation::SquareInFirst, 1) => d.add(&g, &d.mul(x, x)),
            (Mutation::UnitShift, n) if n >= 2 => d.add(&g, &d.one()),
            (Mutation::SquareInSecond, 2) => d.add(&g, &d.mul(x, x)),
            (Mutation::CubeInSecond, 2) => d.add(&g, &d.mul(x, &d.mul(x, x))),
            (Mutation::DoubledSecond, 2) => d.mul_nat(&two, &g),
            (Mutation::DoubledHigher, n) if n >= 3 => d.mul_nat(&two, &g),
            _ => g,
        })
    }
    fn from_scalar(&self, r: &Scalar) -> Result<D::Elem> {
        self.inner.from_scalar(r)
    }
    fn sample_ideal(&self, rng: &mut SampleRng) -> D::Elem {
        self.inner.sample_ideal(rng)
    }
    fn sample_element(&self, rng: &mut SampleRng) -> D::Elem {
        self.inner.sample_element(rng)
    }
    fn elem_to_json(&self, a: &D::Elem) -> Json {
        self.inner.elem_to_json(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freemodule::ModuleVector;
    use crate::gamma::{dp_generator, lift_to_dp};
    use crate::multiindex::BasisLabels;

    fn spec(ring: &str, rank: usize) -> FreeModuleSpec {
        FreeModuleSpec::standard(&RingDescriptor::parse(ring).unwrap(), rank).unwrap()
    }

    fn qx() -> (Ring, RationalCanonical) {
        let ring = RingDescriptor::parse("Q[X]").unwrap();
        let x = Scalar::var(&ring, "X").unwrap();
        let dp = rational_canonical(&ring, &[x]).unwrap();
        (ring, dp)
    }

    #[test]
    fn rational_canonical_values() {
        let (ring, dp) = qx();
        let x = ring.var("X").unwrap();
        let x3_over_6 = ring.div_integer(&ring.pow(&x, 3), &6.into()).unwrap();
        assert_eq!(dp.gamma(3, &x).unwrap(), x3_over_6);
        assert_eq!(dp.gamma(0, &x).unwrap(), ring.one());
        let p = ring.add(&x, &ring.mul(&x, &x));
        let expected = ring.div_integer(&ring.mul(&p, &p), &2.into()).unwrap();
        assert_eq!(dp.gamma(2, &p).unwrap(), expected);
        assert_eq!(dp.gamma(1, &ring.one()), Err(Error::NotInAugmentationIdeal));
    }

    #[test]
    fn rational_canonical_rejects_non_rational_rings() {
        let z = RingDescriptor::parse("Z[X]").unwrap();
        assert!(matches!(rational_canonical(&z, &[]), Err(Error::NotRationalAlgebra(_))));
        let (ring, _) = qx();
        let x = Scalar::var(&ring, "X").unwrap();
        let not_monomial = x.add(&Scalar::one(&ring)).unwrap();
        assert!(matches!(rational_canonical(&ring, &[not_monomial]), Err(Error::UnsupportedIdeal(_))));
    }

    #[test]
    fn rational_canonical_passes_harness() {
        let (_, dp) = qx();
        let report = check_axioms(&dp, sampling::DEFAULT_SEED, 100, 4).unwrap();
        assert!(report.all_pass(), "{}", report.to_json());
        assert!(report.axioms.iter().all(|a| a.pass == 100 && a.counterexample.is_none()));
    }

    #[test]
    fn gamma_augmentation_passes_harness() {
        let dp = GammaAugmentation::new(&spec("Z", 2));
        let report = check_axioms(&dp, 7, 60, 4).unwrap();
        assert!(report.all_pass(), "{}", report.to_json());
    }

    #[test]
    fn max_n_below_two_rejected() {
        let dp = GammaAugmentation::new(&spec("Z", 1));
        assert!(check_axioms(&dp, 1, 1, 1).is_err());
    }

    #[test]
    fn doubled_second_caught_by_product_axiom() {
        let dp = Corrupted::new(GammaAugmentation::new(&spec("Z", 2)), Mutation::DoubledSecond);
        let report = check_axioms(&dp, sampling::DEFAULT_SEED, 50, 4).unwrap();
        let vi = report.result(Axiom::Product);
        assert!(vi.fail > 0);
        let cx = vi.counterexample.as_ref().unwrap();
        assert!(cx.get("lhs").is_some() && cx.get("rhs").is_some());
        assert_ne!(cx["lhs"], cx["rhs"]);
    }

    #[test]
    fn every_mutation_is_caught_by_its_axiom() {
        let base = GammaAugmentation::new(&spec("Z", 2));
        for m in Mutation::ALL {
            let report = check_axioms(&Corrupted::new(&base, m), sampling::DEFAULT_SEED, 200, 4).unwrap();
            assert!(report.result(m.target()).fail > 0, "{m:?} not caught");
        }
    }

    #[test]
    fn oracle_examples() {
        let s = spec("Z", 1);
        let t = |n: u32, c: i64| GammaElement::from_int_terms(&s, &[(&[("b1", n)], c)]).unwrap();
        assert_eq!(gamma_oracle(2, &t(1, 1)).unwrap(), t(2, 1));
        // (X^2/2)^2 / 2 = X^4 / 8 = 3 X^4 / 4!
        assert_eq!(gamma_oracle(2, &t(2, 1)).unwrap(), t(4, 3));
        assert!(matches!(
            gamma_oracle(2, &GammaElement::one(&spec("Z/6", 1))),
            Err(Error::UnsupportedRing(_))
        ));
        assert_eq!(gamma_oracle(1, &GammaElement::one(&s)), Err(Error::NotInAugmentationIdeal));
    }

    #[test]
    fn oracle_agrees_with_closed_form() {
        let mut rng = sampling::rng(11);
        for rank in 1..=3 {
            let s = spec("Z", rank);
            for _ in 0..30 {
                let a = random_gamma(&s, true, &mut rng);
                for n in 0..=4 {
                    assert_eq!(gamma_oracle(n, &a).unwrap(), a.gamma_n(n).unwrap(), "a = {a}, n = {n}");
                }
            }
        }
    }

    #[test]
    fn quotient_structure() {
        let full = spec("Z", 2);
        let q = quotient_dp(GammaAugmentation::new(&full), &full, &["b2"]).unwrap();
        let reduced = q.reduced_spec().clone();
        let b1 = GammaElement::from_int_terms(&reduced, &[(&[("b1", 1)], 1)]).unwrap();
        let b1_2 = GammaElement::from_int_terms(&reduced, &[(&[("b1", 2)], 1)]).unwrap();
        assert_eq!(q.gamma(2, &b1).unwrap(), b1_2);
        // γ_n(p^[1] mod P) = 0 for p in P
        let p = GammaElement::from_int_terms(&full, &[(&[("b2", 1)], 1)]).unwrap();
        let projected = crate::gamma::quotient_by_basis_span(&["b2"], &p).unwrap();
        assert_eq!(q.gamma(3, &projected).unwrap(), GammaElement::zero(&reduced));
        let report = check_axioms(&q, sampling::DEFAULT_SEED, 50, 4).unwrap();
        assert!(report.all_pass());
    }

    #[test]
    fn quotient_rejects_unstable_kernel() {
        let full = spec("Z", 2);
        let broken = Corrupted::new(GammaAugmentation::new(&full), Mutation::UnitShift);
        assert!(matches!(quotient_dp(broken, &full, &["b2"]), Err(Error::KernelNotStable(_))));
    }

    #[test]
    fn lift_examples() {
        let s = spec("Z", 2);
        let dp = GammaAugmentation::new(&s);
        let iota: Vec<GammaElement> = (0..2)
            .map(|i| crate::gamma::grade_one_iota(&ModuleVector::basis_vector(&s, i)))
            .collect();
        let mut rng = sampling::rng(3);
        for _ in 0..20 {
            let a = random_gamma(&s, false, &mut rng);
            assert_eq!(lift_to_dp(&dp, &iota, &a).unwrap(), a);
        }

        // rank 1 into Q[X] with b1 -> q: b1^[n] -> q^n / n!
        let r1 = spec("Z", 1);
        let (ring, qdp) = qx();
        let q = ring.mul(&ring.from_i64(3), &ring.var("X").unwrap());
        for n in 0..5 {
            let a = GammaElement::from_int_terms(&r1, &[(&[("b1", n)], 1)]).unwrap();
            let expected = ring.div_integer(&ring.pow(&q, n), &factorial(n as u64).into()).unwrap();
            assert_eq!(lift_to_dp(&qdp, &[q.clone()], &a).unwrap(), expected);
        }
        assert!(matches!(lift_to_dp(&qdp, &[ring.one()], &GammaElement::one(&r1)), Err(Error::ImageNotInIdeal(_))));
    }

    #[test]
    fn lift_sends_generators_to_divided_powers() {
        let s = spec("Z", 2);
        let ring = RingDescriptor::parse("Q[X,Y]").unwrap();
        let gens = [Scalar::var(&ring, "X").unwrap(), Scalar::var(&ring, "Y").unwrap()];
        let target = rational_canonical(&ring, &gens).unwrap();
        let mut rng = sampling::rng(5);
        for _ in 0..20 {
            let phi = vec![target.sample_ideal(&mut rng), target.sample_ideal(&mut rng)];
            let x = ModuleVector::from_ints(&s, &[("b1", 1), ("b2", 1)]).unwrap();
            let lhs = lift_to_dp(&target, &phi, &dp_generator(2, &x)).unwrap();
            let rhs = target.gamma(2, &target.add(&phi[0], &phi[1])).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn structures_agreeing_on_generators_agree() {
        let s = spec("Z", 3);
        let closed = GammaAugmentation::new(&s);
        let oracle = OracleDp::new(&s).unwrap();
        let mut rng = sampling::rng(9);
        // agreement on generators x^[1]
        for _ in 0..20 {
            let x = crate::gamma::grade_one_iota(&sampling::random_vector(&s, &mut rng));
            for n in 0..=4 {
                assert_eq!(closed.gamma(n, &x).unwrap(), oracle.gamma(n, &x).unwrap());
            }
        }
        for _ in 0..20 {
            let a = closed.sample_ideal(&mut rng);
            assert_eq!(closed.gamma(3, &a).unwrap(), oracle.gamma(3, &a).unwrap());
        }
    }

    #[test]
    fn report_json_shape() {
        let dp = GammaAugmentation::new(&FreeModuleSpec::new(&RingDescriptor::integers(), &BasisLabels::numbered("e", 1)).unwrap());
        let report = check_axioms(&dp, 1, 3, 2).unwrap();
        let j = report.to_json();
        let first = &j["axioms"][0];
        assert_eq!(first["axiom"], "i");
        assert_eq!(first["pass"], 3);
        assert_eq!(first["fail"], 0);
        assert!(first["counterexample"].is_null());
        assert_eq!(first["seed"], 1);
        assert_eq!(first["maxN"], 2);
    }
}
