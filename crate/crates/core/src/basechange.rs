//! Base change `θ: S ⊗_R Γ_R(M) -> Γ_S(S ⊗_R M)` for free `M`.
//!
//! With `M` free on `b_1, ..., b_r`, both sides have the monomials `b^[k]`
//! as a basis over `S`, so `S ⊗ Γ_R(M)` is stored as an `S`-linear
//! combination of `R`-monomials ([`ExtendedGamma`]) with its own
//! multiplication, and `θ` sends `1 ⊗ b^[k]` to `b^[k]`. What makes the
//! statement nontrivial is the generator formula
//!
//! ```text
//! θ(s ⊗ x^[n]) = s (1 ⊗ x)^[n]
//! ```
//!
//! for non-basis `x`, where `x^[n]` is expanded over `R` on the left and
//! `1 ⊗ x` over `S` on the right.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value as Json};

use crate::error::{Error, Result};
use crate::freemodule::{FreeModuleSpec, ModuleVector};
use crate::gamma::{dp_generator, GammaElement};
use crate::multiindex::{weak_compositions, MultiIndex};
use crate::sampling::{self, random_vector};
use crate::scalars::{Ring, RingDescriptor, Value};

/// Seed of the fixed generator test set used by [`theta_uniqueness`].
pub const UNIQUENESS_SEED: u64 = 0x7E57_5E7;
/// Number of random vectors in the generator test set.
pub const UNIQUENESS_RANDOM_VECTORS: usize = 50;
/// Degree up to which candidate tables are built and generators `x^[n]`
/// are tested.
pub const UNIQUENESS_MAX_N: u32 = 3;

/// An algebra `S` over `R` through the canonical map: `Z -> S` for any `S`,
/// or the inclusion of `R` into a polynomial ring over the same base with
/// more variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    base: Ring,
    top: Ring,
}

impl Extension {
    pub fn new(base: &Ring, top: &Ring) -> Result<Self> {
        let ok = matches!(**base, RingDescriptor::Integers) || base.embeds_in(top);
        if !ok {
            return Err(Error::ExtensionMismatch(format!("no canonical map {base} -> {top}")));
        }
        Ok(Extension { base: base.clone(), top: top.clone() })
    }

    /// Parses `R->S` or a chain `R->S->T`; every step must be canonical.
    pub fn parse(tag: &str) -> Result<Self> {
        let rings = tag.split("->").map(RingDescriptor::parse).collect::<Result<Vec<_>>>()?;
        if rings.len() < 2 {
            return Err(Error::ExtensionMismatch(format!("{tag:?} is not of the form R->S")));
        }
        for w in rings.windows(2) {
            Extension::new(&w[0], &w[1])?;
        }
        Extension::new(&rings[0], rings.last().expect("two rings"))
    }

    pub fn base(&self) -> &Ring {
        &self.base
    }

    pub fn top(&self) -> &Ring {
        &self.top
    }

    pub fn embed(&self, r: &Value) -> Value {
        match (&*self.base, r) {
            (RingDescriptor::Integers, Value::Int(n)) => self.top.from_bigint(n),
            _ => self.base.embed_in(&self.top, r),
        }
    }

    /// `1 ⊗ x` for `x ∈ M`.
    pub fn embed_vector(&self, x: &ModuleVector) -> Result<ModuleVector> {
        self.check_base(x.spec().ring())?;
        let spec = x.spec().with_ring(&self.top);
        Ok(ModuleVector::from_values(&spec, x.values().iter().map(|c| self.embed(c)).collect()))
    }

    fn check_base(&self, ring: &Ring) -> Result<()> {
        if ring != &self.base {
            return Err(Error::ExtensionMismatch(format!("expected data over {}, got {ring}", self.base)));
        }
        Ok(())
    }

    fn check_top(&self, ring: &Ring) -> Result<()> {
        if ring != &self.top {
            return Err(Error::ExtensionMismatch(format!("expected data over {}, got {ring}", self.top)));
        }
        Ok(())
    }
}

impl fmt::Display for Extension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.base, self.top)
    }
}

/// An element of `S ⊗_R Γ_R(M)`: `sum_k s_k ⊗ b^[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedGamma {
    ext: Extension,
    source: FreeModuleSpec,
    terms: BTreeMap<MultiIndex, Value>,
}

impl ExtendedGamma {
    pub fn zero(ext: &Extension, source: &FreeModuleSpec) -> Result<Self> {
        ext.check_base(source.ring())?;
        Ok(ExtendedGamma { ext: ext.clone(), source: source.clone(), terms: BTreeMap::new() })
    }

    pub fn one(ext: &Extension, source: &FreeModuleSpec) -> Result<Self> {
        ExtendedGamma::pure(ext, &ext.top.one(), &GammaElement::one(source))
    }

    /// `s ⊗ a`.
    pub fn pure(ext: &Extension, s: &Value, a: &GammaElement) -> Result<Self> {
        let mut out = ExtendedGamma::zero(ext, a.spec())?;
        if !ext.top.contains(s) {
            return Err(Error::ExtensionMismatch(format!("{s:?} is not an element of {}", ext.top)));
        }
        for (k, c) in a.terms() {
            out.add_term(k.clone(), ext.top.mul(s, &ext.embed(c)));
        }
        Ok(out)
    }

    /// `sum s_k ⊗ b^[k]` from `(k, s_k)` pairs.
    pub fn from_terms(
        ext: &Extension,
        source: &FreeModuleSpec,
        terms: impl IntoIterator<Item = (MultiIndex, Value)>,
    ) -> Result<Self> {
        let mut out = ExtendedGamma::zero(ext, source)?;
        for (k, s) in terms {
            if k.basis() != source.basis() {
                return Err(Error::BasisMismatch);
            }
            out.add_term(k, s);
        }
        Ok(out)
    }

    fn add_term(&mut self, k: MultiIndex, s: Value) {
        let top = &self.ext.top;
        let sum = match self.terms.remove(&k) {
            Some(old) => top.add(&old, &s),
            None => s,
        };
        if !top.is_zero(&sum) {
            self.terms.insert(k, sum);
        }
    }

    pub fn extension(&self) -> &Extension {
        &self.ext
    }

    pub fn source(&self) -> &FreeModuleSpec {
        &self.source
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Value)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_same(&self, other: &ExtendedGamma) -> Result<()> {
        if self.ext != other.ext {
            return Err(Error::ExtensionMismatch(format!("{} vs {}", self.ext, other.ext)));
        }
        self.source.check(&other.source)
    }

    pub fn add(&self, other: &ExtendedGamma) -> Result<ExtendedGamma> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (k, s) in &other.terms {
            out.add_term(k.clone(), s.clone());
        }
        Ok(out)
    }

    /// `(s ⊗ b^[j]) (t ⊗ b^[k]) = st ⊗ b^[j] b^[k]`, extended bilinearly.
    pub fn mul(&self, other: &ExtendedGamma) -> Result<ExtendedGamma> {
        self.check_same(other)?;
        let top = &self.ext.top;
        let mut out = ExtendedGamma::zero(&self.ext, &self.source)?;
        for (j, s) in &self.terms {
            for (k, t) in &other.terms {
                let c = top.mul_nat(&j.binomial_product_unchecked(k), &top.mul(s, t));
                out.add_term(j.add_unchecked(k), c);
            }
        }
        Ok(out)
    }

    /// `s · a` for `s ∈ S`.
    pub fn scale(&self, s: &Value) -> ExtendedGamma {
        let top = &self.ext.top;
        let mut out = ExtendedGamma { terms: BTreeMap::new(), ..self.clone() };
        for (k, c) in &self.terms {
            out.add_term(k.clone(), top.mul(s, c));
        }
        out
    }

    pub fn to_json(&self) -> Json {
        let top = &self.ext.top;
        let terms: Vec<Json> = self
            .terms
            .iter()
            .map(|(k, c)| json!({"exps": k.to_json(), "coeff": top.value_to_json(c)}))
            .collect();
        json!({"extension": self.ext.to_string(), "basis": self.source.basis().to_json(), "terms": terms})
    }
}

/// The spec of `S ⊗ M`.
pub fn extended_spec(ext: &Extension, source: &FreeModuleSpec) -> FreeModuleSpec {
    source.with_ring(&ext.top)
}

pub fn theta_forward(ext: &Extension, a: &ExtendedGamma) -> Result<GammaElement> {
    if &a.ext != ext {
        return Err(Error::ExtensionMismatch(format!("{} vs {}", a.ext, ext)));
    }
    let spec = extended_spec(ext, &a.source);
    let mut out = GammaElement::zero(&spec);
    for (k, s) in &a.terms {
        out = out.add_unchecked(&GammaElement::monomial_value(&spec, k.clone(), s.clone()));
    }
    Ok(out)
}

pub fn theta_inverse(ext: &Extension, a: &GammaElement) -> Result<ExtendedGamma> {
    ext.check_top(a.ring())?;
    let source = a.spec().with_ring(&ext.base);
    ExtendedGamma::from_terms(
        ext,
        &source,
        a.terms().map(|(k, c)| (MultiIndex::from_dense(source.basis(), k.exps().to_vec()).expect("same basis"), c.clone())),
    )
}

/// A candidate `S`-linear map `S ⊗ Γ_R(M) -> Γ_S(S ⊗ M)` given by the
/// images of `1 ⊗ b^[k]` for all `k` of degree at most `max_degree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphismTable {
    ext: Extension,
    source: FreeModuleSpec,
    max_degree: u32,
    images: BTreeMap<MultiIndex, GammaElement>,
}

impl MorphismTable {
    pub fn new(
        ext: &Extension,
        source: &FreeModuleSpec,
        max_degree: u32,
        images: BTreeMap<MultiIndex, GammaElement>,
    ) -> Result<Self> {
        ext.check_base(source.ring())?;
        let target = extended_spec(ext, source);
        for d in 0..=max_degree {
            for e in weak_compositions(d, source.rank()) {
                let k = MultiIndex::from_dense(source.basis(), e).expect("rank matches");
                match images.get(&k) {
                    Some(img) => target.check(img.spec())?,
                    None => return Err(Error::InvalidArgument(format!("no image for {k}"))),
                }
            }
        }
        Ok(MorphismTable { ext: ext.clone(), source: source.clone(), max_degree, images })
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn image(&self, k: &MultiIndex) -> Option<&GammaElement> {
        self.images.get(k)
    }

    pub fn images(&self) -> impl Iterator<Item = (&MultiIndex, &GammaElement)> {
        self.images.iter()
    }

    /// Replaces one image.
    pub fn with_image(&self, k: &MultiIndex, image: GammaElement) -> Result<MorphismTable> {
        extended_spec(&self.ext, &self.source).check(image.spec())?;
        let mut out = self.clone();
        out.images.insert(k.clone(), image);
        Ok(out)
    }

    pub fn apply(&self, a: &ExtendedGamma) -> Result<GammaElement> {
        if a.ext != self.ext {
            return Err(Error::ExtensionMismatch(format!("{} vs {}", a.ext, self.ext)));
        }
        let mut out = GammaElement::zero(&extended_spec(&self.ext, &self.source));
        for (k, s) in &a.terms {
            let img = self
                .images
                .get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("no image for {k}")))?;
            out = out.add_unchecked(&img.scale_value(s));
        }
        Ok(out)
    }
}

/// The table of `θ` itself up to `max_degree`.
pub fn theta_table(ext: &Extension, source: &FreeModuleSpec, max_degree: u32) -> Result<MorphismTable> {
    let target = extended_spec(ext, source);
    let one = ext.top.one();
    let mut images = BTreeMap::new();
    for d in 0..=max_degree {
        for e in weak_compositions(d, source.rank()) {
            let k = MultiIndex::from_dense(source.basis(), e.clone()).expect("rank matches");
            let img_k = MultiIndex::from_dense(target.basis(), e).expect("rank matches");
            images.insert(k, GammaElement::monomial_value(&target, img_k, one.clone()));
        }
    }
    MorphismTable::new(ext, source, max_degree, images)
}

/// Completes the images `g[i][n-1]` of `1 ⊗ b_i^[n]` (`1 ≤ n ≤ max_degree`)
/// to a table through `b^[k] = prod_i b_i^[k_i]`.
pub fn complete_multiplicatively(
    ext: &Extension,
    source: &FreeModuleSpec,
    generator_images: &[Vec<GammaElement>],
    max_degree: u32,
) -> Result<MorphismTable> {
    if generator_images.len() != source.rank()
        || generator_images.iter().any(|g| g.len() < max_degree as usize)
    {
        return Err(Error::InvalidArgument(format!(
            "need images of b_i^[n] for {} labels and n ≤ {max_degree}",
            source.rank()
        )));
    }
    let target = extended_spec(ext, source);
    let mut images = BTreeMap::new();
    for d in 0..=max_degree {
        for e in weak_compositions(d, source.rank()) {
            let mut img = GammaElement::one(&target);
            for (i, &n) in e.iter().enumerate() {
                if n > 0 {
                    let g = &generator_images[i][n as usize - 1];
                    target.check(g.spec())?;
                    img = img.mul_unchecked(g);
                }
            }
            images.insert(MultiIndex::from_dense(source.basis(), e).expect("rank matches"), img);
        }
    }
    MorphismTable::new(ext, source, max_degree, images)
}

/// The fixed generator test set: every basis vector, then
/// [`UNIQUENESS_RANDOM_VECTORS`] vectors drawn from [`UNIQUENESS_SEED`].
pub fn uniqueness_test_vectors(source: &FreeModuleSpec) -> Vec<ModuleVector> {
    let mut rng = sampling::rng(UNIQUENESS_SEED);
    (0..source.rank())
        .map(|i| ModuleVector::basis_vector(source, i))
        .chain((0..UNIQUENESS_RANDOM_VECTORS).map(|_| random_vector(source, &mut rng)))
        .collect()
}

/// Whether `candidate` agrees with `θ` on `1 ⊗ x^[n]` for every `x` of the
/// fixed test set and `n ≤ candidate.max_degree()`.
pub fn theta_uniqueness(ext: &Extension, candidate: &MorphismTable) -> Result<bool> {
    if &candidate.ext != ext {
        return Err(Error::ExtensionMismatch(format!("{} vs {}", candidate.ext, ext)));
    }
    for x in uniqueness_test_vectors(&candidate.source) {
        let ex = ext.embed_vector(&x)?;
        for n in 0..=candidate.max_degree {
            let gen = ExtendedGamma::pure(ext, &ext.top.one(), &dp_generator(n, &x))?;
            if candidate.apply(&gen)? != dp_generator(n, &ex) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Reduction of an integral element modulo `n`.
pub fn reduce_mod(n: u64, a: &GammaElement) -> Result<GammaElement> {
    if !matches!(**a.ring(), RingDescriptor::Integers) {
        return Err(Error::UnsupportedRing(format!("reduction needs Z coefficients, got {}", a.ring())));
    }
    let ring = RingDescriptor::modular(n as i128)?;
    let target = ring.clone();
    Ok(a.map_coefficients(&ring, move |c| match c {
        Value::Int(z) => target.from_bigint(z),
        _ => unreachable!("integer coefficients"),
    }))
}

/// Whether `γ_m` over `Z` followed by reduction mod `n` equals reduction
/// followed by `γ_m` over `Z/n`.
pub fn reduction_square(n: u64, a: &GammaElement, m: u32) -> Result<bool> {
    if n < 2 {
        return Err(Error::ModulusInvalid(n as i128));
    }
    if !a.in_augmentation_ideal() {
        return Err(Error::NotInAugmentationIdeal);
    }
    let down = reduce_mod(n, &a.gamma_n(m)?)?;
    let across = reduce_mod(n, a)?.gamma_n(m)?;
    Ok(down == across)
}
