//! Polynomial laws between free modules, stored as coefficient tables.
//!
//! A law `f: M -> N` with `M` free on `I` is determined by its coefficients
//! `f_k ∈ N`, one per multi-index `k` on `I`:
//!
//! ```text
//! f_S(sum_i m_i b_i) = sum_k (prod_i m_i^{k_i}) f_k
//! ```
//!
//! for every test algebra `S` (the base ring `R` or a polynomial ring over
//! it) and every point `m ∈ S^I`.

use std::collections::BTreeMap;

use serde_json::{json, Value as Json};

use crate::error::{Error, Result};
use crate::freemodule::{check_algebra_over, FreeModuleSpec, LinearMap, ModuleVector};
use crate::gamma::GammaElement;
use crate::multiindex::{weak_compositions, Basis, BasisLabels, MultiIndex};
use crate::scalars::{binomial, Exponents, Ring, RingDescriptor, Scalar, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyLaw {
    source: FreeModuleSpec,
    target: FreeModuleSpec,
    coeffs: BTreeMap<MultiIndex, ModuleVector>,
}

impl PolyLaw {
    /// Sums the given terms; zero vectors are dropped.
    pub fn new(
        source: &FreeModuleSpec,
        target: &FreeModuleSpec,
        terms: impl IntoIterator<Item = (MultiIndex, ModuleVector)>,
    ) -> Result<Self> {
        if source.ring() != target.ring() {
            return Err(Error::RingMismatch {
                left: source.ring().to_string(),
                right: target.ring().to_string(),
            });
        }
        let mut law = PolyLaw::zero(source, target);
        for (k, v) in terms {
            if k.basis() != source.basis() {
                return Err(Error::BasisMismatch);
            }
            target.check(v.spec())?;
            law.add_term(k, &v);
        }
        Ok(law)
    }

    pub fn zero(source: &FreeModuleSpec, target: &FreeModuleSpec) -> Self {
        PolyLaw { source: source.clone(), target: target.clone(), coeffs: BTreeMap::new() }
    }

    pub fn constant(source: &FreeModuleSpec, value: &ModuleVector) -> Self {
        let mut law = PolyLaw::zero(source, value.spec());
        law.add_term(MultiIndex::zero(source.basis()), value);
        law
    }

    pub fn of_linear_map(map: &LinearMap) -> Self {
        let mut law = PolyLaw::zero(map.source(), map.target());
        for (i, col) in map.columns().iter().enumerate() {
            law.add_term(MultiIndex::unit(map.source().basis(), i), col);
        }
        law
    }

    pub fn to_linear_map(&self) -> Result<LinearMap> {
        if !self.is_homogeneous(1) {
            return Err(Error::NotHomogeneous(1));
        }
        let columns = (0..self.source.rank())
            .map(|i| self.coeff(&MultiIndex::unit(self.source.basis(), i)))
            .collect();
        LinearMap::new(&self.source, &self.target, columns)
    }

    fn add_term(&mut self, k: MultiIndex, v: &ModuleVector) {
        let sum = match self.coeffs.remove(&k) {
            Some(old) => old.add(v).expect("same target"),
            None => v.clone(),
        };
        if !sum.is_zero() {
            self.coeffs.insert(k, sum);
        }
    }

    pub fn source(&self) -> &FreeModuleSpec {
        &self.source
    }

    pub fn target(&self) -> &FreeModuleSpec {
        &self.target
    }

    pub fn ring(&self) -> &Ring {
        self.source.ring()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, &ModuleVector)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, k: &MultiIndex) -> ModuleVector {
        self.coeffs.get(k).cloned().unwrap_or_else(|| ModuleVector::zero(&self.target))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_degree(&self) -> u32 {
        self.coeffs.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn add(&self, other: &PolyLaw) -> Result<PolyLaw> {
        self.source.check(&other.source)?;
        self.target.check(&other.target)?;
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            out.add_term(k.clone(), v);
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Scalar) -> Result<PolyLaw> {
        let mut out = PolyLaw::zero(&self.source, &self.target);
        for (k, v) in &self.coeffs {
            out.add_term(k.clone(), &v.scale(s)?);
        }
        Ok(out)
    }

    /// The same coefficient table read on another basis of the same rank.
    pub fn with_source_basis(&self, basis: &Basis) -> Result<PolyLaw> {
        if basis.rank() != self.source.rank() {
            return Err(Error::InvalidBasis(format!(
                "rank {} does not match source rank {}",
                basis.rank(),
                self.source.rank()
            )));
        }
        let source = FreeModuleSpec::new(self.ring(), basis)?;
        let terms = self
            .coeffs
            .iter()
            .map(|(k, v)| (MultiIndex::from_dense(basis, k.exps().to_vec()).expect("rank checked"), v.clone()));
        PolyLaw::new(&source, &self.target, terms)
    }

    /// `f_S(m)` for `m ∈ S^I`, with `S` the base ring or a polynomial ring
    /// over it.
    pub fn eval_at(&self, algebra: &Ring, point: &[Value]) -> Result<Vec<Value>> {
        check_algebra_over(self.ring(), algebra)?;
        if point.len() != self.source.rank() {
            return Err(Error::AlgebraMismatch(format!(
                "point has {} coordinates, source rank {}",
                point.len(),
                self.source.rank()
            )));
        }
        if let Some(bad) = point.iter().find(|v| !algebra.contains(v)) {
            return Err(Error::AlgebraMismatch(format!("{bad:?} is not an element of {algebra}")));
        }
        let mut powers: Vec<Vec<Value>> = point.iter().map(|p| vec![algebra.one(), p.clone()]).collect();
        let mut out = vec![algebra.zero(); self.target.rank()];
        for (k, v) in &self.coeffs {
            let mut mono = algebra.one();
            for (i, &e) in k.exps().iter().enumerate() {
                while powers[i].len() <= e as usize {
                    let next = algebra.mul(powers[i].last().expect("nonempty"), &point[i]);
                    powers[i].push(next);
                }
                if e > 0 {
                    mono = algebra.mul(&mono, &powers[i][e as usize]);
                }
            }
            for (o, c) in out.iter_mut().zip(v.values()) {
                if !self.ring().is_zero(c) {
                    *o = algebra.add(o, &algebra.mul(&mono, &self.ring().embed_in(algebra, c)));
                }
            }
        }
        Ok(out)
    }

    /// `f_R(m)` for a point of the source module itself.
    pub fn eval(&self, m: &ModuleVector) -> Result<ModuleVector> {
        self.source.check(m.spec())?;
        let out = self.eval_at(self.ring(), m.values())?;
        Ok(ModuleVector::from_values(&self.target, out))
    }

    /// Coefficients of `T ↦ f(sum_l T_l family_l)`, computed by evaluating
    /// over `R[T_1, ..., T_n]` and reading off each monomial in `T`. The
    /// result is a law on the free module with basis `T1, ..., Tn`.
    pub fn coeff_of(&self, family: &[ModuleVector]) -> Result<PolyLaw> {
        for v in family {
            self.source.check(v.spec())?;
        }
        let basis = BasisLabels::numbered("T", family.len());
        let spec = FreeModuleSpec::new(self.ring(), &basis)?;
        let adj = Adjoined::new(self.ring(), family.len())?;
        let flat = adj.flat.clone();
        let mut point = vec![flat.zero(); self.source.rank()];
        for (l, v) in family.iter().enumerate() {
            let t = adj.var(l);
            for (p, c) in point.iter_mut().zip(v.values()) {
                *p = flat.add(p, &flat.mul(&t, &adj.embed(c)));
            }
        }
        let image = self.eval_at(&flat, &point)?;
        let mut table: BTreeMap<Exponents, Vec<Value>> = BTreeMap::new();
        for (j, y) in image.iter().enumerate() {
            for (e, c) in adj.split(y) {
                table.entry(e).or_insert_with(|| vec![self.ring().zero(); self.target.rank()])[j] = c;
            }
        }
        let terms = table.into_iter().map(|(e, cs)| {
            (MultiIndex::from_dense(&basis, e).expect("rank matches"), ModuleVector::from_values(&self.target, cs))
        });
        PolyLaw::new(&spec, &self.target, terms)
    }

    /// Support criterion: every coefficient sits in degree `d`.
    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.coeffs.keys().all(|k| k.degree() == d)
    }

    /// Extensional test `f(t m) = t^d f(m)` over `S[t]` at a point of `S^I`.
    pub fn scaling_test(&self, d: u32, algebra: &Ring, point: &[Value]) -> Result<bool> {
        check_algebra_over(self.ring(), algebra)?;
        let adj = Adjoined::new(algebra, 1)?;
        let flat = adj.flat.clone();
        let t = adj.var(0);
        let base_point: Vec<Value> = point.iter().map(|p| adj.embed(p)).collect();
        let scaled: Vec<Value> = base_point.iter().map(|p| flat.mul(&t, p)).collect();
        let lhs = self.eval_at(&flat, &scaled)?;
        let td = flat.pow(&t, d);
        let rhs: Vec<Value> = self.eval_at(&flat, &base_point)?.iter().map(|y| flat.mul(&td, y)).collect();
        Ok(lhs == rhs)
    }

    /// The homogeneous component of degree `d`.
    pub fn component(&self, d: u32) -> PolyLaw {
        self.filtered(|k| k.degree() == d)
    }

    pub fn components(&self) -> BTreeMap<u32, PolyLaw> {
        let mut out = BTreeMap::new();
        for k in self.coeffs.keys() {
            out.entry(k.degree()).or_insert_with(|| self.component(k.degree()));
        }
        out
    }

    /// Sum of laws sharing source and target.
    pub fn sum<'a>(
        source: &FreeModuleSpec,
        target: &FreeModuleSpec,
        laws: impl IntoIterator<Item = &'a PolyLaw>,
    ) -> Result<PolyLaw> {
        laws.into_iter().try_fold(PolyLaw::zero(source, target), |acc, f| acc.add(f))
    }

    fn filtered(&self, keep: impl Fn(&MultiIndex) -> bool) -> PolyLaw {
        PolyLaw {
            source: self.source.clone(),
            target: self.target.clone(),
            coeffs: self.coeffs.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    /// The multihomogeneous component with degree `degrees[j]` on the labels
    /// of `parts[j]`. The parts must partition the source basis.
    pub fn multi_component<S: AsRef<str>>(&self, parts: &[Vec<S>], degrees: &[u32]) -> Result<PolyLaw> {
        if parts.len() != degrees.len() {
            return Err(Error::PartitionInvalid(format!(
                "{} parts but {} degrees",
                parts.len(),
                degrees.len()
            )));
        }
        let part_of = self.partition_map(parts)?;
        Ok(self.filtered(|k| {
            let mut deg = vec![0u32; parts.len()];
            for (i, &e) in k.exps().iter().enumerate() {
                deg[part_of[i]] += e;
            }
            deg == degrees
        }))
    }

    /// The bihomogeneous component of degree `(p, n)` for the split of the
    /// source basis into `first` and `second`.
    pub fn bi_component<S: AsRef<str>>(&self, first: &[S], second: &[S], p: u32, n: u32) -> Result<PolyLaw> {
        let parts = [first.iter().map(|s| s.as_ref()).collect::<Vec<_>>(), second.iter().map(|s| s.as_ref()).collect()];
        self.multi_component(&parts, &[p, n])
    }

    fn partition_map<S: AsRef<str>>(&self, parts: &[Vec<S>]) -> Result<Vec<usize>> {
        let basis = self.source.basis();
        let mut part_of = vec![usize::MAX; basis.rank()];
        for (j, part) in parts.iter().enumerate() {
            for label in part {
                let label = label.as_ref();
                let i = basis
                    .position(label)
                    .ok_or_else(|| Error::PartitionInvalid(format!("unknown label {label:?}")))?;
                if part_of[i] != usize::MAX {
                    return Err(Error::PartitionInvalid(format!("label {label:?} appears twice")));
                }
                part_of[i] = j;
            }
        }
        if let Some(i) = part_of.iter().position(|&p| p == usize::MAX) {
            return Err(Error::PartitionInvalid(format!("label {:?} is in no part", basis.label(i))));
        }
        Ok(part_of)
    }

    /// `(z, z') ↦ f(z + z')` as a law on `M × M`.
    pub fn add_precompose(&self) -> Result<PolyLaw> {
        let doubled = doubled_spec(&self.source)?;
        let r = self.source.rank();
        let ring = self.ring().clone();
        let mut out = PolyLaw::zero(&doubled, &self.target);
        for (k, v) in &self.coeffs {
            // split each k_i = (k_i - j_i) + j_i over the two copies
            let mut j = vec![0u32; r];
            loop {
                let mut exps = Vec::with_capacity(2 * r);
                exps.extend(k.exps().iter().zip(&j).map(|(a, b)| a - b));
                exps.extend(&j);
                let weight = k
                    .exps()
                    .iter()
                    .zip(&j)
                    .fold(num_bigint::BigUint::from(1u32), |acc, (&a, &b)| acc * binomial(a as u64, b as u64));
                let coeff: Vec<Value> = v.values().iter().map(|c| ring.mul_nat(&weight, c)).collect();
                out.add_term(
                    MultiIndex::from_dense(doubled.basis(), exps).expect("doubled rank"),
                    &ModuleVector::from_values(&self.target, coeff),
                );
                let Some(i) = (0..r).find(|&i| j[i] < k.exps()[i]) else { break };
                j[i] += 1;
                j[..i].iter_mut().for_each(|x| *x = 0);
            }
        }
        Ok(out)
    }

    /// `D^n f = sum_p Π^{p,n}(f ∘ add)`, computed from the coefficient table.
    pub fn divided_differential(&self, n: u32) -> Result<PolyLaw> {
        let composed = self.add_precompose()?;
        let (first, second) = doubled_halves(composed.source());
        let pieces = (0..=self.max_degree())
            .map(|p| composed.bi_component(&first, &second, p, n))
            .collect::<Result<Vec<_>>>()?;
        PolyLaw::sum(composed.source(), &self.target, &pieces)
    }

    /// `D^n f` read off `f(z T1 + z' T2)` over `R[z, z', T1, T2]` with
    /// symbolic coordinates: the part of degree `n` in `T2`, at `T1 = 1`.
    pub fn divided_differential_extracted(&self, n: u32) -> Result<PolyLaw> {
        let r = self.source.rank();
        let doubled = doubled_spec(&self.source)?;
        // variables: z_1..z_r, z'_1..z'_r, T1, T2
        let adj = Adjoined::new(self.ring(), 2 * r + 2)?;
        let flat = adj.flat.clone();
        let (t1, t2) = (adj.var(2 * r), adj.var(2 * r + 1));
        let point: Vec<Value> = (0..r)
            .map(|i| flat.add(&flat.mul(&adj.var(i), &t1), &flat.mul(&adj.var(r + i), &t2)))
            .collect();
        let image = self.eval_at(&flat, &point)?;
        let mut table: BTreeMap<Exponents, Vec<Value>> = BTreeMap::new();
        for (j, y) in image.iter().enumerate() {
            for (e, c) in adj.split(y) {
                if e[2 * r + 1] != n {
                    continue;
                }
                let entry = table.entry(e[..2 * r].to_vec()).or_insert_with(|| vec![self.ring().zero(); self.target.rank()]);
                entry[j] = self.ring().add(&entry[j], &c);
            }
        }
        let terms = table.into_iter().map(|(e, cs)| {
            (MultiIndex::from_dense(doubled.basis(), e).expect("doubled rank"), ModuleVector::from_values(&self.target, cs))
        });
        PolyLaw::new(&doubled, &self.target, terms)
    }

    /// Whether `f(z + z') = sum_n D^n f(z, z')` at the given points of `S^I`.
    pub fn taylor_sum_check(&self, algebra: &Ring, z: &[Value], z2: &[Value]) -> Result<bool> {
        check_algebra_over(self.ring(), algebra)?;
        if z.len() != z2.len() {
            return Err(Error::AlgebraMismatch("points of different rank".into()));
        }
        let sum: Vec<Value> = z.iter().zip(z2).map(|(a, b)| algebra.add(a, b)).collect();
        let lhs = self.eval_at(algebra, &sum)?;
        let both: Vec<Value> = z.iter().chain(z2).cloned().collect();
        let mut rhs = vec![algebra.zero(); self.target.rank()];
        for n in 0..=self.max_degree() {
            let d = self.divided_differential(n)?.eval_at(algebra, &both)?;
            for (o, y) in rhs.iter_mut().zip(&d) {
                *o = algebra.add(o, y);
            }
        }
        Ok(lhs == rhs)
    }

    /// The linear map `φ: Γ^d(M) -> N` with `f = φ ∘ δ_d`, `φ(b^[k]) = f_k`.
    pub fn factor_homogeneous(&self, d: u32) -> Result<LinearMap> {
        if !self.is_homogeneous(d) {
            return Err(Error::NotHomogeneous(d));
        }
        let slice = grade_slice_spec(&self.source, d)?;
        let columns = weak_compositions(d, self.source.rank())
            .map(|e| self.coeff(&MultiIndex::from_dense(self.source.basis(), e).expect("rank matches")))
            .collect();
        LinearMap::new(&slice, &self.target, columns)
    }

    pub fn to_json(&self) -> Json {
        let coeffs: Vec<Json> = self
            .coeffs
            .iter()
            .map(|(k, v)| json!({"exps": k.to_json(), "vector": v.coords_to_json()}))
            .collect();
        json!({"source": self.source.to_json(), "target": self.target.to_json(), "coeffs": coeffs})
    }

    pub fn from_json(j: &Json) -> Result<PolyLaw> {
        let source = FreeModuleSpec::from_json(j.get("source").unwrap_or(&Json::Null))?;
        let target = FreeModuleSpec::from_json(j.get("target").unwrap_or(&Json::Null))?;
        let coeffs = j
            .get("coeffs")
            .and_then(Json::as_array)
            .ok_or_else(|| Error::parse("law needs a \"coeffs\" array"))?;
        let terms = coeffs
            .iter()
            .map(|t| {
                let k = MultiIndex::from_json(source.basis(), t.get("exps").unwrap_or(&json!({})))?;
                let v = ModuleVector::coords_from_json(
                    &target,
                    t.get("vector").ok_or_else(|| Error::parse("coefficient without \"vector\""))?,
                )?;
                Ok((k, v))
            })
            .collect::<Result<Vec<_>>>()?;
        PolyLaw::new(&source, &target, terms)
    }
}

/// `M × M` with basis `L.1` for each label `L`, then `L.2`.
pub fn doubled_spec(spec: &FreeModuleSpec) -> Result<FreeModuleSpec> {
    let labels: Vec<String> = (1..=2)
        .flat_map(|c| spec.basis().labels().iter().map(move |l| format!("{l}.{c}")))
        .collect();
    FreeModuleSpec::new(spec.ring(), &BasisLabels::new(&labels)?)
}

fn doubled_halves(doubled: &FreeModuleSpec) -> (Vec<String>, Vec<String>) {
    let labels = doubled.basis().labels();
    let r = labels.len() / 2;
    (labels[..r].to_vec(), labels[r..].to_vec())
}

/// `Γ^d(M)` as a free module on the degree-`d` monomials `b^[k]`, labeled
/// by [`MultiIndex::monomial_label`] in the canonical order.
pub fn grade_slice_spec(spec: &FreeModuleSpec, d: u32) -> Result<FreeModuleSpec> {
    let labels: Vec<String> = weak_compositions(d, spec.rank())
        .map(|e| MultiIndex::from_dense(spec.basis(), e).expect("rank matches").monomial_label())
        .collect();
    FreeModuleSpec::new(spec.ring(), &BasisLabels::new(&labels)?)
}

/// Coordinates of the degree-`d` part of `a` in [`grade_slice_spec`].
pub fn grade_slice_coords(a: &GammaElement, d: u32) -> Result<ModuleVector> {
    let slice = grade_slice_spec(a.spec(), d)?;
    let coords = weak_compositions(d, a.spec().rank())
        .map(|e| a.coeff(&MultiIndex::from_dense(a.spec().basis(), e).expect("rank matches")).into_value())
        .collect();
    Ok(ModuleVector::from_values(&slice, coords))
}

/// The law `δ_d: M -> Γ^d(M)`, `m ↦ m^[d]`, with coefficient `b^[k]` at `k`.
pub fn delta_law(spec: &FreeModuleSpec, d: u32) -> Result<PolyLaw> {
    let slice = grade_slice_spec(spec, d)?;
    let terms = weak_compositions(d, spec.rank()).enumerate().map(|(j, e)| {
        (MultiIndex::from_dense(spec.basis(), e).expect("rank matches"), ModuleVector::basis_vector(&slice, j))
    });
    PolyLaw::new(spec, &slice, terms)
}

/// A ring homomorphism between test algebras over a common base, sending
/// the `i`-th variable of `source` to `images[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    source: Ring,
    target: Ring,
    images: Vec<Value>,
}

impl Substitution {
    pub fn new(source: &Ring, target: &Ring, images: Vec<Value>) -> Result<Self> {
        if source.base() != target.base() {
            return Err(Error::AlgebraMismatch(format!("{source} and {target} have different bases")));
        }
        if images.len() != source.vars().len() {
            return Err(Error::AlgebraMismatch(format!(
                "{} images for {} variables",
                images.len(),
                source.vars().len()
            )));
        }
        if let Some(bad) = images.iter().find(|v| !target.contains(v)) {
            return Err(Error::AlgebraMismatch(format!("{bad:?} is not an element of {target}")));
        }
        Ok(Substitution { source: source.clone(), target: target.clone(), images })
    }

    /// Substitution by name; variables not mentioned map to themselves,
    /// which must then exist in the target.
    pub fn from_pairs(source: &Ring, target: &Ring, pairs: &[(&str, Value)]) -> Result<Self> {
        let images = source
            .vars()
            .iter()
            .map(|v| match pairs.iter().find(|(name, _)| name == v) {
                Some((_, img)) => Ok(img.clone()),
                None => target.var(v).map_err(|_| Error::AlgebraMismatch(format!("no image for {v}"))),
            })
            .collect::<Result<_>>()?;
        Substitution::new(source, target, images)
    }

    pub fn identity(ring: &Ring) -> Self {
        let images = ring.vars().iter().map(|v| ring.var(v).expect("own variable")).collect();
        Substitution { source: ring.clone(), target: ring.clone(), images }
    }

    pub fn source(&self) -> &Ring {
        &self.source
    }

    pub fn target(&self) -> &Ring {
        &self.target
    }

    pub fn apply(&self, a: &Value) -> Value {
        match a {
            Value::Poly(p) => {
                let mut out = self.target.zero();
                for (e, c) in p {
                    let mut term = self.target.from_base(c);
                    for (img, &k) in self.images.iter().zip(e) {
                        if k > 0 {
                            term = self.target.mul(&term, &self.target.pow(img, k));
                        }
                    }
                    out = self.target.add(&out, &term);
                }
                out
            }
            c => self.target.from_base(c),
        }
    }
}

/// Both paths around the naturality square of `f` for `φ: S -> S'` at
/// `m ∈ S^I`: `φ(f_S(m)) = f_{S'}(φ(m))`.
pub fn compat_check(f: &PolyLaw, phi: &Substitution, m: &[Value]) -> Result<bool> {
    let lhs: Vec<Value> = f.eval_at(phi.source(), m)?.iter().map(|y| phi.apply(y)).collect();
    let moved: Vec<Value> = m.iter().map(|x| phi.apply(x)).collect();
    let rhs = f.eval_at(phi.target(), &moved)?;
    Ok(lhs == rhs)
}

/// `outer` with `count` fresh variables, flattened into a single
/// polynomial ring over the base.
struct Adjoined {
    outer: Ring,
    flat: Ring,
    fresh: Vec<usize>,
    old: Vec<usize>,
    names: Vec<String>,
}

impl Adjoined {
    fn new(outer: &Ring, count: usize) -> Result<Self> {
        let old_vars = outer.vars();
        let mut prefix = String::from("#");
        while old_vars.iter().any(|v| v.starts_with(&prefix)) {
            prefix.push('#');
        }
        let names: Vec<String> = (0..count).map(|i| format!("{prefix}{i:04}")).collect();
        let all: Vec<&str> = old_vars.iter().map(String::as_str).chain(names.iter().map(String::as_str)).collect();
        let flat = RingDescriptor::poly(outer.base(), &all)?;
        let pos = |n: &String| flat.var_index(n).expect("adjoined");
        Ok(Adjoined {
            outer: outer.clone(),
            fresh: names.iter().map(pos).collect(),
            old: old_vars.iter().map(pos).collect(),
            flat,
            names,
        })
    }

    fn var(&self, i: usize) -> Value {
        self.flat.var(&self.names[i]).expect("adjoined")
    }

    fn embed(&self, a: &Value) -> Value {
        self.outer.embed_in(&self.flat, a)
    }

    /// Groups `a` by its exponents in the fresh variables.
    fn split(&self, a: &Value) -> BTreeMap<Exponents, Value> {
        let mut out: BTreeMap<Exponents, Value> = BTreeMap::new();
        let Value::Poly(p) = a else { unreachable!("flat ring is polynomial") };
        for (e, c) in p {
            let key: Exponents = self.fresh.iter().map(|&i| e[i]).collect();
            let rest = if self.outer.is_poly() {
                let inner: Exponents = self.old.iter().map(|&i| e[i]).collect();
                Value::Poly(BTreeMap::from([(inner, c.clone())]))
            } else {
                c.clone()
            };
            let slot = out.entry(key).or_insert_with(|| self.outer.zero());
            *slot = self.outer.add(slot, &rest);
        }
        out.retain(|_, v| !self.outer.is_zero(v));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::{dp_generator, grade_one_iota};
    use crate::sampling::{self, random_law_terms, random_scalar, random_vector};

    fn spec(ring: &str, rank: usize) -> FreeModuleSpec {
        FreeModuleSpec::standard(&RingDescriptor::parse(ring).unwrap(), rank).unwrap()
    }

    fn target(ring: &str, rank: usize) -> FreeModuleSpec {
        FreeModuleSpec::new(&RingDescriptor::parse(ring).unwrap(), &BasisLabels::numbered("n", rank)).unwrap()
    }

    fn idx(s: &FreeModuleSpec, pairs: &[(&str, u32)]) -> MultiIndex {
        MultiIndex::from_pairs(s.basis(), pairs).unwrap()
    }

    fn square_law(s: &FreeModuleSpec, t: &FreeModuleSpec) -> PolyLaw {
        PolyLaw::new(s, t, [(idx(s, &[("b1", 2)]), ModuleVector::basis_vector(t, 0))]).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let s = spec("Z", 1);
        let id = PolyLaw::of_linear_map(&LinearMap::identity(&s));
        assert_eq!(id.eval(&ModuleVector::from_ints(&s, &[("b1", 3)]).unwrap()).unwrap().values(), &[s.ring().from_i64(3)]);

        let t = target("Z", 1);
        let zx = RingDescriptor::parse("Z[X]").unwrap();
        let x = zx.var("X").unwrap();
        let out = square_law(&s, &t).eval_at(&zx, &[x.clone()]).unwrap();
        assert_eq!(out, vec![zx.mul(&x, &x)]);
        assert_eq!(PolyLaw::zero(&s, &t).eval_at(&zx, &[x]).unwrap(), vec![zx.zero()]);

        let q = RingDescriptor::rationals();
        assert!(matches!(id.eval_at(&q, &[q.one()]), Err(Error::AlgebraMismatch(_))));
    }

    #[test]
    fn coefficient_extraction_examples() {
        let s = spec("Z", 1);
        let t = target("Z", 1);
        let f = square_law(&s, &t).scale(&Scalar::from_i64(s.ring(), 5)).unwrap();
        let two_b = ModuleVector::from_ints(&s, &[("b1", 2)]).unwrap();
        let c = f.coeff_of(&[two_b]).unwrap();
        assert_eq!(c.len(), 1);
        let (k, v) = c.coeffs().next().unwrap();
        assert_eq!(k.exps(), &[2]);
        assert_eq!(v.values(), &[s.ring().from_i64(20)]);
        assert!(PolyLaw::zero(&s, &t).coeff_of(&[ModuleVector::basis_vector(&s, 0)]).unwrap().is_zero());
    }

    #[test]
    fn coefficient_round_trip_over_polynomial_base() {
        let s = spec("Z[X]", 2);
        let t = target("Z[X]", 2);
        let mut rng = sampling::rng(4);
        for _ in 0..30 {
            let f = PolyLaw::new(&s, &t, random_law_terms(&s, &t, 0..=3, &mut rng)).unwrap();
            let family: Vec<_> = (0..2).map(|i| ModuleVector::basis_vector(&s, i)).collect();
            assert_eq!(f.coeff_of(&family).unwrap().with_source_basis(s.basis()).unwrap(), f);
        }
    }

    #[test]
    fn homogeneity_examples() {
        let s = spec("Z", 2);
        let lin = PolyLaw::of_linear_map(&LinearMap::identity(&s));
        assert!(lin.is_homogeneous(1));
        let c = PolyLaw::constant(&s, &ModuleVector::basis_vector(&s, 1));
        assert!(c.is_homogeneous(0));
        let mixed = lin.add(&PolyLaw::new(&s, &s, [(idx(&s, &[("b1", 2)]), ModuleVector::basis_vector(&s, 0))]).unwrap()).unwrap();
        assert!((0..5).all(|d| !mixed.is_homogeneous(d)));
        let zx = RingDescriptor::parse("Z[X]").unwrap();
        let point = [zx.var("X").unwrap(), zx.from_i64(2)];
        assert!(lin.scaling_test(1, &zx, &point).unwrap());
        assert!(!mixed.scaling_test(1, &zx, &point).unwrap());
    }

    #[test]
    fn differential_examples() {
        let s = spec("Z", 1);
        let t = target("Z", 1);
        let f = square_law(&s, &t);
        let d1 = f.divided_differential(1).unwrap();
        let dbl = d1.source().clone();
        let expected = PolyLaw::new(
            &dbl,
            &t,
            [(MultiIndex::from_pairs(dbl.basis(), &[("b1.1", 1), ("b1.2", 1)]).unwrap(), ModuleVector::from_ints(&t, &[("n1", 2)]).unwrap())],
        )
        .unwrap();
        assert_eq!(d1, expected);
        assert_eq!(f.divided_differential_extracted(1).unwrap(), expected);
        assert!(f.divided_differential(3).unwrap().is_zero());
        let d0 = f.divided_differential(0).unwrap();
        let z = s.ring().from_i64(7);
        assert_eq!(d0.eval_at(s.ring(), &[z.clone(), s.ring().from_i64(-4)]).unwrap(), f.eval_at(s.ring(), &[z]).unwrap());
    }

    #[test]
    fn differential_paths_agree() {
        let mut rng = sampling::rng(21);
        for ring in ["Z", "Z/6", "Q", "Z[X]"] {
            for rank in 1..=2 {
                let s = spec(ring, rank);
                let t = target(ring, 2);
                for _ in 0..10 {
                    let f = PolyLaw::new(&s, &t, random_law_terms(&s, &t, 0..=4, &mut rng)).unwrap();
                    for n in 0..=5 {
                        assert_eq!(f.divided_differential(n).unwrap(), f.divided_differential_extracted(n).unwrap());
                    }
                    let z: Vec<Value> = (0..rank).map(|_| random_scalar(s.ring(), &mut rng)).collect();
                    let z2: Vec<Value> = (0..rank).map(|_| random_scalar(s.ring(), &mut rng)).collect();
                    assert!(f.taylor_sum_check(s.ring(), &z, &z2).unwrap());
                }
            }
        }
    }

    #[test]
    fn partition_errors() {
        let s = spec("Z", 2);
        let f = square_law(&s, &target("Z", 1));
        assert!(matches!(f.bi_component(&["b1"], &["b1"], 1, 0), Err(Error::PartitionInvalid(_))));
        assert!(matches!(f.bi_component(&["b1"], &[] as &[&str], 1, 0), Err(Error::PartitionInvalid(_))));
        assert_eq!(f.bi_component(&["b1"], &["b2"], 2, 0).unwrap(), f);
        assert!(f.bi_component(&["b1"], &["b2"], 1, 1).unwrap().is_zero());
    }

    #[test]
    fn delta_law_examples() {
        let s = spec("Z", 2);
        let mut rng = sampling::rng(8);
        for d in 0..=4 {
            let delta = delta_law(&s, d).unwrap();
            for _ in 0..10 {
                let x = random_vector(&s, &mut rng);
                let expected = grade_slice_coords(&dp_generator(d, &x), d).unwrap();
                assert_eq!(delta.eval(&x).unwrap(), expected);
            }
            assert_eq!(delta.factor_homogeneous(d).unwrap(), LinearMap::identity(delta.target()));
        }
        let x = random_vector(&s, &mut rng);
        assert_eq!(delta_law(&s, 1).unwrap().eval(&x).unwrap(), grade_slice_coords(&grade_one_iota(&x), 1).unwrap());
        let one = delta_law(&s, 0).unwrap();
        assert_eq!(one.target().basis().labels(), &["1".to_string()]);
    }

    #[test]
    fn factorization_examples() {
        let s = spec("Z", 1);
        let t = target("Z", 1);
        let phi = square_law(&s, &t).factor_homogeneous(2).unwrap();
        assert_eq!(phi.column(0), &ModuleVector::basis_vector(&t, 0));
        assert_eq!(square_law(&s, &t).factor_homogeneous(1), Err(Error::NotHomogeneous(1)));
        assert_eq!(PolyLaw::zero(&s, &t).factor_homogeneous(3).unwrap(), LinearMap::zero(&grade_slice_spec(&s, 3).unwrap(), &t).unwrap());
    }

    #[test]
    fn substitution_examples() {
        let zx = RingDescriptor::parse("Z[X]").unwrap();
        let zy = RingDescriptor::parse("Z[Y]").unwrap();
        let z = RingDescriptor::integers();
        let eval5 = Substitution::new(&zx, &z, vec![z.from_i64(5)]).unwrap();
        let rename = Substitution::new(&zx, &zy, vec![zy.var("Y").unwrap()]).unwrap();
        let s = spec("Z", 2);
        let t = target("Z", 2);
        let mut rng = sampling::rng(13);
        for _ in 0..20 {
            let f = PolyLaw::new(&s, &t, random_law_terms(&s, &t, 0..=3, &mut rng)).unwrap();
            let m: Vec<Value> = (0..2).map(|_| random_scalar(&zx, &mut rng)).collect();
            assert!(compat_check(&f, &eval5, &m).unwrap());
            assert!(compat_check(&f, &rename, &m).unwrap());
            assert!(compat_check(&f, &Substitution::identity(&zx), &m).unwrap());
        }
        assert!(Substitution::new(&zx, &RingDescriptor::rationals(), vec![RingDescriptor::rationals().one()]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = spec("Q", 2);
        let t = target("Q", 2);
        let mut rng = sampling::rng(2);
        for _ in 0..20 {
            let f = PolyLaw::new(&s, &t, random_law_terms(&s, &t, 0..=3, &mut rng)).unwrap();
            assert_eq!(PolyLaw::from_json(&f.to_json()).unwrap(), f);
        }
    }

    #[test]
    fn linear_maps_round_trip() {
        let s = spec("Z", 3);
        let t = target("Z", 2);
        let mut rng = sampling::rng(17);
        for _ in 0..20 {
            let cols = (0..3).map(|_| random_vector(&t, &mut rng)).collect();
            let map = LinearMap::new(&s, &t, cols).unwrap();
            assert_eq!(PolyLaw::of_linear_map(&map).to_linear_map().unwrap(), map);
        }
        let c = PolyLaw::constant(&s, &ModuleVector::basis_vector(&t, 0));
        assert_eq!(c.to_linear_map(), Err(Error::NotHomogeneous(1)));
    }
}
