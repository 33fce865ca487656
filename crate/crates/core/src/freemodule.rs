//! Free modules of finite rank with labeled bases, their vectors, and linear
//! maps between them given column by column.

use std::fmt;

use serde_json::{json, Map, Value as Json};

use crate::error::{Error, Result};
use crate::multiindex::{same_basis, Basis, BasisLabels};
use crate::scalars::{Ring, RingDescriptor, Scalar, Value};

#[derive(Debug, Clone)]
pub struct FreeModuleSpec {
    ring: Ring,
    basis: Basis,
}

impl FreeModuleSpec {
    pub fn new(ring: &Ring, basis: &Basis) -> Result<Self> {
        if basis.rank() == 0 {
            return Err(Error::InvalidBasis("a free module needs a nonempty basis".into()));
        }
        Ok(FreeModuleSpec { ring: ring.clone(), basis: basis.clone() })
    }

    /// Rank-`rank` module over `ring` with basis `b1, b2, ...`.
    pub fn standard(ring: &Ring, rank: usize) -> Result<Self> {
        FreeModuleSpec::new(ring, &BasisLabels::numbered("b", rank))
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    /// Same basis over a different ring.
    pub fn with_ring(&self, ring: &Ring) -> FreeModuleSpec {
        FreeModuleSpec { ring: ring.clone(), basis: self.basis.clone() }
    }

    pub(crate) fn check(&self, other: &FreeModuleSpec) -> Result<()> {
        if self != other {
            return Err(Error::SpecMismatch(format!("{self} vs {other}")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Json {
        json!({"ring": self.ring.to_string(), "basis": self.basis.to_json()})
    }

    pub fn from_json(j: &Json) -> Result<Self> {
        let ring = j
            .get("ring")
            .and_then(Json::as_str)
            .ok_or_else(|| Error::parse("spec needs a \"ring\" string"))?;
        let ring = RingDescriptor::parse(ring)?;
        let basis = BasisLabels::from_json(j.get("basis").unwrap_or(&Json::Null))?;
        FreeModuleSpec::new(&ring, &basis)
    }
}

impl PartialEq for FreeModuleSpec {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && same_basis(&self.basis, &other.basis)
    }
}

impl Eq for FreeModuleSpec {}

impl fmt::Display for FreeModuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^<{}>", self.ring, self.basis.labels().join(","))
    }
}

/// A vector of a free module, stored as dense coordinates in basis order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleVector {
    spec: FreeModuleSpec,
    coords: Vec<Value>,
}

impl ModuleVector {
    pub fn zero(spec: &FreeModuleSpec) -> Self {
        ModuleVector { spec: spec.clone(), coords: vec![spec.ring().zero(); spec.rank()] }
    }

    pub fn basis_vector(spec: &FreeModuleSpec, i: usize) -> Self {
        let mut v = ModuleVector::zero(spec);
        v.coords[i] = spec.ring().one();
        v
    }

    pub fn new(spec: &FreeModuleSpec, coords: Vec<Scalar>) -> Result<Self> {
        if coords.len() != spec.rank() {
            return Err(Error::SpecMismatch(format!(
                "{} coordinates for rank {}",
                coords.len(),
                spec.rank()
            )));
        }
        let coords = coords
            .into_iter()
            .map(|c| {
                if c.ring() != spec.ring() {
                    return Err(Error::RingMismatch {
                        left: spec.ring().to_string(),
                        right: c.ring().to_string(),
                    });
                }
                Ok(c.into_value())
            })
            .collect::<Result<_>>()?;
        Ok(ModuleVector { spec: spec.clone(), coords })
    }

    pub(crate) fn from_values(spec: &FreeModuleSpec, coords: Vec<Value>) -> Self {
        debug_assert_eq!(coords.len(), spec.rank());
        ModuleVector { spec: spec.clone(), coords }
    }

    /// `sum c_i * b_i` from `(label, small integer)` pairs.
    pub fn from_ints<S: AsRef<str>>(spec: &FreeModuleSpec, pairs: &[(S, i64)]) -> Result<Self> {
        let mut v = ModuleVector::zero(spec);
        for (label, c) in pairs {
            let i = spec
                .basis()
                .position(label.as_ref())
                .ok_or_else(|| Error::InvalidBasis(format!("unknown label {:?}", label.as_ref())))?;
            v.coords[i] = spec.ring().add(&v.coords[i], &spec.ring().from_i64(*c));
        }
        Ok(v)
    }

    pub fn spec(&self) -> &FreeModuleSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Value] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Scalar {
        Scalar::from_parts(self.spec.ring(), self.coords[i].clone())
    }

    pub fn is_zero(&self) -> bool {
        let r = self.spec.ring();
        self.coords.iter().all(|c| r.is_zero(c))
    }

    pub fn add(&self, other: &ModuleVector) -> Result<ModuleVector> {
        self.spec.check(&other.spec)?;
        let r = self.spec.ring();
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| r.add(a, b)).collect();
        Ok(ModuleVector::from_values(&self.spec, coords))
    }

    pub fn sub(&self, other: &ModuleVector) -> Result<ModuleVector> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ModuleVector {
        let r = self.spec.ring();
        ModuleVector::from_values(&self.spec, self.coords.iter().map(|c| r.neg(c)).collect())
    }

    pub fn scale(&self, s: &Scalar) -> Result<ModuleVector> {
        if s.ring() != self.spec.ring() {
            return Err(Error::RingMismatch {
                left: self.spec.ring().to_string(),
                right: s.ring().to_string(),
            });
        }
        Ok(self.scale_value(s.value()))
    }

    pub(crate) fn scale_value(&self, s: &Value) -> ModuleVector {
        let r = self.spec.ring();
        ModuleVector::from_values(&self.spec, self.coords.iter().map(|c| r.mul(s, c)).collect())
    }

    /// `{label: scalar}` with zero coordinates omitted.
    pub fn coords_to_json(&self) -> Json {
        let r = self.spec.ring();
        let map: Map<String, Json> = self
            .coords
            .iter()
            .enumerate()
            .filter(|(_, c)| !r.is_zero(c))
            .map(|(i, c)| (self.spec.basis().label(i).to_string(), r.value_to_json(c)))
            .collect();
        Json::Object(map)
    }

    pub fn coords_from_json(spec: &FreeModuleSpec, j: &Json) -> Result<ModuleVector> {
        let obj = j
            .as_object()
            .ok_or_else(|| Error::parse("vector must be a {label: scalar} object"))?;
        let mut v = ModuleVector::zero(spec);
        for (label, c) in obj {
            let i = spec
                .basis()
                .position(label)
                .ok_or_else(|| Error::parse(format!("unknown basis label {label:?}")))?;
            v.coords[i] = spec.ring().value_from_json(c)?;
        }
        Ok(v)
    }

    /// `{"ring", "basis", "coords"}`.
    pub fn to_json(&self) -> Json {
        let mut j = self.spec.to_json();
        j["coords"] = self.coords_to_json();
        j
    }

    pub fn from_json(j: &Json) -> Result<ModuleVector> {
        let spec = FreeModuleSpec::from_json(j)?;
        ModuleVector::coords_from_json(&spec, j.get("coords").unwrap_or(&json!({})))
    }
}

/// Linear map between free modules over the same ring, stored as the images
/// of the source basis vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearMap {
    source: FreeModuleSpec,
    target: FreeModuleSpec,
    columns: Vec<ModuleVector>,
}

impl LinearMap {
    pub fn new(source: &FreeModuleSpec, target: &FreeModuleSpec, columns: Vec<ModuleVector>) -> Result<Self> {
        if source.ring() != target.ring() {
            return Err(Error::SpecMismatch(format!(
                "linear map between {} and {}",
                source.ring(),
                target.ring()
            )));
        }
        if columns.len() != source.rank() {
            return Err(Error::SpecMismatch(format!(
                "{} columns for a source of rank {}",
                columns.len(),
                source.rank()
            )));
        }
        for c in &columns {
            target.check(c.spec())?;
        }
        Ok(LinearMap { source: source.clone(), target: target.clone(), columns })
    }

    pub fn identity(spec: &FreeModuleSpec) -> Self {
        let columns = (0..spec.rank()).map(|i| ModuleVector::basis_vector(spec, i)).collect();
        LinearMap { source: spec.clone(), target: spec.clone(), columns }
    }

    pub fn zero(source: &FreeModuleSpec, target: &FreeModuleSpec) -> Result<Self> {
        let columns = vec![ModuleVector::zero(target); source.rank()];
        LinearMap::new(source, target, columns)
    }

    pub fn source(&self) -> &FreeModuleSpec {
        &self.source
    }

    pub fn target(&self) -> &FreeModuleSpec {
        &self.target
    }

    pub fn column(&self, i: usize) -> &ModuleVector {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[ModuleVector] {
        &self.columns
    }

    pub fn apply(&self, x: &ModuleVector) -> Result<ModuleVector> {
        self.source.check(x.spec())?;
        let mut out = ModuleVector::zero(&self.target);
        for (c, col) in x.values().iter().zip(&self.columns) {
            out = out.add(&col.scale_value(c))?;
        }
        Ok(out)
    }

    /// Applies the map to a vector with coordinates in an algebra `S` over
    /// the base ring (`S ⊗ M -> S ⊗ N`).
    pub fn apply_extended(&self, algebra: &Ring, x: &[Value]) -> Result<Vec<Value>> {
        check_algebra_over(self.source.ring(), algebra)?;
        if x.len() != self.source.rank() {
            return Err(Error::AlgebraMismatch(format!(
                "point has {} coordinates, source rank {}",
                x.len(),
                self.source.rank()
            )));
        }
        let base = self.source.ring();
        let mut out = vec![algebra.zero(); self.target.rank()];
        for (xi, col) in x.iter().zip(&self.columns) {
            for (o, c) in out.iter_mut().zip(col.values()) {
                *o = algebra.add(o, &algebra.mul(xi, &base.embed_in(algebra, c)));
            }
        }
        Ok(out)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &LinearMap) -> Result<LinearMap> {
        self.target.check(&other.source)?;
        let columns = self.columns.iter().map(|c| other.apply(c)).collect::<Result<_>>()?;
        LinearMap::new(&self.source, &other.target, columns)
    }

    pub fn to_json(&self) -> Json {
        let columns: Map<String, Json> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| (self.source.basis().label(i).to_string(), c.coords_to_json()))
            .collect();
        json!({"source": self.source.to_json(), "target": self.target.to_json(), "columns": columns})
    }

    pub fn from_json(j: &Json) -> Result<LinearMap> {
        let source = FreeModuleSpec::from_json(j.get("source").unwrap_or(&Json::Null))?;
        let target = FreeModuleSpec::from_json(j.get("target").unwrap_or(&Json::Null))?;
        let cols = j
            .get("columns")
            .and_then(Json::as_object)
            .ok_or_else(|| Error::parse("linear map needs a \"columns\" object"))?;
        let mut columns = vec![ModuleVector::zero(&target); source.rank()];
        for (label, v) in cols {
            let i = source
                .basis()
                .position(label)
                .ok_or_else(|| Error::parse(format!("unknown source label {label:?}")))?;
            columns[i] = ModuleVector::coords_from_json(&target, v)?;
        }
        LinearMap::new(&source, &target, columns)
    }
}

/// `algebra` must be `base` itself or a polynomial ring containing it.
pub(crate) fn check_algebra_over(base: &RingDescriptor, algebra: &RingDescriptor) -> Result<()> {
    if !base.embeds_in(algebra) {
        return Err(Error::AlgebraMismatch(format!("{algebra} is not a test algebra over {base}")));
    }
    Ok(())
}
