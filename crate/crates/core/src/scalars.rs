//! Exact coefficient rings.
//!
//! A [`RingDescriptor`] names one of the supported rings: the integers, the
//! rationals, `Z/nZ`, or a sparse multivariate polynomial ring over one of
//! those three. Raw [`Value`]s carry no ring information; every arithmetic
//! entry point on [`RingDescriptor`] assumes its operands already belong to
//! that ring. [`Scalar`] pairs a value with its ring and checks that
//! operands agree before doing anything.
//!
//! Containers such as gamma elements and polynomial laws store their ring
//! once and keep bare values per term.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value as Json};

use crate::error::{Error, Result};

/// Shared handle to a ring descriptor.
pub type Ring = Arc<RingDescriptor>;

/// Exponent vector of a polynomial term, aligned with the ring's sorted
/// variable list.
pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RingDescriptor {
    Integers,
    Rationals,
    IntegersMod(u64),
    /// Polynomials over a non-polynomial base; `vars` is sorted by name.
    Poly {
        base: Box<RingDescriptor>,
        vars: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(BigInt),
    Rat(BigRational),
    /// Residue in `[0, n)`.
    Mod(u64),
    /// Nonzero coefficients keyed by exponent vector.
    Poly(BTreeMap<Exponents, Value>),
}

impl RingDescriptor {
    pub fn integers() -> Ring {
        Arc::new(RingDescriptor::Integers)
    }

    pub fn rationals() -> Ring {
        Arc::new(RingDescriptor::Rationals)
    }

    pub fn modular(n: i128) -> Result<Ring> {
        if n < 2 || n > u32::MAX as i128 {
            return Err(Error::ModulusInvalid(n));
        }
        Ok(Arc::new(RingDescriptor::IntegersMod(n as u64)))
    }

    /// Polynomial ring over `base`. Variables are sorted by name.
    pub fn poly<S: AsRef<str>>(base: &RingDescriptor, vars: &[S]) -> Result<Ring> {
        if matches!(base, RingDescriptor::Poly { .. }) {
            return Err(Error::InvalidRing(
                "polynomials over polynomial rings are not supported".into(),
            ));
        }
        if vars.is_empty() {
            return Err(Error::InvalidRing("polynomial ring needs a variable".into()));
        }
        let mut names: Vec<String> = vars.iter().map(|v| v.as_ref().trim().to_string()).collect();
        for n in &names {
            if n.is_empty() || n.contains([',', '[', ']']) {
                return Err(Error::InvalidRing(format!("bad variable name {n:?}")));
            }
        }
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRing("duplicate variable name".into()));
        }
        Ok(Arc::new(RingDescriptor::Poly {
            base: Box::new(base.clone()),
            vars: names,
        }))
    }

    /// Parses descriptors such as `Z`, `Q`, `Z/6`, `Z[X,Y]`, `Q[t]`.
    pub fn parse(text: &str) -> Result<Ring> {
        let text = text.trim();
        if let Some(open) = text.find('[') {
            if !text.ends_with(']') {
                return Err(Error::InvalidRing(text.into()));
            }
            let base = RingDescriptor::parse(&text[..open])?;
            let vars: Vec<&str> = text[open + 1..text.len() - 1].split(',').collect();
            return RingDescriptor::poly(&base, &vars);
        }
        match text {
            "Z" => Ok(RingDescriptor::integers()),
            "Q" => Ok(RingDescriptor::rationals()),
            _ => {
                let n = text
                    .strip_prefix("Z/")
                    .and_then(|n| n.trim().parse::<i128>().ok())
                    .ok_or_else(|| Error::InvalidRing(text.into()))?;
                RingDescriptor::modular(n)
            }
        }
    }

    pub fn is_poly(&self) -> bool {
        matches!(self, RingDescriptor::Poly { .. })
    }

    /// Coefficient ring of a polynomial ring, or the ring itself.
    pub fn base(&self) -> &RingDescriptor {
        match self {
            RingDescriptor::Poly { base, .. } => base,
            other => other,
        }
    }

    pub fn vars(&self) -> &[String] {
        match self {
            RingDescriptor::Poly { vars, .. } => vars,
            _ => &[],
        }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars().binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    /// `Q` or a polynomial ring over `Q`: every positive integer is a unit.
    pub fn is_rational_algebra(&self) -> bool {
        matches!(self.base(), RingDescriptor::Rationals)
    }

    pub fn modulus(&self) -> Option<u64> {
        match self.base() {
            RingDescriptor::IntegersMod(n) => Some(*n),
            _ => None,
        }
    }

    pub fn zero(&self) -> Value {
        match self {
            RingDescriptor::Integers => Value::Int(BigInt::zero()),
            RingDescriptor::Rationals => Value::Rat(BigRational::zero()),
            RingDescriptor::IntegersMod(_) => Value::Mod(0),
            RingDescriptor::Poly { .. } => Value::Poly(BTreeMap::new()),
        }
    }

    pub fn one(&self) -> Value {
        self.from_bigint(&BigInt::one())
    }

    /// Image of an integer under the canonical map `Z -> self`.
    pub fn from_bigint(&self, n: &BigInt) -> Value {
        match self {
            RingDescriptor::Integers => Value::Int(n.clone()),
            RingDescriptor::Rationals => Value::Rat(BigRational::from_integer(n.clone())),
            RingDescriptor::IntegersMod(m) => {
                let r = n.mod_floor(&BigInt::from(*m));
                Value::Mod(r.to_u64().expect("residue fits"))
            }
            RingDescriptor::Poly { base, vars } => {
                let c = base.from_bigint(n);
                let mut map = BTreeMap::new();
                if !base.is_zero(&c) {
                    map.insert(vec![0; vars.len()], c);
                }
                Value::Poly(map)
            }
        }
    }

    pub fn from_biguint(&self, n: &BigUint) -> Value {
        self.from_bigint(&BigInt::from(n.clone()))
    }

    pub fn from_i64(&self, n: i64) -> Value {
        self.from_bigint(&BigInt::from(n))
    }

    /// Constant embedding of a base-ring value (identity for non-polynomial rings).
    pub fn from_base(&self, c: &Value) -> Value {
        match self {
            RingDescriptor::Poly { base, vars } => {
                let mut map = BTreeMap::new();
                if !base.is_zero(c) {
                    map.insert(vec![0; vars.len()], c.clone());
                }
                Value::Poly(map)
            }
            _ => c.clone(),
        }
    }

    /// Whether `self` is a subring of `algebra` in the closed universe:
    /// equal, or both over the same base with `algebra` having every
    /// variable of `self`.
    pub fn embeds_in(&self, algebra: &RingDescriptor) -> bool {
        self == algebra
            || (algebra.is_poly()
                && self.base() == algebra.base()
                && self.vars().iter().all(|v| algebra.var_index(v).is_some()))
    }

    /// Image of `c` under the inclusion `self -> algebra` (see [`Self::embeds_in`]).
    pub fn embed_in(&self, algebra: &RingDescriptor, c: &Value) -> Value {
        match c {
            Value::Poly(p) if self != algebra => {
                let pos: Vec<usize> = self.vars().iter().map(|v| algebra.var_index(v).expect("embeds")).collect();
                Value::Poly(
                    p.iter()
                        .map(|(e, c)| {
                            let mut full = vec![0; algebra.vars().len()];
                            for (&i, &k) in pos.iter().zip(e) {
                                full[i] = k;
                            }
                            (full, c.clone())
                        })
                        .collect(),
                )
            }
            Value::Poly(_) => c.clone(),
            c => algebra.from_base(c),
        }
    }

    pub fn var(&self, name: &str) -> Result<Value> {
        let i = self
            .var_index(name)
            .ok_or_else(|| Error::InvalidRing(format!("no variable {name:?} in {self}")))?;
        let base = self.base();
        let mut e = vec![0; self.vars().len()];
        e[i] = 1;
        Ok(Value::Poly(BTreeMap::from([(e, base.one())])))
    }

    pub fn is_zero(&self, a: &Value) -> bool {
        match a {
            Value::Int(n) => n.is_zero(),
            Value::Rat(q) => q.is_zero(),
            Value::Mod(r) => *r == 0,
            Value::Poly(p) => p.is_empty(),
        }
    }

    pub fn is_one(&self, a: &Value) -> bool {
        *a == self.one()
    }

    /// Whether `a` is a canonical value of this ring.
    pub fn contains(&self, a: &Value) -> bool {
        match (self, a) {
            (RingDescriptor::Integers, Value::Int(_)) => true,
            (RingDescriptor::Rationals, Value::Rat(q)) => {
                q.denom().is_positive() && q.numer().gcd(q.denom()).is_one()
            }
            (RingDescriptor::IntegersMod(n), Value::Mod(r)) => r < n,
            (RingDescriptor::Poly { base, vars }, Value::Poly(p)) => p
                .iter()
                .all(|(e, c)| e.len() == vars.len() && !base.is_zero(c) && base.contains(c)),
            _ => false,
        }
    }

    pub fn add(&self, a: &Value, b: &Value) -> Value {
        match (self, a, b) {
            (_, Value::Int(x), Value::Int(y)) => Value::Int(x + y),
            (_, Value::Rat(x), Value::Rat(y)) => Value::Rat(x + y),
            (RingDescriptor::IntegersMod(n), Value::Mod(x), Value::Mod(y)) => {
                Value::Mod(((*x as u128 + *y as u128) % *n as u128) as u64)
            }
            (RingDescriptor::Poly { base, .. }, Value::Poly(x), Value::Poly(y)) => {
                let (big, small) = if x.len() >= y.len() { (x, y) } else { (y, x) };
                let mut out = big.clone();
                for (e, c) in small {
                    add_term(base, &mut out, e.clone(), c);
                }
                Value::Poly(out)
            }
            _ => panic!("operands do not belong to {self}"),
        }
    }

    pub fn neg(&self, a: &Value) -> Value {
        match (self, a) {
            (_, Value::Int(x)) => Value::Int(-x),
            (_, Value::Rat(x)) => Value::Rat(-x),
            (RingDescriptor::IntegersMod(n), Value::Mod(x)) => Value::Mod((n - x) % n),
            (RingDescriptor::Poly { base, .. }, Value::Poly(p)) => {
                Value::Poly(p.iter().map(|(e, c)| (e.clone(), base.neg(c))).collect())
            }
            _ => panic!("operand does not belong to {self}"),
        }
    }

    pub fn sub(&self, a: &Value, b: &Value) -> Value {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Value, b: &Value) -> Value {
        match (self, a, b) {
            (_, Value::Int(x), Value::Int(y)) => Value::Int(x * y),
            (_, Value::Rat(x), Value::Rat(y)) => Value::Rat(x * y),
            (RingDescriptor::IntegersMod(n), Value::Mod(x), Value::Mod(y)) => {
                Value::Mod(((*x as u128 * *y as u128) % *n as u128) as u64)
            }
            (RingDescriptor::Poly { base, .. }, Value::Poly(x), Value::Poly(y)) => {
                let mut out = BTreeMap::new();
                for (e1, c1) in x {
                    for (e2, c2) in y {
                        let c = base.mul(c1, c2);
                        if base.is_zero(&c) {
                            continue;
                        }
                        let e: Exponents = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                        add_term(base, &mut out, e, &c);
                    }
                }
                Value::Poly(out)
            }
            _ => panic!("operands do not belong to {self}"),
        }
    }

    pub fn pow(&self, a: &Value, mut exp: u32) -> Value {
        let mut result = self.one();
        let mut base = a.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(&result, &base);
            }
            exp >>= 1;
            if exp > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    /// `n * a` for a natural number `n`.
    pub fn mul_nat(&self, n: &BigUint, a: &Value) -> Value {
        if n.is_one() {
            return a.clone();
        }
        match (self, a) {
            (_, Value::Int(x)) => Value::Int(x * BigInt::from(n.clone())),
            (RingDescriptor::Poly { base, .. }, Value::Poly(p)) => {
                let mut out = BTreeMap::new();
                for (e, c) in p {
                    let c = base.mul_nat(n, c);
                    if !base.is_zero(&c) {
                        out.insert(e.clone(), c);
                    }
                }
                Value::Poly(out)
            }
            _ => self.mul(&self.from_biguint(n), a),
        }
    }

    /// `a / n` in a `Q`-algebra; `None` elsewhere or for `n = 0`.
    pub fn div_integer(&self, a: &Value, n: &BigInt) -> Option<Value> {
        if n.is_zero() || !self.is_rational_algebra() {
            return None;
        }
        let inv = Value::Rat(BigRational::new(BigInt::one(), n.clone()));
        Some(self.mul(&self.from_base(&inv), a))
    }

    /// Total degree of a polynomial value (0 for constants and non-polynomials).
    pub fn total_degree(&self, a: &Value) -> u32 {
        match a {
            Value::Poly(p) => p.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn value_to_json(&self, a: &Value) -> Json {
        match (self, a) {
            (_, Value::Int(x)) => Json::String(x.to_string()),
            (_, Value::Rat(q)) => Json::String(format!("{}/{}", q.numer(), q.denom())),
            (RingDescriptor::IntegersMod(n), Value::Mod(r)) => json!({"mod": n, "val": r}),
            (RingDescriptor::Poly { base, vars }, Value::Poly(p)) => Json::Array(
                p.iter()
                    .map(|(e, c)| {
                        let exps: Map<String, Json> = vars
                            .iter()
                            .zip(e)
                            .filter(|(_, k)| **k > 0)
                            .map(|(v, k)| (v.clone(), json!(k)))
                            .collect();
                        json!({"exps": exps, "coeff": base.value_to_json(c)})
                    })
                    .collect(),
            ),
            _ => panic!("value does not belong to {self}"),
        }
    }

    pub fn value_from_json(&self, j: &Json) -> Result<Value> {
        match self {
            RingDescriptor::Integers => Ok(Value::Int(json_bigint(j)?)),
            RingDescriptor::Rationals => {
                let text = match j {
                    Json::String(s) => s.clone(),
                    Json::Number(n) => n.to_string(),
                    _ => return Err(Error::parse(format!("expected rational, got {j}"))),
                };
                let (num, den) = match text.split_once('/') {
                    Some((p, q)) => (parse_bigint(p)?, parse_bigint(q)?),
                    None => (parse_bigint(&text)?, BigInt::one()),
                };
                if den.is_zero() {
                    return Err(Error::parse("zero denominator"));
                }
                Ok(Value::Rat(BigRational::new(num, den)))
            }
            RingDescriptor::IntegersMod(n) => {
                let obj = j
                    .as_object()
                    .ok_or_else(|| Error::parse(format!("expected {{\"mod\", \"val\"}}, got {j}")))?;
                let m = obj.get("mod").and_then(Json::as_u64);
                if m != Some(*n) {
                    return Err(Error::RingMismatch {
                        left: self.to_string(),
                        right: format!("Z/{}", obj.get("mod").unwrap_or(&Json::Null)),
                    });
                }
                let v = json_bigint(obj.get("val").unwrap_or(&Json::Null))?;
                Ok(self.from_bigint(&v))
            }
            RingDescriptor::Poly { base, vars } => {
                let terms = j
                    .as_array()
                    .ok_or_else(|| Error::parse(format!("expected polynomial term list, got {j}")))?;
                let mut out = BTreeMap::new();
                for t in terms {
                    let mut e = vec![0u32; vars.len()];
                    if let Some(exps) = t.get("exps") {
                        let exps = exps
                            .as_object()
                            .ok_or_else(|| Error::parse("\"exps\" must be an object"))?;
                        for (v, k) in exps {
                            let i = self
                                .var_index(v)
                                .ok_or_else(|| Error::parse(format!("unknown variable {v:?}")))?;
                            e[i] = json_u32(k)?;
                        }
                    }
                    let c = base.value_from_json(
                        t.get("coeff").ok_or_else(|| Error::parse("term without \"coeff\""))?,
                    )?;
                    add_term(base, &mut out, e, &c);
                }
                Ok(Value::Poly(out))
            }
        }
    }

    pub(crate) fn fmt_value(&self, a: &Value, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self, a) {
            (_, Value::Int(x)) => write!(f, "{x}"),
            (_, Value::Rat(q)) => write!(f, "{q}"),
            (_, Value::Mod(r)) => write!(f, "{r}"),
            (RingDescriptor::Poly { base, vars }, Value::Poly(p)) => {
                if p.is_empty() {
                    return write!(f, "0");
                }
                for (i, (e, c)) in p.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "(")?;
                    base.fmt_value(c, f)?;
                    write!(f, ")")?;
                    for (v, k) in vars.iter().zip(e) {
                        match k {
                            0 => {}
                            1 => write!(f, "*{v}")?,
                            k => write!(f, "*{v}^{k}")?,
                        }
                    }
                }
                Ok(())
            }
            _ => write!(f, "<foreign value>"),
        }
    }
}

impl fmt::Display for RingDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingDescriptor::Integers => write!(f, "Z"),
            RingDescriptor::Rationals => write!(f, "Q"),
            RingDescriptor::IntegersMod(n) => write!(f, "Z/{n}"),
            RingDescriptor::Poly { base, vars } => write!(f, "{base}[{}]", vars.join(",")),
        }
    }
}

fn add_term(base: &RingDescriptor, map: &mut BTreeMap<Exponents, Value>, e: Exponents, c: &Value) {
    match map.entry(e) {
        Entry::Vacant(v) => {
            if !base.is_zero(c) {
                v.insert(c.clone());
            }
        }
        Entry::Occupied(mut o) => {
            let s = base.add(o.get(), c);
            if base.is_zero(&s) {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

fn parse_bigint(s: &str) -> Result<BigInt> {
    s.trim()
        .parse::<BigInt>()
        .map_err(|_| Error::parse(format!("bad integer {s:?}")))
}

pub(crate) fn json_bigint(j: &Json) -> Result<BigInt> {
    match j {
        Json::String(s) => parse_bigint(s),
        Json::Number(n) if n.is_i64() || n.is_u64() => parse_bigint(&n.to_string()),
        _ => Err(Error::parse(format!("expected integer, got {j}"))),
    }
}

pub(crate) fn json_u32(j: &Json) -> Result<u32> {
    j.as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| Error::parse(format!("expected natural number, got {j}")))
}

/// A ring element together with its ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scalar {
    ring: Ring,
    value: Value,
}

impl Scalar {
    pub fn new(ring: &Ring, value: Value) -> Result<Self> {
        if !ring.contains(&value) {
            return Err(Error::parse(format!("value is not a canonical element of {ring}")));
        }
        Ok(Scalar { ring: ring.clone(), value })
    }

    pub(crate) fn from_parts(ring: &Ring, value: Value) -> Self {
        debug_assert!(ring.contains(&value));
        Scalar { ring: ring.clone(), value }
    }

    pub fn zero(ring: &Ring) -> Self {
        Scalar::from_parts(ring, ring.zero())
    }

    pub fn one(ring: &Ring) -> Self {
        Scalar::from_parts(ring, ring.one())
    }

    pub fn from_i64(ring: &Ring, n: i64) -> Self {
        Scalar::from_parts(ring, ring.from_i64(n))
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Scalar::from_parts(&RingDescriptor::integers(), Value::Int(n.into()))
    }

    pub fn rational(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::parse("zero denominator"));
        }
        Ok(Scalar::from_parts(
            &RingDescriptor::rationals(),
            Value::Rat(BigRational::new(p.into(), q.into())),
        ))
    }

    pub fn modular(n: i128, v: i64) -> Result<Self> {
        let ring = RingDescriptor::modular(n)?;
        Ok(Scalar::from_i64(&ring, v))
    }

    pub fn var(ring: &Ring, name: &str) -> Result<Self> {
        Ok(Scalar::from_parts(ring, ring.var(name)?))
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn value(&self) -> &Value {
        &self.value
    }

    pub fn into_value(self) -> Value {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.ring.is_zero(&self.value)
    }

    fn check(&self, other: &Scalar) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch {
                left: self.ring.to_string(),
                right: other.ring.to_string(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(Scalar::from_parts(&self.ring, self.ring.add(&self.value, &other.value)))
    }

    pub fn sub(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(Scalar::from_parts(&self.ring, self.ring.sub(&self.value, &other.value)))
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        self.check(other)?;
        Ok(Scalar::from_parts(&self.ring, self.ring.mul(&self.value, &other.value)))
    }

    pub fn neg(&self) -> Scalar {
        Scalar::from_parts(&self.ring, self.ring.neg(&self.value))
    }

    pub fn pow(&self, exp: u32) -> Scalar {
        Scalar::from_parts(&self.ring, self.ring.pow(&self.value, exp))
    }

    pub fn to_json(&self) -> Json {
        self.ring.value_to_json(&self.value)
    }

    pub fn from_json(ring: &Ring, j: &Json) -> Result<Scalar> {
        Ok(Scalar::from_parts(ring, ring.value_from_json(j)?))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ring.fmt_value(&self.value, f)
    }
}

/// Injective ring map `Z -> Q`, applied coefficient-wise on `Z[vars] -> Q[vars]`.
pub fn fraction_embed(a: &Scalar) -> Result<Scalar> {
    let target = fraction_ring(a.ring())?;
    Ok(Scalar::from_parts(&target, embed_int_value(&a.value)))
}

/// The fraction-field counterpart of `Z` or `Z[vars]`.
pub fn fraction_ring(ring: &RingDescriptor) -> Result<Ring> {
    match ring {
        RingDescriptor::Integers => Ok(RingDescriptor::rationals()),
        RingDescriptor::Poly { base, vars } if **base == RingDescriptor::Integers => {
            RingDescriptor::poly(&RingDescriptor::Rationals, vars)
        }
        other => Err(Error::UnsupportedRing(format!(
            "fraction embedding needs Z or Z[..], got {other}"
        ))),
    }
}

fn embed_int_value(v: &Value) -> Value {
    match v {
        Value::Int(n) => Value::Rat(BigRational::from_integer(n.clone())),
        Value::Poly(p) => Value::Poly(p.iter().map(|(e, c)| (e.clone(), embed_int_value(c))).collect()),
        other => other.clone(),
    }
}

const PASCAL_ROWS: usize = 129;

fn pascal() -> &'static Vec<Vec<u128>> {
    static TABLE: OnceLock<Vec<Vec<u128>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(PASCAL_ROWS);
        for n in 0..PASCAL_ROWS {
            let mut row = vec![1u128; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// Binomial coefficient `a choose b`; zero when `b > a`.
pub fn binomial(a: u64, b: u64) -> BigUint {
    if b > a {
        return BigUint::zero();
    }
    if (a as usize) < PASCAL_ROWS {
        return BigUint::from(pascal()[a as usize][b as usize]);
    }
    let b = b.min(a - b);
    let mut acc = BigUint::one();
    for i in 0..b {
        acc = acc * BigUint::from(a - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// `(sum parts)! / prod(parts!)`.
pub fn multinomial(parts: &[u64]) -> BigUint {
    let mut total = 0u64;
    let mut acc = BigUint::one();
    for &p in parts {
        total += p;
        acc *= binomial(total, p);
    }
    acc
}

pub(crate) fn exact_div(num: &BigUint, den: &BigUint, what: &str) -> Result<BigUint> {
    let (q, r) = num.div_rem(den);
    if !r.is_zero() {
        return Err(Error::NotIntegral(format!("{what}: {num} / {den}")));
    }
    Ok(q)
}

/// `(m n)! / (m! (n!)^m)`, the constant in `γ_m(γ_n(x)) = c · γ_{mn}(x)`.
pub fn uniform_dp_coeff(m: u32, n: u32) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::EmptyIndex);
    }
    let (m, n) = (m as u64, n as u64);
    let den = factorial(m) * factorial(n).pow(m as u32);
    exact_div(&factorial(m * n), &den, "uniform dp coefficient")
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Exponent of the prime `p` in `n!` (Legendre's formula).
pub fn padic_val_factorial(p: u64, n: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let mut total = 0;
    let mut q = n / p;
    while q > 0 {
        total += q;
        q /= p;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z() -> Ring {
        RingDescriptor::integers()
    }

    #[test]
    fn integer_arithmetic() {
        let a = Scalar::integer(3);
        let b = Scalar::integer(5);
        assert_eq!(a.add(&b).unwrap(), Scalar::integer(8));
    }

    #[test]
    fn modular_reduction() {
        let a = Scalar::modular(6, 4).unwrap();
        let b = Scalar::modular(6, 5).unwrap();
        assert_eq!(a.mul(&b).unwrap(), Scalar::modular(6, 2).unwrap());
        assert_eq!(Scalar::modular(6, -1).unwrap(), Scalar::modular(6, 5).unwrap());
    }

    #[test]
    fn rational_reduced() {
        let a = Scalar::rational(1, 2).unwrap();
        let b = Scalar::rational(2, 3).unwrap();
        assert_eq!(a.mul(&b).unwrap(), Scalar::rational(1, 3).unwrap());
        assert_eq!(Scalar::rational(2, -4).unwrap().to_json(), json!("-1/2"));
    }

    #[test]
    fn ring_mismatch_is_an_error() {
        let a = Scalar::integer(1);
        let b = Scalar::rational(1, 1).unwrap();
        assert!(matches!(a.add(&b), Err(Error::RingMismatch { .. })));
    }

    #[test]
    fn modulus_must_be_at_least_two() {
        assert_eq!(RingDescriptor::modular(1), Err(Error::ModulusInvalid(1)));
        assert_eq!(RingDescriptor::modular(0), Err(Error::ModulusInvalid(0)));
        assert!(RingDescriptor::parse("Z/1").is_err());
    }

    #[test]
    fn nested_polynomials_rejected() {
        let zx = RingDescriptor::parse("Z[X]").unwrap();
        assert!(matches!(RingDescriptor::poly(&zx, &["Y"]), Err(Error::InvalidRing(_))));
        assert!(RingDescriptor::poly(&RingDescriptor::Integers, &["X", "X"]).is_err());
    }

    #[test]
    fn descriptor_parse_and_display() {
        for text in ["Z", "Q", "Z/6", "Z[X,Y]", "Q[t]", "Z/4[A,B]"] {
            assert_eq!(RingDescriptor::parse(text).unwrap().to_string(), text);
        }
        // variables are canonically sorted
        assert_eq!(RingDescriptor::parse("Z[Y,X]").unwrap().to_string(), "Z[X,Y]");
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(9, 0), BigUint::one());
        assert_eq!(binomial(2, 5), BigUint::zero());
        // Pascal triangle built by addition only
        let mut row = vec![BigUint::one()];
        for _ in 0..5 {
            let mut next = vec![BigUint::one(); row.len() + 1];
            for k in 1..row.len() {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
        }
        assert_eq!(binomial(5, 2), row[2]);
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
    }

    #[test]
    fn binomial_beyond_table_matches_factorials() {
        let (a, b) = (200u64, 77u64);
        assert_eq!(binomial(a, b) * factorial(b) * factorial(a - b), factorial(a));
    }

    #[test]
    fn uniform_dp_coeff_values() {
        // 4! / (2! * (2!)^2) = 24 / 8
        assert_eq!(uniform_dp_coeff(2, 2).unwrap(), BigUint::from(3u32));
        assert_eq!(uniform_dp_coeff(1, 5).unwrap(), BigUint::one());
        assert_eq!(uniform_dp_coeff(3, 1).unwrap(), BigUint::one());
        assert_eq!(uniform_dp_coeff(0, 3).unwrap(), BigUint::one());
    }

    #[test]
    fn uniform_dp_coeff_identity() {
        for m in 0..=6u32 {
            for n in 1..=6u32 {
                let c = uniform_dp_coeff(m, n).unwrap();
                let lhs = c * factorial(m as u64) * factorial(n as u64).pow(m);
                assert_eq!(lhs, factorial((m * n) as u64), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn padic_values() {
        assert_eq!(padic_val_factorial(2, 4).unwrap(), 3);
        assert_eq!(padic_val_factorial(5, 4).unwrap(), 0);
        assert_eq!(padic_val_factorial(3, 9).unwrap(), 4);
        assert_eq!(padic_val_factorial(4, 9), Err(Error::NotPrime(4)));
        assert_eq!(padic_val_factorial(1, 9), Err(Error::NotPrime(1)));
    }

    fn digit_sum(mut n: u64, p: u64) -> u64 {
        let mut s = 0;
        while n > 0 {
            s += n % p;
            n /= p;
        }
        s
    }

    #[test]
    fn padic_bound_and_digit_sum_formula() {
        for p in [2u64, 3, 5, 7] {
            for n in 0..=200u64 {
                let v = padic_val_factorial(p, n).unwrap();
                assert!(v <= n);
                assert_eq!(v, (n - digit_sum(n, p)) / (p - 1));
                // independent check: count factors of p in n! directly
                let direct: u64 = (1..=n)
                    .map(|mut k| {
                        let mut c = 0;
                        while k % p == 0 {
                            k /= p;
                            c += 1;
                        }
                        c
                    })
                    .sum();
                assert_eq!(v, direct);
            }
        }
    }

    #[test]
    fn fraction_embedding() {
        let seven = fraction_embed(&Scalar::integer(7)).unwrap();
        assert_eq!(seven, Scalar::rational(7, 1).unwrap());
        assert_eq!(seven.to_json(), json!("7/1"));
        assert_eq!(fraction_embed(&Scalar::integer(0)).unwrap(), Scalar::rational(0, 1).unwrap());

        let zx = RingDescriptor::parse("Z[X]").unwrap();
        let x = Scalar::var(&zx, "X").unwrap();
        let p = Scalar::from_i64(&zx, 3).mul(&x).unwrap().add(&Scalar::from_i64(&zx, 2)).unwrap();
        let q = fraction_embed(&p).unwrap();
        assert_eq!(q.ring().to_string(), "Q[X]");
        assert_eq!(q.to_json(), json!([{"exps": {}, "coeff": "2/1"}, {"exps": {"X": 1}, "coeff": "3/1"}]));

        let m = Scalar::modular(6, 1).unwrap();
        assert!(matches!(fraction_embed(&m), Err(Error::UnsupportedRing(_))));
    }

    #[test]
    fn polynomial_arithmetic_and_json() {
        let r = RingDescriptor::parse("Z/6[X]").unwrap();
        let x = Scalar::var(&r, "X").unwrap();
        let two = Scalar::from_i64(&r, 2);
        let three = Scalar::from_i64(&r, 3);
        // (2X)(3X) = 6X^2 = 0 in Z/6
        assert!(two.mul(&x).unwrap().mul(&three.mul(&x).unwrap()).unwrap().is_zero());
        let p = x.add(&Scalar::one(&r)).unwrap().pow(2);
        let back = Scalar::from_json(&r, &p.to_json()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn json_parse_errors() {
        let q = RingDescriptor::rationals();
        assert!(Scalar::from_json(&q, &json!("1/0")).is_err());
        assert!(Scalar::from_json(&z(), &json!("x")).is_err());
        let m = RingDescriptor::modular(6).unwrap();
        assert!(matches!(
            Scalar::from_json(&m, &json!({"mod": 5, "val": 1})),
            Err(Error::RingMismatch { .. })
        ));
        let zx = RingDescriptor::parse("Z[X]").unwrap();
        assert!(Scalar::from_json(&zx, &json!([{"exps": {"Y": 1}, "coeff": "1"}])).is_err());
    }

    fn ring_strategy() -> impl Strategy<Value = Ring> {
        prop_oneof![
            Just(RingDescriptor::integers()),
            Just(RingDescriptor::rationals()),
            Just(RingDescriptor::modular(6).unwrap()),
            Just(RingDescriptor::parse("Z[X,Y]").unwrap()),
            Just(RingDescriptor::parse("Q[X]").unwrap()),
        ]
    }

    fn value_in(ring: Ring) -> BoxedStrategy<Value> {
        match &*ring {
            RingDescriptor::Integers => (-50i64..50).prop_map(|n| Value::Int(n.into())).boxed(),
            RingDescriptor::Rationals => (-20i64..20, 1i64..9)
                .prop_map(|(p, q)| Value::Rat(BigRational::new(p.into(), q.into())))
                .boxed(),
            RingDescriptor::IntegersMod(n) => (0..*n).prop_map(Value::Mod).boxed(),
            RingDescriptor::Poly { base, vars } => {
                let base = Arc::new((**base).clone());
                let nv = vars.len();
                let ring = ring.clone();
                proptest::collection::vec(
                    (proptest::collection::vec(0u32..3, nv), value_in(base.clone())),
                    0..4,
                )
                .prop_map(move |terms| {
                    let mut acc = ring.zero();
                    for (e, c) in terms {
                        let mut m = BTreeMap::new();
                        if !base.is_zero(&c) {
                            m.insert(e, c);
                        }
                        acc = ring.add(&acc, &Value::Poly(m));
                    }
                    acc
                })
                .boxed()
            }
        }
    }

    fn triple() -> impl Strategy<Value = (Ring, Value, Value, Value)> {
        ring_strategy().prop_flat_map(|r| {
            (Just(r.clone()), value_in(r.clone()), value_in(r.clone()), value_in(r))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn commutative_ring_axioms((r, a, b, c) in triple()) {
            prop_assert!(r.contains(&a) && r.contains(&b) && r.contains(&c));
            prop_assert_eq!(r.add(&a, &b), r.add(&b, &a));
            prop_assert_eq!(r.mul(&a, &b), r.mul(&b, &a));
            prop_assert_eq!(r.add(&r.add(&a, &b), &c), r.add(&a, &r.add(&b, &c)));
            prop_assert_eq!(r.mul(&r.mul(&a, &b), &c), r.mul(&a, &r.mul(&b, &c)));
            prop_assert_eq!(r.mul(&a, &r.add(&b, &c)), r.add(&r.mul(&a, &b), &r.mul(&a, &c)));
            prop_assert_eq!(r.mul(&a, &r.one()), a.clone());
            prop_assert_eq!(r.add(&a, &r.zero()), a.clone());
            prop_assert!(r.is_zero(&r.add(&a, &r.neg(&a))));
            let prod = r.mul(&a, &b);
            prop_assert!(r.contains(&prod));
        }

        #[test]
        fn binomial_multinomial_relation(a in 0u64..=12, b in 0u64..=12, c in 0u64..=12) {
            prop_assume!(b + c <= a);
            let lhs = binomial(a, b) * binomial(a - b, c);
            prop_assert_eq!(lhs, multinomial(&[b, c, a - b - c]));
        }

        #[test]
        fn fraction_embed_is_injective_homomorphism(x in -1000i64..1000, y in -1000i64..1000) {
            let (a, b) = (Scalar::integer(x), Scalar::integer(y));
            let fa = fraction_embed(&a).unwrap();
            let fb = fraction_embed(&b).unwrap();
            prop_assert_eq!(fraction_embed(&a.add(&b).unwrap()).unwrap(), fa.add(&fb).unwrap());
            prop_assert_eq!(fraction_embed(&a.mul(&b).unwrap()).unwrap(), fa.mul(&fb).unwrap());
            prop_assert_eq!(fa == fb, x == y);
        }

        #[test]
        fn json_round_trip((r, a, _b, _c) in triple()) {
            let s = Scalar::new(&r, a).unwrap();
            prop_assert_eq!(Scalar::from_json(&r, &s.to_json()).unwrap(), s);
        }
    }
}
