//! Seeded random inputs for the property suites.
//!
//! Coefficients are drawn uniformly from `[-9, 9]` (numerators over
//! denominators in `[1, 9]` for `Q`, every residue for `Z/n`), supports have
//! at most four terms and monomials have degree at most four.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::freemodule::{FreeModuleSpec, ModuleVector};
use crate::gamma::GammaElement;
use crate::multiindex::{Basis, MultiIndex};
use crate::scalars::{RingDescriptor, Value};

pub type SampleRng = ChaCha8Rng;

/// Default seed of every suite.
pub const DEFAULT_SEED: u64 = 0xD171DED;

pub const MAX_SUPPORT: usize = 4;
pub const MAX_MONOMIAL_DEGREE: u32 = 4;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_scalar(ring: &RingDescriptor, rng: &mut SampleRng) -> Value {
    match ring {
        RingDescriptor::Integers | RingDescriptor::Rationals => {
            let n = rng.gen_range(-9i64..=9);
            let v = ring.from_i64(n);
            if matches!(ring, RingDescriptor::Rationals) {
                let d = rng.gen_range(1i64..=9);
                ring.div_integer(&v, &d.into()).expect("nonzero denominator")
            } else {
                v
            }
        }
        RingDescriptor::IntegersMod(n) => Value::Mod(rng.gen_range(0..*n)),
        RingDescriptor::Poly { base, vars } => {
            let mut acc = ring.zero();
            for _ in 0..rng.gen_range(0..=3) {
                let mut term = ring.from_base(&random_nonzero_scalar(base, rng));
                for v in vars {
                    let e = rng.gen_range(0..=2);
                    let x = ring.var(v).expect("own variable");
                    term = ring.mul(&term, &ring.pow(&x, e));
                }
                acc = ring.add(&acc, &term);
            }
            acc
        }
    }
}

pub fn random_nonzero_scalar(ring: &RingDescriptor, rng: &mut SampleRng) -> Value {
    loop {
        let v = random_scalar(ring, rng);
        if !ring.is_zero(&v) {
            return v;
        }
    }
}

pub fn random_vector(spec: &FreeModuleSpec, rng: &mut SampleRng) -> ModuleVector {
    let coords = (0..spec.rank()).map(|_| random_scalar(spec.ring(), rng)).collect();
    ModuleVector::from_values(spec, coords)
}

/// Uniformly placed monomial index of the given degree.
pub fn random_index(basis: &Basis, degree: u32, rng: &mut SampleRng) -> MultiIndex {
    let mut exps = vec![0u32; basis.rank()];
    for _ in 0..degree {
        exps[rng.gen_range(0..basis.rank())] += 1;
    }
    MultiIndex::from_dense(basis, exps).expect("rank matches")
}

/// Random element with up to [`MAX_SUPPORT`] terms of degree at most
/// [`MAX_MONOMIAL_DEGREE`]; positive degrees only when `in_ideal`.
pub fn random_gamma(spec: &FreeModuleSpec, in_ideal: bool, rng: &mut SampleRng) -> GammaElement {
    let low = if in_ideal { 1 } else { 0 };
    let mut out = GammaElement::zero(spec);
    for _ in 0..rng.gen_range(1..=MAX_SUPPORT) {
        let d = rng.gen_range(low..=MAX_MONOMIAL_DEGREE);
        let k = random_index(spec.basis(), d, rng);
        let c = random_nonzero_scalar(spec.ring(), rng);
        out = out.add_unchecked(&GammaElement::monomial_value(spec, k, c));
    }
    out
}

/// Random coefficient table entries for a polynomial law: up to four
/// monomials with degrees in `degrees`, each with a random target vector.
pub fn random_law_terms(
    source: &FreeModuleSpec,
    target: &FreeModuleSpec,
    degrees: RangeInclusive<u32>,
    rng: &mut SampleRng,
) -> Vec<(MultiIndex, ModuleVector)> {
    (0..rng.gen_range(1..=MAX_SUPPORT))
        .map(|_| {
            let d = rng.gen_range(degrees.clone());
            (random_index(source.basis(), d, rng), random_vector(target, rng))
        })
        .collect()
}
