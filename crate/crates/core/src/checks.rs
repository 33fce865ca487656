//! Seeded verification suites shared by the command line and the test
//! gate. Each suite draws its inputs sequentially from one seed, evaluates
//! them in parallel, and reports per-check pass/fail counts with the first
//! failing input.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::basechange::{
    complete_multiplicatively, extended_spec, reduction_square, theta_forward, theta_inverse, theta_table,
    theta_uniqueness, ExtendedGamma, Extension, UNIQUENESS_MAX_N,
};
use crate::dpaxioms::gamma_oracle;
use crate::error::{Error, Result};
use crate::freemodule::{FreeModuleSpec, LinearMap, ModuleVector};
use crate::gamma::{dp_generator, GammaElement};
use crate::multiindex::{BasisLabels, MultiIndex};
use crate::polylaw::{compat_check, grade_slice_coords, PolyLaw, Substitution};
use crate::sampling::{self, random_gamma, random_law_terms, random_scalar, random_vector, SampleRng};
use crate::scalars::{Ring, RingDescriptor, Scalar, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: usize,
    pub fail: usize,
    pub counterexample: Option<Json>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.fail == 0 && c.pass > 0)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Json {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Evaluates `check` on every input in parallel. `Ok(None)` is a pass,
/// `Ok(Some(cx))` a failure with counterexample `cx`; errors count as
/// failures.
pub fn tally<T: Sync>(name: &str, inputs: &[T], check: impl Fn(&T) -> Result<Option<Json>> + Sync) -> CheckResult {
    let outcomes: Vec<Option<Json>> = inputs
        .par_iter()
        .map(|t| match check(t) {
            Ok(o) => o,
            Err(e) => Some(json!({"error": {"kind": e.kind(), "detail": e.to_string()}})),
        })
        .collect();
    let fail = outcomes.iter().filter(|o| o.is_some()).count();
    let counterexample = outcomes.into_iter().enumerate().find_map(|(i, o)| o.map(|cx| json!({"sample": i, "detail": cx})));
    CheckResult { name: name.to_string(), pass: inputs.len() - fail, fail, counterexample }
}

fn verdict(ok: bool, cx: impl FnOnce() -> Json) -> Option<Json> {
    if ok {
        None
    } else {
        Some(cx())
    }
}

fn values_json(ring: &Ring, vs: &[Value]) -> Json {
    Json::Array(vs.iter().map(|v| ring.value_to_json(v)).collect())
}

/// Closed-form `γ_n` against the fraction-field oracle over `Z`, ranks
/// `1..=max_rank`, `n ≤ max_n`.
pub fn oracle_suite(seed: u64, samples: usize, max_rank: usize, max_n: u32) -> Result<SuiteReport> {
    let mut rng = sampling::rng(seed);
    let z = RingDescriptor::integers();
    let inputs: Vec<(GammaElement, u32)> = (0..samples)
        .map(|_| {
            let spec = FreeModuleSpec::standard(&z, rng.gen_range(1..=max_rank)).expect("positive rank");
            (random_gamma(&spec, true, &mut rng), rng.gen_range(0..=max_n))
        })
        .collect();
    let integral = tally("oracle coefficients are integral", &inputs, |(a, n)| match gamma_oracle(*n, a) {
        Err(Error::NotIntegral(detail)) => Ok(Some(json!({"a": a.to_json(), "n": n, "detail": detail}))),
        other => other.map(|_| None),
    });
    let agree = tally("closed form equals oracle", &inputs, |(a, n)| {
        let lhs = a.gamma_n(*n)?;
        let rhs = gamma_oracle(*n, a)?;
        Ok(verdict(lhs == rhs, || json!({"a": a.to_json(), "n": n, "closedForm": lhs.to_json(), "oracle": rhs.to_json()})))
    });
    Ok(SuiteReport { suite: "oracle".into(), seed, samples, checks: vec![agree, integral] })
}

/// Isomorphism, generator formula, divided power compatibility and
/// uniqueness of `θ` for one extension.
pub fn base_change_suite(ext: &Extension, rank: usize, seed: u64, samples: usize) -> Result<SuiteReport> {
    let source = FreeModuleSpec::standard(ext.base(), rank)?;
    let target = extended_spec(ext, &source);
    let top = ext.top();
    let mut rng = sampling::rng(seed);

    struct Case {
        a: ExtendedGamma,
        b: ExtendedGamma,
        s: Value,
        x: ModuleVector,
        n: u32,
        ideal: GammaElement,
        image: GammaElement,
    }
    let random_extended = |rng: &mut SampleRng| theta_inverse(ext, &random_gamma(&target, false, rng));
    let mut cases = Vec::with_capacity(samples);
    for _ in 0..samples {
        cases.push(Case {
            a: random_extended(&mut rng)?,
            b: random_extended(&mut rng)?,
            s: random_scalar(top, &mut rng),
            x: random_vector(&source, &mut rng),
            n: rng.gen_range(0..=3),
            ideal: random_gamma(&source, true, &mut rng),
            image: random_gamma(&target, false, &mut rng),
        });
    }
    let theta = |a: &ExtendedGamma| theta_forward(ext, a);
    let mut checks = vec![
        tally("additive", &cases, |c| {
            let lhs = theta(&c.a.add(&c.b)?)?;
            let rhs = theta(&c.a)?.add(&theta(&c.b)?)?;
            Ok(verdict(lhs == rhs, || json!({"a": c.a.to_json(), "b": c.b.to_json()})))
        }),
        tally("multiplicative", &cases, |c| {
            let lhs = theta(&c.a.mul(&c.b)?)?;
            let rhs = theta(&c.a)?.mul(&theta(&c.b)?)?;
            Ok(verdict(lhs == rhs, || json!({"a": c.a.to_json(), "b": c.b.to_json(), "lhs": lhs.to_json(), "rhs": rhs.to_json()})))
        }),
        tally("S-linear", &cases, |c| {
            let lhs = theta(&c.a.scale(&c.s))?;
            let rhs = theta(&c.a)?.scale_value(&c.s);
            Ok(verdict(lhs == rhs, || json!({"a": c.a.to_json(), "s": top.value_to_json(&c.s)})))
        }),
        tally("unital", &cases[..1.min(cases.len())], |_| {
            let one = theta(&ExtendedGamma::one(ext, &source)?)?;
            Ok(verdict(one == GammaElement::one(&target), || json!({"image": one.to_json()})))
        }),
        tally("inverse after forward", &cases, |c| {
            let back = theta_inverse(ext, &theta(&c.a)?)?;
            Ok(verdict(back == c.a, || json!({"a": c.a.to_json()})))
        }),
        tally("forward after inverse", &cases, |c| {
            let back = theta(&theta_inverse(ext, &c.image)?)?;
            Ok(verdict(back == c.image, || json!({"a": c.image.to_json()})))
        }),
        tally("generator formula", &cases, |c| {
            let lhs = theta(&ExtendedGamma::pure(ext, &c.s, &dp_generator(c.n, &c.x))?)?;
            let rhs = dp_generator(c.n, &ext.embed_vector(&c.x)?).scale_value(&c.s);
            Ok(verdict(lhs == rhs, || {
                json!({"s": top.value_to_json(&c.s), "x": c.x.to_json(), "n": c.n, "lhs": lhs.to_json(), "rhs": rhs.to_json()})
            }))
        }),
        tally("divided powers commute", &cases, |c| {
            let one = top.one();
            let lhs = theta(&ExtendedGamma::pure(ext, &one, &c.ideal.gamma_n(c.n)?)?)?;
            let rhs = theta(&ExtendedGamma::pure(ext, &one, &c.ideal)?)?.gamma_n(c.n)?;
            Ok(verdict(lhs == rhs, || json!({"a": c.ideal.to_json(), "n": c.n})))
        }),
    ];

    let table = theta_table(ext, &source, UNIQUENESS_MAX_N)?;
    let entries: Vec<(MultiIndex, GammaElement)> = table.images().map(|(k, v)| (k.clone(), v.clone())).collect();
    checks.push(tally("own table is unique", &entries[..1], |_| {
        Ok(verdict(theta_uniqueness(ext, &table)?, || json!("theta's own table rejected")))
    }));
    checks.push(tally("perturbed image detected", &entries, |(k, img)| {
        let broken = table.with_image(k, img.add(&GammaElement::one(&target))?)?;
        Ok(verdict(!theta_uniqueness(ext, &broken)?, || json!({"perturbed": k.to_json()})))
    }));
    checks.push(tally("multiplicative completion", &entries[..1], |_| {
        let gens: Vec<Vec<GammaElement>> = (0..rank)
            .map(|i| {
                (1..=UNIQUENESS_MAX_N)
                    .map(|n| dp_generator(n, &ext.embed_vector(&ModuleVector::basis_vector(&source, i)).expect("same base")))
                    .collect()
            })
            .collect();
        let completed = complete_multiplicatively(ext, &source, &gens, UNIQUENESS_MAX_N)?;
        Ok(verdict(theta_uniqueness(ext, &completed)?, || json!("completed table rejected")))
    }));
    Ok(SuiteReport { suite: format!("base change {ext}"), seed, samples, checks })
}

/// `reduce ∘ γ_m = γ_m ∘ reduce` for the given moduli.
pub fn reduction_suite(moduli: &[u64], rank: usize, seed: u64, samples: usize, max_m: u32) -> Result<SuiteReport> {
    let spec = FreeModuleSpec::standard(&RingDescriptor::integers(), rank)?;
    let mut rng = sampling::rng(seed);
    let mut checks = Vec::new();
    for &n in moduli {
        RingDescriptor::modular(n as i128)?;
        let cases: Vec<(GammaElement, u32)> =
            (0..samples).map(|_| (random_gamma(&spec, true, &mut rng), rng.gen_range(0..=max_m))).collect();
        checks.push(tally(&format!("square commutes mod {n}"), &cases, |(a, m)| {
            Ok(verdict(reduction_square(n, a, *m)?, || json!({"a": a.to_json(), "m": m})))
        }));
    }
    Ok(SuiteReport { suite: "reduction".into(), seed, samples, checks })
}

fn law_rings() -> Vec<Ring> {
    ["Z", "Q", "Z/6"].iter().map(|r| RingDescriptor::parse(r).expect("valid ring")).collect()
}

fn random_law(rng: &mut SampleRng, max_rank: usize, degrees: std::ops::RangeInclusive<u32>) -> PolyLaw {
    let rings = law_rings();
    let ring = &rings[rng.gen_range(0..rings.len())];
    let source = FreeModuleSpec::standard(ring, rng.gen_range(1..=max_rank)).expect("positive rank");
    let target = FreeModuleSpec::new(ring, &BasisLabels::numbered("n", rng.gen_range(1..=2))).expect("positive rank");
    let terms = random_law_terms(&source, &target, degrees, rng);
    PolyLaw::new(&source, &target, terms).expect("terms fit")
}

fn random_point(ring: &Ring, rank: usize, rng: &mut SampleRng) -> Vec<Value> {
    (0..rank).map(|_| random_scalar(ring, rng)).collect()
}

/// `X_i + c_i` over `R[X_1, ..., X_r]`: a point no nonzero polynomial
/// identity can vanish at.
fn generic_point(ring: &Ring, rank: usize, rng: &mut SampleRng) -> Result<(Ring, Vec<Value>)> {
    let names: Vec<String> = (1..=rank).map(|i| format!("X{i}")).collect();
    let algebra = RingDescriptor::poly(ring, &names)?;
    let point = names
        .iter()
        .map(|n| algebra.add(&algebra.var(n).expect("own variable"), &algebra.from_base(&random_scalar(ring, rng))))
        .collect();
    Ok((algebra, point))
}

/// Representation, module structure, homogeneity and components.
pub fn law_structure_suite(seed: u64, samples: usize) -> Result<SuiteReport> {
    let mut rng = sampling::rng(seed);
    struct Case {
        f: PolyLaw,
        g: PolyLaw,
        r: Scalar,
        m: Vec<Value>,
        d: u32,
        homogeneous: PolyLaw,
        mixed: PolyLaw,
        generic: (Ring, Vec<Value>),
        map: LinearMap,
    }
    let mut cases = Vec::with_capacity(samples);
    for _ in 0..samples {
        let f = random_law(&mut rng, 3, 0..=4);
        let g = PolyLaw::new(f.source(), f.target(), random_law_terms(f.source(), f.target(), 0..=4, &mut rng))?;
        let ring = f.ring().clone();
        let r = Scalar::new(&ring, random_scalar(&ring, &mut rng))?;
        let m = random_point(&ring, f.source().rank(), &mut rng);
        let d = rng.gen_range(0..=4);
        let homogeneous = PolyLaw::new(f.source(), f.target(), random_law_terms(f.source(), f.target(), d..=d, &mut rng))?;
        // a law with a nonzero coefficient outside degree d
        let off = if d == 0 { 1 } else { d - 1 };
        let stray = random_law_terms(f.source(), f.target(), off..=off, &mut rng);
        let mut mixed = homogeneous.add(&PolyLaw::new(f.source(), f.target(), stray)?)?;
        if mixed.is_homogeneous(d) {
            let k = MultiIndex::unit(f.source().basis(), 0).scale(off);
            mixed = mixed.add(&PolyLaw::new(f.source(), f.target(), [(k, ModuleVector::basis_vector(f.target(), 0))])?)?;
        }
        let generic = generic_point(&ring, f.source().rank(), &mut rng)?;
        let cols = (0..f.source().rank()).map(|_| random_vector(f.target(), &mut rng)).collect();
        let map = LinearMap::new(f.source(), f.target(), cols)?;
        cases.push(Case { f, g, r, m, d, homogeneous, mixed, generic, map });
    }
    let checks = vec![
        tally("coefficient round trip", &cases, |c| {
            let family: Vec<ModuleVector> = (0..c.f.source().rank()).map(|i| ModuleVector::basis_vector(c.f.source(), i)).collect();
            let back = c.f.coeff_of(&family)?.with_source_basis(c.f.source().basis())?;
            Ok(verdict(back == c.f, || json!({"law": c.f.to_json(), "extracted": back.to_json()})))
        }),
        tally("evaluation is additive in the law", &cases, |c| {
            let ring = c.f.ring();
            let lhs = c.f.add(&c.g)?.eval_at(ring, &c.m)?;
            let rhs: Vec<Value> =
                c.f.eval_at(ring, &c.m)?.iter().zip(c.g.eval_at(ring, &c.m)?).map(|(a, b)| ring.add(a, &b)).collect();
            Ok(verdict(lhs == rhs, || json!({"f": c.f.to_json(), "g": c.g.to_json(), "m": values_json(ring, &c.m)})))
        }),
        tally("evaluation is linear in scalars", &cases, |c| {
            let ring = c.f.ring();
            let lhs = c.f.scale(&c.r)?.eval_at(ring, &c.m)?;
            let rhs: Vec<Value> = c.f.eval_at(ring, &c.m)?.iter().map(|y| ring.mul(c.r.value(), y)).collect();
            Ok(verdict(lhs == rhs, || json!({"f": c.f.to_json(), "r": c.r.to_json()})))
        }),
        tally("homogeneous laws pass the scaling test", &cases, |c| {
            let ring = c.f.ring();
            let ok = c.homogeneous.is_homogeneous(c.d) && c.homogeneous.scaling_test(c.d, ring, &c.m)?;
            Ok(verdict(ok, || json!({"law": c.homogeneous.to_json(), "d": c.d, "m": values_json(ring, &c.m)})))
        }),
        tally("inhomogeneous laws fail the scaling test", &cases, |c| {
            let (algebra, point) = &c.generic;
            let ok = !c.mixed.is_homogeneous(c.d) && !c.mixed.scaling_test(c.d, algebra, point)?;
            Ok(verdict(ok, || json!({"law": c.mixed.to_json(), "d": c.d})))
        }),
        tally("components sum to the law", &cases, |c| {
            let parts = c.f.components();
            let sum = PolyLaw::sum(c.f.source(), c.f.target(), parts.values())?;
            let ok = sum == c.f && parts.iter().all(|(d, p)| p.is_homogeneous(*d));
            Ok(verdict(ok, || json!({"law": c.f.to_json()})))
        }),
        tally("linear maps round trip", &cases, |c| {
            let back = PolyLaw::of_linear_map(&c.map).to_linear_map()?;
            let rejects = c.mixed.max_degree() <= 1 || c.mixed.to_linear_map().is_err();
            Ok(verdict(back == c.map && rejects, || json!({"map": c.map.to_json()})))
        }),
    ];
    Ok(SuiteReport { suite: "law structure".into(), seed, samples, checks })
}

/// Both constructions of `D^n f`, vanishing above the degree, the Taylor
/// sum and linearity of `D^1 f` in the second argument.
pub fn law_differential_suite(seed: u64, samples: usize) -> Result<SuiteReport> {
    let mut rng = sampling::rng(seed);
    struct Case {
        f: PolyLaw,
        z: Vec<Value>,
        z2: Vec<Value>,
        z3: Vec<Value>,
    }
    let cases: Vec<Case> = (0..samples)
        .map(|_| {
            let f = random_law(&mut rng, 2, 0..=4);
            let (ring, r) = (f.ring().clone(), f.source().rank());
            let z = random_point(&ring, r, &mut rng);
            let z2 = random_point(&ring, r, &mut rng);
            let z3 = random_point(&ring, r, &mut rng);
            Case { f, z, z2, z3 }
        })
        .collect();
    let checks = vec![
        tally("structural and extracted differentials agree", &cases, |c| {
            for n in 0..=c.f.max_degree() + 1 {
                let a = c.f.divided_differential(n)?;
                let b = c.f.divided_differential_extracted(n)?;
                if a != b {
                    return Ok(Some(json!({"law": c.f.to_json(), "n": n, "structural": a.to_json(), "extracted": b.to_json()})));
                }
            }
            Ok(None)
        }),
        tally("differentials vanish above the degree", &cases, |c| {
            let homogeneous = c.f.component(c.f.max_degree());
            let p = c.f.max_degree();
            let ok = (p + 1..=p + 2).all(|n| homogeneous.divided_differential(n).map(|d| d.is_zero()).unwrap_or(false));
            Ok(verdict(ok, || json!({"law": homogeneous.to_json()})))
        }),
        tally("Taylor sum", &cases, |c| {
            let ring = c.f.ring();
            Ok(verdict(c.f.taylor_sum_check(ring, &c.z, &c.z2)?, || {
                json!({"law": c.f.to_json(), "z": values_json(ring, &c.z), "z'": values_json(ring, &c.z2)})
            }))
        }),
        tally("second-factor degree equals n", &cases, |c| {
            let r = c.f.source().rank();
            for n in 0..=c.f.max_degree() {
                let d = c.f.divided_differential(n)?;
                if d.coeffs().any(|(k, _)| k.exps()[r..].iter().sum::<u32>() != n) {
                    return Ok(Some(json!({"law": c.f.to_json(), "n": n})));
                }
            }
            Ok(None)
        }),
        tally("first differential is additive in the second argument", &cases, |c| {
            let ring = c.f.ring();
            let d1 = c.f.divided_differential(1)?;
            let at = |w: &[Value]| -> Result<Vec<Value>> {
                let both: Vec<Value> = c.z.iter().chain(w).cloned().collect();
                d1.eval_at(ring, &both)
            };
            let sum: Vec<Value> = c.z2.iter().zip(&c.z3).map(|(a, b)| ring.add(a, b)).collect();
            let lhs = at(&sum)?;
            let rhs: Vec<Value> = at(&c.z2)?.iter().zip(at(&c.z3)?).map(|(a, b)| ring.add(a, &b)).collect();
            Ok(verdict(lhs == rhs, || json!({"law": c.f.to_json()})))
        }),
    ];
    Ok(SuiteReport { suite: "law differentials".into(), seed, samples, checks })
}

/// `f = φ ∘ δ_d` over `R` and `R[t]`, uniqueness of `φ`, and naturality
/// under substitution homomorphisms.
pub fn law_factor_suite(seed: u64, samples: usize) -> Result<SuiteReport> {
    let mut rng = sampling::rng(seed);
    struct Case {
        f: PolyLaw,
        d: u32,
        m: Vec<Value>,
        algebra: Ring,
        mt: Vec<Value>,
    }
    let cases: Vec<Case> = (0..samples)
        .map(|_| {
            let d = rng.gen_range(0..=4);
            let f = random_law(&mut rng, 3, d..=d);
            let ring = f.ring().clone();
            let m = random_point(&ring, f.source().rank(), &mut rng);
            let algebra = RingDescriptor::poly(&ring, &["t"]).expect("valid ring");
            let mt = random_point(&algebra, f.source().rank(), &mut rng);
            Case { f, d, m, algebra, mt }
        })
        .collect();
    let reconstruct = |c: &Case, algebra: &Ring, m: &[Value]| -> Result<bool> {
        let phi = c.f.factor_homogeneous(c.d)?;
        let spec = c.f.source().with_ring(algebra);
        let x = ModuleVector::new(&spec, m.iter().map(|v| Scalar::new(algebra, v.clone())).collect::<Result<_>>()?)?;
        let coords = grade_slice_coords(&dp_generator(c.d, &x), c.d)?;
        Ok(phi.apply_extended(algebra, coords.values())? == c.f.eval_at(algebra, m)?)
    };
    let checks = vec![
        tally("reconstruction over R", &cases, |c| {
            Ok(verdict(reconstruct(c, c.f.ring(), &c.m)?, || json!({"law": c.f.to_json(), "d": c.d})))
        }),
        tally("reconstruction over R[t]", &cases, |c| {
            Ok(verdict(reconstruct(c, &c.algebra, &c.mt)?, || json!({"law": c.f.to_json(), "d": c.d})))
        }),
        tally("factorization is unique on monomials", &cases, |c| {
            // ψ(b^[k]) is forced to be the T^k coefficient of f(sum T_i b_i)
            let phi = c.f.factor_homogeneous(c.d)?;
            let family: Vec<ModuleVector> = (0..c.f.source().rank()).map(|i| ModuleVector::basis_vector(c.f.source(), i)).collect();
            let forced = c.f.coeff_of(&family)?;
            let ok = crate::multiindex::weak_compositions(c.d, c.f.source().rank()).enumerate().all(|(j, e)| {
                let k = MultiIndex::from_dense(forced.source().basis(), e).expect("rank matches");
                forced.coeff(&k) == *phi.column(j)
            });
            Ok(verdict(ok, || json!({"law": c.f.to_json(), "d": c.d})))
        }),
    ];

    let z = RingDescriptor::integers();
    let algebras: Vec<Ring> = ["Z", "Z[X]", "Z[X,Y]"].iter().map(|r| RingDescriptor::parse(r).expect("valid ring")).collect();
    let compat_cases: Vec<(PolyLaw, Substitution, Vec<Value>)> = (0..samples)
        .map(|_| {
            let source = FreeModuleSpec::standard(&z, rng.gen_range(1..=3)).expect("positive rank");
            let target = FreeModuleSpec::new(&z, &BasisLabels::numbered("n", 2)).expect("positive rank");
            let f = PolyLaw::new(&source, &target, random_law_terms(&source, &target, 0..=4, &mut rng)).expect("terms fit");
            let from = algebras[rng.gen_range(0..algebras.len())].clone();
            let to = algebras[rng.gen_range(0..algebras.len())].clone();
            let images = from.vars().iter().map(|_| random_scalar(&to, &mut rng)).collect();
            let phi = Substitution::new(&from, &to, images).expect("images in target");
            let m = random_point(&from, source.rank(), &mut rng);
            (f, phi, m)
        })
        .collect();
    let mut checks = checks;
    checks.push(tally("naturality under substitutions", &compat_cases, |(f, phi, m)| {
        Ok(verdict(compat_check(f, phi, m)?, || {
            json!({"law": f.to_json(), "from": phi.source().to_string(), "to": phi.target().to_string()})
        }))
    }));
    Ok(SuiteReport { suite: "law factorization".into(), seed, samples, checks })
}
