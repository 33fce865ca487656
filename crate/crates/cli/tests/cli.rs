use std::collections::HashSet;
use std::process::Command;

use gamma_forge::dpaxioms::Mutation;
use gamma_forge::polylaw::PolyLaw;
use gamma_forge::sampling::{self, random_gamma, random_law_terms, random_scalar, random_vector};
use gamma_forge::{Error, FreeModuleSpec, GammaElement, LinearMap, ModuleVector, RingDescriptor, Scalar};
use gamma_forge_cli::{run, CliError, EXIT_INPUT_ERROR, EXIT_OK, EXIT_PROPERTY_FAILED, IO_KIND, USAGE_KIND};
use rand::Rng;
use serde_json::{json, Value as Json};

fn cli(args: &[&str]) -> (u8, Json) {
    let out = run(std::iter::once("gamma-forge").chain(args.iter().copied()));
    let doc = serde_json::from_str(&out.output).unwrap_or_else(|e| panic!("not JSON ({e}): {}", out.output));
    (out.code, doc)
}

fn b1(n: u32, coeff: i64) -> Json {
    json!({"ring": "Z", "basis": ["b1"], "terms": [{"exps": {"b1": n}, "coeff": coeff.to_string()}]})
}

#[test]
fn gamma_n_of_a_generator() {
    let (code, doc) = cli(&["gamma-n", "--n", "2", "--json", &b1(1, 1).to_string()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(doc, b1(2, 1));
}

#[test]
fn gamma_n_outside_the_ideal() {
    let a = json!({"ring": "Z", "basis": ["b1"], "terms": [{"exps": {}, "coeff": "1"}, {"exps": {"b1": 1}, "coeff": "1"}]});
    let (code, doc) = cli(&["gamma-n", "--n", "1", "--json", &a.to_string()]);
    assert_eq!(code, EXIT_INPUT_ERROR);
    assert_eq!(doc["error"]["kind"], "NotInAugmentationIdeal");
}

#[test]
fn budget_is_enforced() {
    let (code, doc) = cli(&["gamma-n", "--n", "3", "--budget", "2", "--json", &b1(1, 1).to_string()]);
    assert_eq!(code, EXIT_OK, "{doc}");
    let two = json!({"ring": "Z", "basis": ["b1", "b2"], "terms": [
        {"exps": {"b1": 1}, "coeff": "1"}, {"exps": {"b2": 1}, "coeff": "1"}]});
    let (code, doc) = cli(&["gamma-n", "--n", "3", "--budget", "2", "--json", &two.to_string()]);
    assert_eq!(code, EXIT_INPUT_ERROR);
    assert_eq!(doc["error"]["kind"], "BudgetExceeded");
}

#[test]
fn computation_subcommands() {
    let (code, doc) = cli(&["gamma-mul", "--json", &json!({"a": b1(1, 1), "b": b1(1, 1)}).to_string()]);
    assert_eq!((code, doc), (EXIT_OK, b1(2, 2)));

    let x = json!({"ring": "Z", "basis": ["b1"], "coords": {"b1": "3"}});
    let (code, doc) = cli(&["gamma-dp", "--n", "2", "--json", &x.to_string()]);
    assert_eq!((code, doc), (EXIT_OK, b1(2, 9)));

    let map = json!({"source": {"ring": "Z", "basis": ["b1"]}, "target": {"ring": "Z", "basis": ["b1"]}, "columns": {"b1": {"b1": "2"}}});
    let (code, doc) = cli(&["gamma-map", "--json", &json!({"map": map, "element": b1(3, 1)}).to_string()]);
    assert_eq!((code, doc), (EXIT_OK, b1(3, 8)));

    let two = json!({"ring": "Z", "basis": ["b1", "b2"], "terms": [
        {"exps": {"b1": 1}, "coeff": "1"}, {"exps": {"b1": 1, "b2": 1}, "coeff": "1"}]});
    let (code, doc) = cli(&["gamma-quotient", "--json", &json!({"drop": ["b2"], "element": two}).to_string()]);
    assert_eq!((code, doc), (EXIT_OK, b1(1, 1)));
}

fn square_law() -> Json {
    json!({"source": {"ring": "Z", "basis": ["b1"]}, "target": {"ring": "Z", "basis": ["n1"]},
           "coeffs": [{"exps": {"b1": 2}, "vector": {"n1": "1"}}]})
}

#[test]
fn law_subcommands() {
    let (code, doc) = cli(&["law-eval", "--json", &json!({"law": square_law(), "algebra": "Z[X]", "point": [[{"exps": {"X": 1}, "coeff": "1"}]]}).to_string()]);
    assert_eq!(code, EXIT_OK, "{doc}");
    assert_eq!(doc["value"]["n1"], json!([{"exps": {"X": 2}, "coeff": "1"}]));

    let (code, doc) = cli(&["law-coeff", "--json", &json!({"law": square_law(), "family": [{"b1": "2"}]}).to_string()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(doc["coeffs"], json!([{"exps": {"T1": 2}, "vector": {"n1": "4"}}]));

    let (code, doc) = cli(&["law-component", "--degree", "1", "--json", &json!({"law": square_law()}).to_string()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(doc["coeffs"], json!([]));

    let (code, doc) = cli(&["law-diff", "--n", "1", "--json", &json!({"law": square_law()}).to_string()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(doc["agree"], true);
    assert_eq!(doc["structural"]["coeffs"], json!([{"exps": {"b1.1": 1, "b1.2": 1}, "vector": {"n1": "2"}}]));

    let (code, doc) = cli(&["law-factor", "--degree", "2", "--json", &json!({"law": square_law()}).to_string()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(doc["columns"], json!({"b1^[2]": {"n1": "1"}}));

    let (code, doc) = cli(&["law-factor", "--degree", "1", "--json", &json!({"law": square_law()}).to_string()]);
    assert_eq!(code, EXIT_INPUT_ERROR);
    assert_eq!(doc["error"]["kind"], "NotHomogeneous");

    let bad = json!({"law": square_law(), "partition": [["b1"], ["b1"]], "degrees": [1, 1]});
    let (code, doc) = cli(&["law-component", "--json", &bad.to_string()]);
    assert_eq!(code, EXIT_INPUT_ERROR);
    assert_eq!(doc["error"]["kind"], "PartitionInvalid");
}

#[test]
fn suites_pass_and_report() {
    let (code, doc) = cli(&["axioms-check", "--ring", "Z", "--rank", "2", "--samples", "50"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(doc["axioms"].as_array().unwrap().len(), 7);
    for args in [
        vec!["axioms-check", "--ring", "Q[X,Y]", "--structure", "rational", "--generators", "X,Y", "--samples", "40"],
        vec!["axioms-check", "--ring", "Z", "--rank", "3", "--drop", "b3", "--samples", "40"],
        vec!["axioms-check", "--ring", "Z", "--rank", "2", "--structure", "oracle", "--samples", "40"],
        vec!["oracle-check", "--samples", "40"],
        vec!["basechange-verify", "--ext", "Q->Q[X,Y]", "--samples", "30"],
        vec!["reduction-check", "--moduli", "4,6,9", "--samples", "30"],
    ] {
        let (code, doc) = cli(&args);
        assert_eq!(code, EXIT_OK, "{args:?}: {doc}");
    }
}

#[test]
fn property_failure_exits_one_with_report() {
    for m in Mutation::ALL {
        let (code, doc) = cli(&["axioms-check", "--mutation", m.name()]);
        assert_eq!(code, EXIT_PROPERTY_FAILED, "{m:?}");
        let target = doc["axioms"].as_array().unwrap().iter().find(|a| a["axiom"] == m.target().roman()).unwrap();
        assert!(target["fail"].as_u64().unwrap() > 0);
        assert!(!target["counterexample"].is_null());
    }
}

#[test]
fn input_errors_exit_two() {
    for (args, kind) in [
        (vec!["bogus"], USAGE_KIND),
        (vec!["axioms-check", "--max-n", "1"], USAGE_KIND),
        (vec!["axioms-check", "--samples", "0"], USAGE_KIND),
        (vec!["gamma-n", "--n", "1"], USAGE_KIND),
        (vec!["gamma-n", "--n", "1", "--json", "{not json"], "Parse"),
        (vec!["gamma-n", "--n", "1", "--input", "/nonexistent/input.json"], IO_KIND),
        (vec!["axioms-check", "--ring", "Z/1"], "ModulusInvalid"),
        (vec!["axioms-check", "--ring", "Z", "--structure", "rational"], "NotRationalAlgebra"),
        (vec!["basechange-verify", "--ext", "Q->Z"], "ExtensionMismatch"),
        (vec!["axioms-check", "--mutation", "nope"], "InvalidArgument"),
    ] {
        let (code, doc) = cli(&args);
        assert_eq!(code, EXIT_INPUT_ERROR, "{args:?}");
        assert_eq!(doc["error"]["kind"], kind, "{args:?}: {doc}");
        assert!(doc["error"]["detail"].is_string());
    }
    let mixed = json!({"a": b1(1, 1), "b": {"ring": "Q", "basis": ["b1"], "terms": []}});
    let (code, doc) = cli(&["gamma-mul", "--json", &mixed.to_string()]);
    assert_eq!(code, EXIT_INPUT_ERROR);
    assert_eq!(doc["error"]["kind"], "SpecMismatch");
}

/// One value per library error variant; the match has no wildcard, so a new
/// variant fails to compile until it is listed here.
fn witnesses() -> Vec<Error> {
    let all = vec![
        Error::RingMismatch { left: "Z".into(), right: "Q".into() },
        Error::ModulusInvalid(1),
        Error::InvalidRing("?".into()),
        Error::NotIntegral("1/2".into()),
        Error::NotPrime(4),
        Error::UnsupportedRing("Z/6".into()),
        Error::InvalidBasis("".into()),
        Error::BasisMismatch,
        Error::EmptyIndex,
        Error::SpecMismatch("".into()),
        Error::NotInAugmentationIdeal,
        Error::EmptyQuotientBasis,
        Error::NotDegreeOne,
        Error::ImageNotInIdeal("b1".into()),
        Error::BudgetExceeded { needed: 2, budget: 1 },
        Error::NotRationalAlgebra("Z".into()),
        Error::UnsupportedIdeal("".into()),
        Error::KernelNotStable("".into()),
        Error::AlgebraMismatch("".into()),
        Error::PartitionInvalid("".into()),
        Error::NotHomogeneous(1),
        Error::ExtensionMismatch("".into()),
        Error::Parse("".into()),
        Error::InvalidArgument("".into()),
    ];
    for e in &all {
        match e {
            Error::RingMismatch { .. }
            | Error::ModulusInvalid(_)
            | Error::InvalidRing(_)
            | Error::NotIntegral(_)
            | Error::NotPrime(_)
            | Error::UnsupportedRing(_)
            | Error::InvalidBasis(_)
            | Error::BasisMismatch
            | Error::EmptyIndex
            | Error::SpecMismatch(_)
            | Error::NotInAugmentationIdeal
            | Error::EmptyQuotientBasis
            | Error::NotDegreeOne
            | Error::ImageNotInIdeal(_)
            | Error::BudgetExceeded { .. }
            | Error::NotRationalAlgebra(_)
            | Error::UnsupportedIdeal(_)
            | Error::KernelNotStable(_)
            | Error::AlgebraMismatch(_)
            | Error::PartitionInvalid(_)
            | Error::NotHomogeneous(_)
            | Error::ExtensionMismatch(_)
            | Error::Parse(_)
            | Error::InvalidArgument(_) => {}
        }
    }
    all
}

#[test]
fn error_kinds_are_distinct() {
    let mut kinds = HashSet::new();
    for e in witnesses() {
        let kind = CliError::Lib(e.clone()).kind();
        assert_eq!(kind, e.kind());
        assert!(kinds.insert(kind), "kind {kind} used twice");
    }
    assert!(kinds.insert(USAGE_KIND));
    assert!(kinds.insert(IO_KIND));
}

#[test]
fn output_is_deterministic() {
    let args = ["axioms-check", "--ring", "Z/6", "--rank", "3", "--samples", "60"];
    let first = run(std::iter::once("gamma-forge").chain(args));
    let second = run(std::iter::once("gamma-forge").chain(args));
    let one_job = run(std::iter::once("gamma-forge").chain(args).chain(["--jobs", "1"]));
    let four_jobs = run(std::iter::once("gamma-forge").chain(args).chain(["--jobs", "4"]));
    assert_eq!(first.output, second.output);
    assert_eq!(first.output, one_job.output);
    assert_eq!(first.output, four_jobs.output);
}

#[test]
fn binary_honors_seed_env_and_output_file() {
    let bin = env!("CARGO_BIN_EXE_gamma-forge");
    let run_with = |seed: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(bin);
        c.args(["reduction-check", "--samples", "5"]).args(extra).env_remove("GAMMA_FORGE_SEED");
        if let Some(s) = seed {
            c.env("GAMMA_FORGE_SEED", s);
        }
        c.output().unwrap()
    };
    let default = run_with(None, &[]);
    assert_eq!(default.status.code(), Some(0));
    let doc: Json = serde_json::from_slice(&default.stdout).unwrap();
    assert_eq!(doc["seed"], 0xD171DED);
    let env = run_with(Some("12345"), &[]);
    assert_eq!(serde_json::from_slice::<Json>(&env.stdout).unwrap()["seed"], 12345);
    let flag = run_with(Some("12345"), &["--seed", "0x10"]);
    assert_eq!(serde_json::from_slice::<Json>(&flag.stdout).unwrap()["seed"], 16);

    let path = std::env::temp_dir().join(format!("gamma-forge-cli-test-{}.json", std::process::id()));
    let out = run_with(None, &["--output", path.to_str().unwrap(), "--pretty"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(serde_json::from_str::<Json>(&written).unwrap(), doc);
    assert!(written.contains("\n  "));
}

fn reparse(j: &Json) -> Json {
    serde_json::from_str(&serde_json::to_string(j).unwrap()).unwrap()
}

#[test]
fn json_round_trip_of_random_values() {
    let rings: Vec<_> = ["Z", "Q", "Z/6", "Z/7", "Z[X,Y]", "Q[t]"].iter().map(|r| RingDescriptor::parse(r).unwrap()).collect();
    let mut rng = sampling::rng(500);
    for i in 0..500 {
        let ring = &rings[rng.gen_range(0..rings.len())];
        let rank = rng.gen_range(1..=3);
        let spec = FreeModuleSpec::standard(ring, rank).unwrap();
        match i % 5 {
            0 => {
                let s = Scalar::new(ring, random_scalar(ring, &mut rng)).unwrap();
                assert_eq!(Scalar::from_json(ring, &reparse(&s.to_json())).unwrap(), s);
            }
            1 => {
                let v = random_vector(&spec, &mut rng);
                assert_eq!(ModuleVector::from_json(&reparse(&v.to_json())).unwrap(), v);
            }
            2 => {
                let a = random_gamma(&spec, false, &mut rng);
                assert_eq!(GammaElement::from_json(&reparse(&a.to_json())).unwrap(), a);
            }
            3 => {
                let target = FreeModuleSpec::standard(ring, rng.gen_range(1..=2)).unwrap();
                let f = PolyLaw::new(&spec, &target, random_law_terms(&spec, &target, 0..=3, &mut rng)).unwrap();
                assert_eq!(PolyLaw::from_json(&reparse(&f.to_json())).unwrap(), f);
            }
            _ => {
                let target = FreeModuleSpec::standard(ring, rng.gen_range(1..=2)).unwrap();
                let cols = (0..rank).map(|_| random_vector(&target, &mut rng)).collect();
                let map = LinearMap::new(&spec, &target, cols).unwrap();
                assert_eq!(LinearMap::from_json(&reparse(&map.to_json())).unwrap(), map);
            }
        }
    }
}
