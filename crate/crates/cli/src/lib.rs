//! Batch front end: every subcommand reads one JSON document (or only
//! flags), writes one JSON document, and exits with 0 (success), 1 (a
//! verification property failed; the report is still written) or 2 (bad
//! input, reported as `{"error": {"kind": ..., "detail": ...}}`).

use std::fs;

use clap::{Args, Parser, Subcommand};
use gamma_forge::basechange::Extension;
use gamma_forge::checks::{base_change_suite, oracle_suite, reduction_suite};
use gamma_forge::dpaxioms::{
    check_axioms, quotient_dp, rational_canonical, Corrupted, GammaAugmentation, Mutation, OracleDp,
};
use gamma_forge::gamma::{dp_generator, map_linear, quotient_by_basis_span};
use gamma_forge::polylaw::PolyLaw;
use gamma_forge::sampling::DEFAULT_SEED;
use gamma_forge::{Error, FreeModuleSpec, GammaElement, LinearMap, ModuleVector, RingDescriptor, Scalar};
use serde_json::{json, Value as Json};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PROPERTY_FAILED: u8 = 1;
pub const EXIT_INPUT_ERROR: u8 = 2;

/// Error kinds the front end reports on top of the library's own.
pub const USAGE_KIND: &str = "Usage";
pub const IO_KIND: &str = "Io";

#[derive(Debug, Parser)]
#[command(name = "gamma-forge", version, about = "Exact divided power algebras and polynomial laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Read the input document from this file.
    #[arg(long, global = true, conflicts_with = "json")]
    pub input: Option<String>,
    /// Inline input document.
    #[arg(long, global = true)]
    pub json: Option<String>,
    /// Seed of every randomized suite (decimal or 0x-prefixed hex).
    #[arg(long, global = true, env = "GAMMA_FORGE_SEED", value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long = "max-n", global = true, default_value_t = 4, value_parser = clap::value_parser!(u32).range(2..))]
    pub max_n: u32,
    /// Maximal number of weak compositions enumerated by one `γ_n`.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub budget: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<String>,
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Worker threads for the suites (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Product of {"a": element, "b": element}.
    GammaMul,
    /// The divided power x^[n] of a module vector.
    GammaDp {
        #[arg(long)]
        n: u32,
    },
    /// γ_n of an element of the augmentation ideal.
    GammaN {
        #[arg(long)]
        n: u32,
    },
    /// Γ(f) applied to {"map": linear map, "element": element}.
    GammaMap,
    /// Image of {"drop": [labels], "element": element} in Γ(M / span(drop)).
    GammaQuotient,
    /// Randomized check of the seven divided power axioms.
    AxiomsCheck {
        #[arg(long, default_value = "Z")]
        ring: String,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        /// gamma, oracle or rational.
        #[arg(long, default_value = "gamma")]
        structure: String,
        /// Basis labels dropped before checking the induced structure.
        #[arg(long, value_delimiter = ',')]
        drop: Vec<String>,
        /// Monomial generators of the ideal for the rational structure.
        #[arg(long, value_delimiter = ',')]
        generators: Vec<String>,
        /// Check a deliberately corrupted structure instead, e.g.
        /// doubled-second; the targeted axiom should fail.
        #[arg(long)]
        mutation: Option<String>,
    },
    /// Closed-form γ_n against the fraction-field oracle.
    OracleCheck {
        #[arg(long, default_value_t = 3)]
        rank: usize,
    },
    /// Evaluate {"law", "algebra", "point": [scalars]}.
    LawEval,
    /// Coefficients of {"law", "family": [coordinate objects]}.
    LawCoeff,
    /// Homogeneous ({"law"} with --degree), all, or multihomogeneous
    /// ({"law", "partition", "degrees"}) components.
    LawComponent {
        #[arg(long)]
        degree: Option<u32>,
    },
    /// D^n of {"law"} by both constructions.
    LawDiff {
        #[arg(long)]
        n: u32,
    },
    /// The linear map φ with law = φ ∘ δ_d.
    LawFactor {
        #[arg(long)]
        degree: u32,
    },
    /// Base change suite for an extension such as Z->Q.
    BasechangeVerify {
        #[arg(long, default_value = "Z->Q")]
        ext: String,
        #[arg(long, default_value_t = 2)]
        rank: usize,
    },
    /// Reduction squares γ_m mod n over Z.
    ReductionCheck {
        #[arg(long, value_delimiter = ',', default_value = "4,6,9")]
        moduli: Vec<u64>,
        #[arg(long, default_value_t = 2)]
        rank: usize,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("invalid seed {s:?}: {e}"))
}

/// A failure of the front end: a library error or a usage/IO problem.
#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Usage(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.kind(),
            CliError::Usage(_) => USAGE_KIND,
            CliError::Io(_) => IO_KIND,
        }
    }

    pub fn detail(&self) -> String {
        match self {
            CliError::Lib(e) => e.to_string(),
            CliError::Usage(s) | CliError::Io(s) => s.clone(),
        }
    }

    pub fn to_json(&self) -> Json {
        json!({"error": {"kind": self.kind(), "detail": self.detail()}})
    }
}

/// The outcome of one invocation: exit code and the document to print.
pub struct Outcome {
    pub code: u8,
    pub output: String,
}

/// Runs the command line `argv` (including the program name). Nothing is
/// printed; `--output` is honored.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome { code: EXIT_OK, output: e.to_string() };
            }
            return Outcome { code: EXIT_INPUT_ERROR, output: render(&CliError::Usage(e.to_string()).to_json(), false) };
        }
    };
    let pretty = cli.common.pretty;
    let (code, doc) = match execute(&cli) {
        Ok((pass, doc)) => (if pass { EXIT_OK } else { EXIT_PROPERTY_FAILED }, doc),
        Err(e) => (EXIT_INPUT_ERROR, e.to_json()),
    };
    let output = render(&doc, pretty);
    if let Some(path) = &cli.common.output {
        if let Err(e) = fs::write(path, &output) {
            let err = CliError::Io(format!("cannot write {path}: {e}"));
            return Outcome { code: EXIT_INPUT_ERROR, output: render(&err.to_json(), pretty) };
        }
        return Outcome { code, output: String::new() };
    }
    Outcome { code, output }
}

fn render(doc: &Json, pretty: bool) -> String {
    let mut s = if pretty {
        serde_json::to_string_pretty(doc).expect("json renders")
    } else {
        serde_json::to_string(doc).expect("json renders")
    };
    s.push('\n');
    s
}

fn execute(cli: &Cli) -> Result<(bool, Json), CliError> {
    match cli.common.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs as usize)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn input(common: &Common) -> Result<Json, CliError> {
    let text = match (&common.input, &common.json) {
        (Some(path), _) => fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?,
        (None, Some(inline)) => inline.clone(),
        (None, None) => return Err(CliError::Usage("this subcommand needs --input or --json".into())),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Lib(Error::Parse(format!("invalid JSON: {e}"))))
}

fn field<'a>(doc: &'a Json, name: &str) -> Result<&'a Json, CliError> {
    doc.get(name).ok_or_else(|| CliError::Lib(Error::Parse(format!("missing field {name:?}"))))
}

fn dispatch(cli: &Cli) -> Result<(bool, Json), CliError> {
    let c = &cli.common;
    let samples = c.samples as usize;
    match &cli.command {
        Command::GammaMul => {
            let doc = input(c)?;
            let a = GammaElement::from_json(field(&doc, "a")?)?;
            let b = GammaElement::from_json(field(&doc, "b")?)?;
            Ok((true, a.mul(&b)?.to_json()))
        }
        Command::GammaDp { n } => {
            let x = ModuleVector::from_json(&input(c)?)?;
            Ok((true, dp_generator(*n, &x).to_json()))
        }
        Command::GammaN { n } => {
            let a = GammaElement::from_json(&input(c)?)?;
            Ok((true, a.gamma_n_with_budget(*n, c.budget)?.to_json()))
        }
        Command::GammaMap => {
            let doc = input(c)?;
            let f = LinearMap::from_json(field(&doc, "map")?)?;
            let a = GammaElement::from_json(field(&doc, "element")?)?;
            Ok((true, map_linear(&f, &a)?.to_json()))
        }
        Command::GammaQuotient => {
            let doc = input(c)?;
            let drop = labels(field(&doc, "drop")?)?;
            let a = GammaElement::from_json(field(&doc, "element")?)?;
            Ok((true, quotient_by_basis_span(&drop, &a)?.to_json()))
        }
        Command::AxiomsCheck { ring, rank, structure, drop, generators, mutation } => {
            let ring = RingDescriptor::parse(ring)?;
            if let Some(name) = mutation {
                let m = Mutation::parse(name)?;
                let spec = FreeModuleSpec::standard(&ring, *rank)?;
                let dp = Corrupted::new(GammaAugmentation::with_budget(&spec, c.budget), m);
                let report = check_axioms(&dp, c.seed, samples, c.max_n)?;
                return Ok((report.all_pass(), report.to_json()));
            }
            let report = match structure.as_str() {
                "gamma" => {
                    let spec = FreeModuleSpec::standard(&ring, *rank)?;
                    let dp = GammaAugmentation::with_budget(&spec, c.budget);
                    if drop.is_empty() {
                        check_axioms(&dp, c.seed, samples, c.max_n)?
                    } else {
                        check_axioms(&quotient_dp(dp, &spec, drop)?, c.seed, samples, c.max_n)?
                    }
                }
                "oracle" => {
                    let spec = FreeModuleSpec::standard(&ring, *rank)?;
                    check_axioms(&OracleDp::new(&spec)?, c.seed, samples, c.max_n)?
                }
                "rational" => {
                    let gens = generators
                        .iter()
                        .map(|g| Scalar::var(&ring, g))
                        .collect::<gamma_forge::Result<Vec<_>>>()?;
                    check_axioms(&rational_canonical(&ring, &gens)?, c.seed, samples, c.max_n)?
                }
                other => {
                    return Err(CliError::Usage(format!("unknown structure {other:?}: use gamma, oracle or rational")))
                }
            };
            Ok((report.all_pass(), report.to_json()))
        }
        Command::OracleCheck { rank } => {
            if *rank == 0 {
                return Err(CliError::Lib(Error::InvalidArgument("rank must be positive".into())));
            }
            let report = oracle_suite(c.seed, samples, *rank, c.max_n)?;
            Ok((report.all_pass(), report.to_json()))
        }
        Command::LawEval => {
            let doc = input(c)?;
            let law = PolyLaw::from_json(field(&doc, "law")?)?;
            let algebra = match doc.get("algebra") {
                Some(a) => RingDescriptor::parse(a.as_str().ok_or_else(|| Error::Parse("\"algebra\" must be a string".into()))?)?,
                None => law.ring().clone(),
            };
            let point = field(&doc, "point")?
                .as_array()
                .ok_or_else(|| Error::Parse("\"point\" must be an array".into()))?
                .iter()
                .map(|v| algebra.value_from_json(v))
                .collect::<gamma_forge::Result<Vec<_>>>()?;
            let value = law.eval_at(&algebra, &point)?;
            let labels = law.target().basis().labels();
            let coords: serde_json::Map<String, Json> =
                labels.iter().zip(&value).map(|(l, v)| (l.clone(), algebra.value_to_json(v))).collect();
            Ok((true, json!({"algebra": algebra.to_string(), "value": coords})))
        }
        Command::LawCoeff => {
            let doc = input(c)?;
            let law = PolyLaw::from_json(field(&doc, "law")?)?;
            let family = field(&doc, "family")?
                .as_array()
                .ok_or_else(|| Error::Parse("\"family\" must be an array".into()))?
                .iter()
                .map(|v| ModuleVector::coords_from_json(law.source(), v))
                .collect::<gamma_forge::Result<Vec<_>>>()?;
            Ok((true, law.coeff_of(&family)?.to_json()))
        }
        Command::LawComponent { degree } => {
            let doc = input(c)?;
            let law = PolyLaw::from_json(field(&doc, "law")?)?;
            if let Some(partition) = doc.get("partition") {
                let parts = partition
                    .as_array()
                    .ok_or_else(|| Error::Parse("\"partition\" must be an array".into()))?
                    .iter()
                    .map(labels)
                    .collect::<Result<Vec<_>, _>>()?;
                let degrees = field(&doc, "degrees")?
                    .as_array()
                    .ok_or_else(|| Error::Parse("\"degrees\" must be an array".into()))?
                    .iter()
                    .map(|d| d.as_u64().and_then(|d| u32::try_from(d).ok()).ok_or_else(|| Error::Parse(format!("bad degree {d}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                return Ok((true, law.multi_component(&parts, &degrees)?.to_json()));
            }
            match degree {
                Some(d) => Ok((true, law.component(*d).to_json())),
                None => {
                    let all: serde_json::Map<String, Json> =
                        law.components().iter().map(|(d, f)| (d.to_string(), f.to_json())).collect();
                    Ok((true, Json::Object(all)))
                }
            }
        }
        Command::LawDiff { n } => {
            let doc = input(c)?;
            let law = PolyLaw::from_json(field(&doc, "law")?)?;
            let structural = law.divided_differential(*n)?;
            let extracted = law.divided_differential_extracted(*n)?;
            let agree = structural == extracted;
            Ok((agree, json!({"n": n, "agree": agree, "structural": structural.to_json(), "extracted": extracted.to_json()})))
        }
        Command::LawFactor { degree } => {
            let doc = input(c)?;
            let law = PolyLaw::from_json(field(&doc, "law")?)?;
            Ok((true, law.factor_homogeneous(*degree)?.to_json()))
        }
        Command::BasechangeVerify { ext, rank } => {
            let ext = Extension::parse(ext)?;
            let report = base_change_suite(&ext, *rank, c.seed, samples)?;
            Ok((report.all_pass(), report.to_json()))
        }
        Command::ReductionCheck { moduli, rank } => {
            let report = reduction_suite(moduli, *rank, c.seed, samples, c.max_n)?;
            Ok((report.all_pass(), report.to_json()))
        }
    }
}

fn labels(j: &Json) -> Result<Vec<String>, CliError> {
    j.as_array()
        .and_then(|a| a.iter().map(|l| l.as_str().map(str::to_string)).collect::<Option<Vec<_>>>())
        .ok_or_else(|| CliError::Lib(Error::Parse("expected an array of labels".into())))
}
