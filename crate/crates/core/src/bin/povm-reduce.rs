use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use povm_reduce::divergence::{divergence_between_states, FGenerator};
use povm_reduce::generators::{random_density, random_instrument, random_markov, random_povm, random_split};
use povm_reduce::instrument::{check_conservation, compose, KrausInstrument, DEFAULT_EXHAUSTIVE_LIMIT};
use povm_reduce::order::{equivalent, preceq, EquivalenceMethod};
use povm_reduce::povm::{tomographic_ensemble, DensityMatrix, DiscretePovm};
use povm_reduce::reduction::{reduce, reduce_via_lsb};
use povm_reduce::selftest::{self, SelftestConfig};
use povm_reduce::{fixtures, Error, Tolerances};

const EXIT_HOLDS: u8 = 0;
const EXIT_FAILS: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_AMBIGUOUS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "povm-reduce",
    version,
    about = "Minimal sufficient reduction and fuzzy ordering of discrete POVMs"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_psd: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_comp: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_prop: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_lsb: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_lp: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_iso: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_zero: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

impl GlobalOpts {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            psd: self.tol_psd,
            comp: self.tol_comp,
            prop: self.tol_prop,
            lsb: self.tol_lsb,
            lp: self.tol_lp,
            iso: self.tol_iso,
            zero: self.tol_zero,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Lp,
    Reduce,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Povm,
    State,
    Markov,
    Instrument,
    Split,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a POVM, state or instrument file.
    Validate { path: PathBuf },
    /// Minimal sufficient reduction of a POVM.
    Reduce {
        path: PathBuf,
        /// Group by likelihood-ratio vectors over the tomographic ensemble.
        #[arg(long)]
        lsb: bool,
    },
    /// Decide whether A is a post-processing of B.
    Order { a: PathBuf, b: PathBuf },
    /// Decide fuzzy equivalence of two POVMs.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Reduce)]
        method: Method,
    },
    /// f-divergence between the outcome distributions of two states.
    Divergence {
        povm: PathBuf,
        rho: PathBuf,
        sigma: PathBuf,
        #[arg(long = "f", default_value = "hellinger")]
        generator: String,
    },
    /// Joint POVM of an instrument followed by a POVM.
    Compose { instrument: PathBuf, povm: PathBuf },
    /// Check the information-conservation conditions.
    Conserve {
        instrument: PathBuf,
        povm: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
        exhaustive_limit: u64,
    },
    /// Generate seeded random objects.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        outcomes: usize,
        #[arg(long, default_value_t = 2)]
        rows: usize,
        #[arg(long, default_value_t = 1)]
        kraus: usize,
        /// POVM to split (for `split`).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Tomographic state ensemble of a given dimension.
    Ensemble { dim: usize },
    /// Print a bundled fixture (or list them without a name).
    Fixture { name: Option<String> },
    /// Run the seeded property suites.
    Selftest {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        negative_control: bool,
    },
}

struct Outcome {
    code: u8,
    json: Value,
    text: String,
}

impl Outcome {
    fn new(code: u8, json: Value, text: impl Into<String>) -> Self {
        Self {
            code,
            json,
            text: text.into(),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable output")
}

fn read_input(path: &PathBuf) -> Result<String, Error> {
    let s = path.to_string_lossy();
    if let Some(name) = s.strip_prefix("fixture:") {
        return fixtures::lookup(name).ok_or_else(|| Error::Schema(format!("unknown fixture {name:?}")));
    }
    Ok(std::fs::read_to_string(path)?)
}

fn load_povm(path: &PathBuf, tol: &Tolerances) -> Result<DiscretePovm, Error> {
    DiscretePovm::from_json(&read_input(path)?, tol)
}

fn load_state(path: &PathBuf, tol: &Tolerances) -> Result<DensityMatrix, Error> {
    DensityMatrix::from_json(&read_input(path)?, tol)
}

fn load_instrument(path: &PathBuf, tol: &Tolerances) -> Result<KrausInstrument, Error> {
    KrausInstrument::from_json(&read_input(path)?, tol)
}

fn povm_text(p: &DiscretePovm) -> String {
    let mut s = format!("dim {} with {} outcomes\n", p.dim(), p.len());
    for o in p.outcomes() {
        s.push_str(&format!("  {:<12} trace {:.6}\n", o.label, o.effect.trace()));
    }
    s
}

fn validate(path: &PathBuf, tol: &Tolerances) -> Result<Outcome, Error> {
    let text = read_input(path)?;
    let value: Value = serde_json::from_str(&text)?;
    let is_instrument = value
        .get("outcomes")
        .and_then(|o| o.get(0))
        .is_some_and(|o| o.get("kraus").is_some());
    let (kind, result) = if is_instrument {
        ("instrument", KrausInstrument::from_json(&text, tol).map(|_| ()))
    } else if value.get("outcomes").is_some() {
        ("povm", DiscretePovm::from_json(&text, tol).map(|_| ()))
    } else if value.get("matrix").is_some() {
        ("state", DensityMatrix::from_json(&text, tol).map(|_| ()))
    } else {
        return Err(Error::Schema("expected a POVM, state or instrument object".into()));
    };
    match result {
        Ok(()) => Ok(Outcome::new(
            EXIT_HOLDS,
            json!({"kind": kind, "valid": true}),
            format!("valid {kind}"),
        )),
        Err(
            e @ (Error::Json(_) | Error::Schema(_) | Error::NotSquare { .. } | Error::NonFinite { .. } | Error::Io(_)),
        ) => Err(e),
        Err(e) => Ok(Outcome::new(
            EXIT_FAILS,
            json!({"kind": kind, "valid": false, "violation": e.to_string()}),
            format!("invalid {kind}: {e}"),
        )),
    }
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let tol = cli.global.tolerances();
    tol.validate()?;
    let seed = cli.global.seed;
    match cli.command {
        Command::Validate { path } => validate(&path, &tol),
        Command::Reduce { path, lsb } => {
            let a = load_povm(&path, &tol)?;
            let report = if lsb {
                reduce_via_lsb(&a, &tomographic_ensemble(a.dim()), &tol)?
            } else {
                reduce(&a, &tol)?
            };
            let mut text = format!("reduced {} outcomes to {}\n", a.len(), report.reduced.len());
            for (x, g) in &report.groups {
                text.push_str(&format!("  {x} -> {g} (h = {:.6})\n", report.h[x]));
            }
            if !report.dropped.is_empty() {
                text.push_str(&format!("dropped vanishing: {}\n", report.dropped.join(", ")));
            }
            text.push_str(&povm_text(&report.reduced));
            Ok(Outcome::new(EXIT_HOLDS, to_value(&report), text))
        }
        Command::Order { a, b } => {
            let a = load_povm(&a, &tol)?;
            let b = load_povm(&b, &tol)?;
            let v = preceq(&a, &b, &tol)?;
            let code = if v.holds {
                EXIT_HOLDS
            } else if v.borderline {
                EXIT_AMBIGUOUS
            } else {
                EXIT_FAILS
            };
            let mut text = format!(
                "{} (residual {:.3e}{})\n",
                if v.holds { "A ⪯ B" } else { "not ⪯" },
                v.residual,
                if v.borderline { ", borderline" } else { "" }
            );
            if let Some(w) = &v.witness {
                text.push_str(&w.to_string());
            }
            Ok(Outcome::new(code, to_value(&v), text))
        }
        Command::Equiv { a, b, method } => {
            let a = load_povm(&a, &tol)?;
            let b = load_povm(&b, &tol)?;
            let method = match method {
                Method::Lp => EquivalenceMethod::Lp,
                Method::Reduce => EquivalenceMethod::Reduce,
            };
            let v = equivalent(&a, &b, method, &tol)?;
            let code = if v.equivalent {
                EXIT_HOLDS
            } else if v.borderline {
                EXIT_AMBIGUOUS
            } else {
                EXIT_FAILS
            };
            let text = if v.equivalent { "equivalent" } else { "not equivalent" };
            Ok(Outcome::new(code, to_value(&v), text))
        }
        Command::Divergence {
            povm,
            rho,
            sigma,
            generator,
        } => {
            let f: FGenerator = generator.parse()?;
            let a = load_povm(&povm, &tol)?;
            let rho = load_state(&rho, &tol)?;
            let sigma = load_state(&sigma, &tol)?;
            let d = divergence_between_states(f, &a, &rho, &sigma)?;
            let value = if d.is_finite() { json!(d) } else { json!("inf") };
            Ok(Outcome::new(
                EXIT_HOLDS,
                json!({"f": f.tag(), "value": value}),
                format!("{f} = {d}"),
            ))
        }
        Command::Compose { instrument, povm } => {
            let inst = load_instrument(&instrument, &tol)?;
            let b = load_povm(&povm, &tol)?;
            let c = compose(&inst, &b)?;
            Ok(Outcome::new(EXIT_HOLDS, to_value(&c.povm), povm_text(&c.povm)))
        }
        Command::Conserve {
            instrument,
            povm,
            exhaustive_limit,
        } => {
            let inst = load_instrument(&instrument, &tol)?;
            let b = load_povm(&povm, &tol)?;
            let v = check_conservation(&inst, &b, &tol, exhaustive_limit)?;
            let cond1 = v.condition1.verdict();
            let code = if !v.consistent {
                EXIT_AMBIGUOUS
            } else if !v.condition2 {
                EXIT_FAILS
            } else if cond1.is_none() {
                EXIT_AMBIGUOUS
            } else {
                EXIT_HOLDS
            };
            let text = format!(
                "condition 1: {} (projection {})\ncondition 2: {}{}",
                match cond1 {
                    Some(true) => "holds",
                    Some(false) => "fails",
                    None if !v.condition2 => "fails (implied by condition 2)",
                    None => "unknown",
                },
                v.condition1.holds_for_projection,
                v.condition2,
                if v.consistent {
                    ""
                } else {
                    "\nwarning: methods disagree"
                }
            );
            Ok(Outcome::new(code, to_value(&v), text))
        }
        Command::Gen {
            kind,
            dim,
            outcomes,
            rows,
            kraus,
            input,
        } => {
            let value = match kind {
                GenKind::Povm => to_value(&random_povm(dim, outcomes, seed)?),
                GenKind::State => to_value(&random_density(dim, seed).to_raw()),
                GenKind::Markov => to_value(&random_markov(rows, outcomes, seed)),
                GenKind::Instrument => to_value(&random_instrument(dim, outcomes, kraus, seed)?),
                GenKind::Split => {
                    let path = input.ok_or_else(|| Error::Schema("split needs --input <povm>".into()))?;
                    to_value(&random_split(&load_povm(&path, &tol)?, rows, seed)?)
                }
            };
            let text = value.to_string();
            Ok(Outcome::new(EXIT_HOLDS, value, text))
        }
        Command::Ensemble { dim } => {
            if dim == 0 {
                return Err(Error::Schema("dim must be positive".into()));
            }
            let value = to_value(&tomographic_ensemble(dim).to_raw());
            let text = value.to_string();
            Ok(Outcome::new(EXIT_HOLDS, value, text))
        }
        Command::Fixture { name } => match name {
            None => Ok(Outcome::new(
                EXIT_HOLDS,
                json!(fixtures::NAMES),
                fixtures::NAMES.join("\n"),
            )),
            Some(n) => {
                let text = fixtures::lookup(&n).ok_or_else(|| Error::Schema(format!("unknown fixture {n:?}")))?;
                let value: Value = serde_json::from_str(&text)?;
                Ok(Outcome::new(EXIT_HOLDS, value, text))
            }
        },
        Command::Selftest {
            trials,
            negative_control,
        } => {
            let report = selftest::run(&SelftestConfig {
                seed,
                trials,
                tol,
                negative_control,
            });
            let mut text = String::new();
            for w in &report.warnings {
                text.push_str(&format!("warning: {w}\n"));
            }
            for p in &report.properties {
                text.push_str(&format!(
                    "{} {:<46} {}/{} failed{}\n",
                    if p.passed { "PASS" } else { "FAIL" },
                    p.name,
                    p.failures,
                    p.trials,
                    if p.expected_to_fail { " (negative control)" } else { "" }
                ));
                if !p.passed {
                    if let Some(c) = &p.counterexample {
                        text.push_str(&format!("     {c}\n"));
                    }
                }
            }
            let code = if report.passed { EXIT_HOLDS } else { EXIT_FAILS };
            Ok(Outcome::new(code, to_value(&report), text))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.global.format;
    match run(cli) {
        Ok(out) => {
            match format {
                Format::Json => println!("{}", out.json),
                Format::Text => println!("{}", out.text.trim_end()),
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            let code = if e.is_ambiguity() { EXIT_AMBIGUOUS } else { EXIT_ERROR };
            match format {
                Format::Json => println!("{}", json!({"error": e.to_string()})),
                Format::Text => eprintln!("error: {e}"),
            }
            ExitCode::from(code)
        }
    }
}
