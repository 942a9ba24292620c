//! Command-line driver: parameter inspection, encryption, root enumeration,
//! tag round trips, table emission, whole-range law sweeps, and scripted
//! protocol runs.
//!
//! Results go to stdout (or the requested output file); diagnostics go to
//! stderr. Exit codes: 0 success, 1 a checked property or scripted run failed,
//! 2 bad usage or invalid input, 3 a scale guard refused the work.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use manyroot::modmath;
use manyroot::protocol::{render_transcript, run_scenario, Scenario};
use manyroot::sweep::run_sweep;
use manyroot::tagcodec::{tag_encode, verify_tagged, TagVerdict, TaggedCipher};
use manyroot::transform::{
    check_property1, cipher_map_csv, encrypt, make_params, root_classes_csv, roots_crt,
    roots_of_unity, table_cipher_map, table_root_classes, ParamSet, RootClass, TransformError,
    ORACLE_GUARD,
};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "manyroot",
    version,
    about = "Many-to-one modular power maps and the access protocol built on them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ParamArgs {
    /// Smaller prime factor
    #[arg(long)]
    p: u64,
    /// Larger prime factor
    #[arg(long)]
    q: u64,
    /// Public exponent; must divide (p-1)(q-1)
    #[arg(long)]
    x: u64,
}

impl ParamArgs {
    fn build(&self) -> Result<ParamSet> {
        Ok(make_params(self.p, self.q, self.x)?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a parameter set and echo its derived values
    Paramgen(ParamArgs),
    /// Compute the cipher of one message
    Encrypt {
        #[command(flatten)]
        params: ParamArgs,
        /// Message in [0, n)
        #[arg(long)]
        m: u64,
    },
    /// Enumerate the complete root class of a cipher
    Roots {
        #[command(flatten)]
        params: ParamArgs,
        /// Cipher in [0, n)
        #[arg(long)]
        c: u64,
    },
    /// Encrypt a message and attach its disambiguation tag
    Tag {
        #[command(flatten)]
        params: ParamArgs,
        /// Message in [0, n)
        #[arg(long)]
        m: u64,
    },
    /// Resolve a tagged cipher back to its root and verify it
    Untag {
        #[command(flatten)]
        params: ParamArgs,
        /// Tag quotient
        #[arg(long)]
        t: u64,
        /// Cipher in [0, n)
        #[arg(long)]
        c: u64,
    },
    /// Check the class properties over every complete unit class
    Check {
        #[command(flatten)]
        params: ParamArgs,
        /// Which properties to check
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
        properties: Vec<u8>,
    },
    /// Emit the full cipher map and its root-class table
    Tables {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write the tables here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the class laws across every parameter set in range
    Sweep {
        /// Largest prime factor to include
        #[arg(long, default_value_t = 50)]
        max_prime: u64,
        /// Largest exponent to include
        #[arg(long, default_value_t = 25)]
        max_x: u64,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a scripted scenario and emit its event transcript
    Simulate {
        /// Scenario JSON file
        scenario: PathBuf,
        /// Write the JSON-lines transcript here instead of stdout
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(failure_code(&err))
        }
    }
}

/// Scale refusals exit 3; everything else that errors out is bad input.
fn failure_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<TransformError>() {
        Some(TransformError::OracleScale { .. }) | Some(TransformError::TableScale { .. }) => 3,
        _ => 2,
    }
}

/// The brute-force ceiling, overridable through MANYROOT_SCALE_GUARD.
fn oracle_guard() -> Result<u64> {
    match std::env::var("MANYROOT_SCALE_GUARD") {
        Ok(raw) => raw
            .trim()
            .parse()
            .with_context(|| format!("MANYROOT_SCALE_GUARD {raw:?} is not a number")),
        Err(_) => Ok(ORACLE_GUARD),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Paramgen(args) => {
            let params = args.build()?;
            println!("{}", serde_json::to_string(&params)?);
            Ok(0)
        }
        Command::Encrypt { params, m } => {
            let params = params.build()?;
            let c = encrypt(m, &params)?;
            println!("{}", json!({ "m": m, "c": c }));
            Ok(0)
        }
        Command::Roots { params, c } => {
            let params = params.build()?;
            let class = roots_crt(c, &params)?;
            println!("{}", serde_json::to_string(&class)?);
            Ok(0)
        }
        Command::Tag { params, m } => {
            let params = params.build()?;
            let c = encrypt(m, &params)?;
            let tagged = tag_encode(m, c, params.p())?;
            println!("{}", serde_json::to_string(&tagged)?);
            Ok(0)
        }
        Command::Untag { params, t, c } => {
            let params = params.build()?;
            let verdict = verify_tagged(&TaggedCipher { c, t }, &params);
            println!("{}", serde_json::to_string(&verdict)?);
            Ok(if matches!(verdict, TagVerdict::Accepted { .. }) {
                0
            } else {
                1
            })
        }
        Command::Check { params, properties } => cmd_check(&params.build()?, &properties),
        Command::Tables {
            params,
            format,
            out,
        } => cmd_tables(&params.build()?, format, out),
        Command::Sweep {
            max_prime,
            max_x,
            report,
        } => cmd_sweep(max_prime, max_x, report),
        Command::Simulate {
            scenario,
            transcript,
        } => cmd_simulate(&scenario, transcript),
    }
}

fn cmd_check(params: &ParamSet, properties: &[u8]) -> Result<u8> {
    if properties.is_empty() || properties.iter().any(|p| !(1..=3).contains(p)) {
        anyhow::bail!("properties must be a non-empty subset of 1,2,3");
    }
    let guard = oracle_guard()?;
    if params.n() > guard {
        eprintln!("refusing to brute-force n = {} (guard {guard})", params.n());
        return Ok(3);
    }

    let mut classes: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for m in 0..params.n() {
        classes
            .entry(modmath::pow_mod(m, params.x(), params.n())?)
            .or_default()
            .push(m);
    }
    let unity: Vec<u64> = roots_of_unity(params);

    let mut all_hold = true;
    let mut rows = Vec::new();
    for (c, roots) in classes {
        if modmath::gcd(c, params.n()) != 1 {
            continue;
        }
        let full = roots.len() as u64 == params.x();
        let rc = RootClass::from_roots(c, roots, params);
        let mut row = json!({ "c": c, "roots": rc.roots, "full": full });
        if properties.contains(&1) {
            let report = check_property1(&rc, params);
            let violations: Vec<[u64; 2]> =
                report.violations().map(|pair| [pair.a, pair.b]).collect();
            all_hold &= report.holds;
            row["property1"] = json!({ "holds": report.holds, "violations": violations });
        }
        if properties.contains(&2) {
            let holds = rc.unity_factors.len() == rc.roots.len()
                && rc
                    .unity_factors
                    .iter()
                    .all(|f| unity.binary_search(f).is_ok());
            all_hold &= holds;
            row["property2"] = json!({ "holds": holds, "factors": rc.unity_factors });
        }
        if properties.contains(&3) {
            // the product law is only claimed for classes of exactly x roots
            if full {
                let product = manyroot::transform::product_of_roots(&rc, params);
                all_hold &= product.equals_cipher;
                row["property3"] = json!({
                    "applicable": true,
                    "product": product.product,
                    "equals_cipher": product.equals_cipher,
                });
            } else {
                row["property3"] = json!({ "applicable": false });
            }
        }
        rows.push(row);
    }

    let report = json!({
        "p": params.p(),
        "q": params.q(),
        "x": params.x(),
        "n": params.n(),
        "properties": properties,
        "all_hold": all_hold,
        "classes": rows,
    });
    println!("{report}");
    Ok(if all_hold { 0 } else { 1 })
}

fn cmd_tables(params: &ParamSet, format: Format, out: Option<PathBuf>) -> Result<u8> {
    let map = table_cipher_map(params)?;
    let classes = table_root_classes(params)?;
    let text = match format {
        Format::Csv => format!("{}\n{}", cipher_map_csv(&map), root_classes_csv(&classes)),
        Format::Json => {
            format!(
                "{}\n",
                json!({ "cipher_map": map, "root_classes": classes })
            )
        }
    };
    emit(&text, out.as_ref())?;
    Ok(0)
}

fn cmd_sweep(max_prime: u64, max_x: u64, report_path: Option<PathBuf>) -> Result<u8> {
    let braved = std::env::var_os("MANYROOT_SCALE_GUARD").is_some();
    if braved {
        let guard = oracle_guard()?;
        if max_prime.saturating_mul(max_prime) > guard {
            eprintln!(
                "max_prime {max_prime} would brute-force n up to {} (guard {guard})",
                max_prime.saturating_mul(max_prime)
            );
            return Ok(3);
        }
    } else if max_prime > 50 {
        eprintln!("max_prime {max_prime} exceeds the default sweep ceiling of 50; set MANYROOT_SCALE_GUARD to go larger");
        return Ok(3);
    }

    let report = run_sweep(max_prime, max_x)?;
    let ok = report.all_laws_hold();
    emit(
        &format!("{}\n", serde_json::to_string(&report)?),
        report_path.as_ref(),
    )?;
    eprintln!(
        "{} parameter sets swept, laws {}",
        report.entries.len(),
        if ok { "hold" } else { "VIOLATED" }
    );
    Ok(if ok { 0 } else { 1 })
}

fn cmd_simulate(scenario_path: &PathBuf, transcript_path: Option<PathBuf>) -> Result<u8> {
    let text = std::fs::read_to_string(scenario_path)
        .with_context(|| format!("reading {}", scenario_path.display()))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    // path-aware deserialization so schema errors name the offending step
    let scenario: Scenario = serde_path_to_error::deserialize(&mut de)
        .with_context(|| format!("parsing {}", scenario_path.display()))?;
    let outcome = run_scenario(&scenario).map_err(anyhow::Error::from)?;

    emit(
        &render_transcript(&outcome.events),
        transcript_path.as_ref(),
    )?;
    for step in &outcome.steps {
        let status = match (step.failed, step.expect_fail) {
            (false, _) => "ok",
            (true, true) => "failed (scripted)",
            (true, false) => "FAILED",
        };
        eprintln!("step {} {}: {status}", step.index, step.op);
    }
    Ok(if outcome.success() { 0 } else { 1 })
}
