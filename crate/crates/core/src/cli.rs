//! The `locc` command line.
//!
//! Every subcommand reads JSON files, calls into the library, and writes one
//! JSON document (or a plain-text rendering of it). Exit codes: 0 success,
//! 1 invalid input, 2 internal inconsistency, 3 size-limit refusal.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{extension_witness, orthogonal_complement, reducibility_witness};
use crate::catalog::{family, FamilyName, FamilySpec};
use crate::classify::classify_general;
use crate::error::{Error, Result};
use crate::numerics::Tolerance;
use crate::protocol::{
    gen_propdist_protocol, gen_two_copy_protocol, reliability, synthesize_protocol, ProtocolTree,
};
use crate::rectrep::{construct_rect_rep_3x3, r9, search_rect_rep, RectRepresentation};
use crate::serial::ray_to_wire;
use crate::states::{parse_states_with, OrthogonalProductSet};

#[derive(Debug, Parser)]
#[command(name = "locc", version, about = "Local distinguishability of orthogonal product states")]
pub struct Cli {
    /// Zero threshold; overrides the tolerance given in input files.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a states file is an orthogonal product set.
    Validate { states: PathBuf },
    /// Structural properties: irreducibility, alignment, extendability, complement.
    Analyze { states: PathBuf },
    /// LOCC distinguishability verdict.
    Classify { states: PathBuf },
    /// The product state completing a set of m*n-1 states to a basis.
    Complement { states: PathBuf },
    /// Rectangular representation of a product basis.
    Rectrep(RectrepArgs),
    /// Generate an LOCC protocol.
    Protocol(ProtocolArgs),
    /// Run a protocol on every state of a set and report reliability.
    Simulate { protocol: PathBuf, states: PathBuf },
    /// Emit a built-in family as a states file.
    Family(FamilyArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("method").required(true).args(["construct", "search"])))]
pub struct RectrepArgs {
    /// Follow the aligned-pair chase (3x3 irreducible bases).
    #[arg(long)]
    pub construct: bool,
    /// Exhaustive search (grids up to 12 cells); prints null when none exists.
    #[arg(long)]
    pub search: bool,
    pub states: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("kind").required(true).args(["propdist", "two_copy", "synthesize"])))]
pub struct ProtocolArgs {
    /// One-copy protocol for the basis without the named state.
    #[arg(long, value_name = "LABEL")]
    pub propdist: Option<String>,
    /// Two-copy protocol for the whole basis.
    #[arg(long)]
    pub two_copy: bool,
    /// Bounded search for a one-copy protocol; prints null when none is found.
    #[arg(long, requires = "max_depth")]
    pub synthesize: bool,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Use this representation file instead of computing one.
    #[arg(long)]
    pub rep: Option<PathBuf>,
    pub states: PathBuf,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// b9, b8, b9_minus:<label>, theta_2x4, rect_random, class3_random, upb_example
    pub spec: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Angle for theta_2x4, in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
    pub theta: f64,
}

/// Parses `args` and runs the command, writing the report to `--out` or
/// `stdout` and diagnostics to `stderr`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let rendered = err.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(value) => match emit(&cli, &value, stdout) {
            Ok(()) => 0,
            Err(err) => {
                let _ = writeln!(stderr, "error: {err}");
                1
            }
        },
        Err(Failure { error, report }) => {
            let _ = writeln!(stderr, "error: {error}");
            if let Some(report) = report {
                let _ = emit(&cli, &report, stdout);
            }
            error.exit_code()
        }
    }
}

struct Failure {
    error: Error,
    /// Written despite the failure (the `validate` verdict).
    report: Option<Value>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self { error, report: None }
    }
}

fn emit(cli: &Cli, value: &Value, stdout: &mut dyn Write) -> std::result::Result<(), Error> {
    let mut text = match cli.output {
        OutputFormat::Json => serde_json::to_string_pretty(value).expect("json value serializes"),
        OutputFormat::Text => {
            let mut s = String::new();
            render_text(value, 0, &mut s);
            s.trim_end().to_string()
        }
    };
    text.push('\n');
    match &cli.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::MalformedInput(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::MalformedInput(format!("cannot write output: {e}"))),
    }
}

fn render_text(value: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                if is_scalar(v) {
                    out.push_str(&format!("{pad}{k}: {}\n", scalar(v)));
                } else {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render_text(v, indent + 1, out);
                }
            }
        }
        Value::Array(items) if items.iter().all(is_scalar) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{pad}[{}]\n", parts.join(", ")));
        }
        Value::Array(items) => {
            for v in items {
                if is_scalar(v) {
                    out.push_str(&format!("{pad}- {}\n", scalar(v)));
                } else {
                    out.push_str(&format!("{pad}-\n"));
                    render_text(v, indent + 1, out);
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn is_scalar(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|x| !x.is_object() && !x.is_array()) && items.len() <= 2,
        Value::Object(_) => false,
        _ => true,
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => format!("[{}]", items.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

fn tolerance(cli: &Cli) -> Result<Option<Tolerance>> {
    cli.tolerance.map(Tolerance::new).transpose()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::MalformedInput(format!("cannot read {}: {e}", path.display())))
}

fn load_states(cli: &Cli, path: &Path) -> Result<OrthogonalProductSet> {
    parse_states_with(&read(path)?, tolerance(cli)?)
}

fn execute(cli: &Cli) -> std::result::Result<Value, Failure> {
    match &cli.command {
        Command::Validate { states } => validate(cli, states),
        Command::Analyze { states } => Ok(analyze(&load_states(cli, states)?)?),
        Command::Classify { states } => {
            let e = load_states(cli, states)?;
            Ok(classify_general(&e)?.report(&e))
        }
        Command::Complement { states } => {
            let e = load_states(cli, states)?;
            let c = orthogonal_complement(&e)?;
            Ok(serde_json::to_value(c.to_wire()).expect("state serializes"))
        }
        Command::Rectrep(args) => {
            let e = load_states(cli, &args.states)?;
            let rep = if args.construct {
                Some(construct_rect_rep_3x3(&e)?)
            } else {
                search_rect_rep(&e)?
            };
            Ok(rep.map_or(Value::Null, |r| serde_json::to_value(r.to_wire()).expect("rep serializes")))
        }
        Command::Protocol(args) => Ok(protocol(cli, args)?),
        Command::Simulate { protocol, states } => {
            let e = load_states(cli, states)?;
            let tol = tolerance(cli)?.unwrap_or(e.tol());
            let p = ProtocolTree::from_json(&read(protocol)?, tol)?;
            Ok(serde_json::to_value(reliability(&p, &e)?).expect("report serializes"))
        }
        Command::Family(args) => {
            let e = family(&family_spec(args)?)?;
            Ok(serde_json::to_value(e.to_wire()).expect("states serialize"))
        }
    }
}

fn validate(cli: &Cli, path: &Path) -> std::result::Result<Value, Failure> {
    match load_states(cli, path) {
        Ok(e) => Ok(json!({
            "valid": true,
            "dims": [e.dim_a(), e.dim_b()],
            "size": e.len(),
            "basis": e.is_basis(),
            "labels": e.labels(),
        })),
        Err(error) => Err(Failure {
            report: Some(json!({"valid": false, "error": error.to_string()})),
            error,
        }),
    }
}

fn analyze(e: &OrthogonalProductSet) -> Result<Value> {
    let label = |k: usize| e.state(k).label().to_string();
    let reducible = reducibility_witness(e).map(|w| {
        json!({
            "side": w.side.name(),
            "partition": [
                w.partition.0.iter().map(|&k| label(k)).collect::<Vec<_>>(),
                w.partition.1.iter().map(|&k| label(k)).collect::<Vec<_>>(),
            ],
        })
    });
    let aligned: Vec<Value> = e
        .aligned_pairs()
        .iter()
        .map(|p| json!({"pair": [label(p.i), label(p.j)], "side": p.side.name()}))
        .collect();
    let (extendable, extension) = match extension_witness(e) {
        Ok(w) => (
            json!(w.is_some()),
            w.map_or(Value::Null, |w| {
                json!({
                    "a": ray_to_wire(w.state.a()),
                    "b": ray_to_wire(w.state.b()),
                    "subset": w.subset.iter().map(|&k| label(k)).collect::<Vec<_>>(),
                })
            }),
        ),
        Err(Error::SizeLimit { .. }) => (Value::Null, Value::Null),
        Err(err) => return Err(err),
    };
    let complement = if e.len() + 1 == e.dim_a() * e.dim_b() {
        let c = orthogonal_complement(e)?;
        json!({"a": ray_to_wire(c.a()), "b": ray_to_wire(c.b())})
    } else {
        Value::Null
    };
    Ok(json!({
        "dims": [e.dim_a(), e.dim_b()],
        "size": e.len(),
        "irreducible": reducible.is_none(),
        "reducible": reducible,
        "aligned_pairs": aligned,
        "extendable": extendable,
        "extension": extension,
        "complement": complement,
    }))
}

fn representation_for(cli: &Cli, args: &ProtocolArgs, e: &OrthogonalProductSet) -> Result<RectRepresentation> {
    if let Some(path) = &args.rep {
        let tol = tolerance(cli)?.unwrap_or(e.tol());
        return RectRepresentation::from_json(&read(path)?, tol);
    }
    if (e.dim_a(), e.dim_b()) == (3, 3) {
        let rep = construct_rect_rep_3x3(e)?;
        return Ok(rep.aligned_to(&r9()).unwrap_or(rep));
    }
    search_rect_rep(e)?.ok_or_else(|| Error::InvalidRepresentation("the set has no rectangular representation".into()))
}

fn protocol(cli: &Cli, args: &ProtocolArgs) -> Result<Value> {
    let e = load_states(cli, &args.states)?;
    let tree = if let Some(label) = &args.propdist {
        Some(gen_propdist_protocol(&e, &representation_for(cli, args, &e)?, label)?)
    } else if args.two_copy {
        Some(gen_two_copy_protocol(&e, &representation_for(cli, args, &e)?)?)
    } else {
        let depth = args.max_depth.expect("clap requires --max-depth");
        synthesize_protocol(&e, depth)?
    };
    Ok(tree.map_or(Value::Null, |t| serde_json::to_value(t.to_wire()).expect("protocol serializes")))
}

fn family_spec(args: &FamilyArgs) -> Result<FamilySpec> {
    let (name, param) = match args.spec.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (args.spec.as_str(), None),
    };
    Ok(match name.parse::<FamilyName>()? {
        FamilyName::B9 => FamilySpec::B9,
        FamilyName::B8 => FamilySpec::B8,
        FamilyName::B9Minus => FamilySpec::B9Minus(
            param
                .ok_or_else(|| Error::InvalidParameter("use b9_minus:<label>".into()))?
                .to_string(),
        ),
        FamilyName::Theta2x4 => FamilySpec::Theta2x4(args.theta),
        FamilyName::RectRandom => FamilySpec::RectRandom(r9(), args.seed),
        FamilyName::Class3Random => FamilySpec::Class3Random(args.seed),
        FamilyName::UpbExample => FamilySpec::UpbExample,
    })
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
