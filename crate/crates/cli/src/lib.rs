//! The `gvlam` command-line front end.
//!
//! [`run`] takes the argument list and two writers and returns the process
//! exit code, so tests drive the exact code path of the binary.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gvlam_core::syntax::{parse_context, parse_term};
use gvlam_core::typecheck::infer;
use gvlam_core::vequation::{annotate, synthesize, validate, SynthError, SynthOptions, TheorySpec};
use gvlam_core::{Context, Term};

mod model_cmd;
pub mod model_file;
mod oracle_cmd;
pub mod report;
pub mod script;
pub mod theory;

pub use report::{Format, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TYPE: i32 = 1;
pub const EXIT_PROOF: i32 = 2;
pub const EXIT_SYNTH: i32 = 3;
pub const EXIT_MODEL: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INPUT: i32 = 65;

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl Failure {
    pub fn new(code: i32, msg: impl Into<String>) -> Failure {
        Failure { code, msg: msg.into() }
    }
}

pub type CResult<T> = Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "gvlam", version, about = "Workbench for the graded linear lambda calculus with quantitative equations")]
struct Cli {
    /// Report format for tabular output.
    #[arg(long, value_enum, global = true, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Text,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct TermSource {
    /// Treat term arguments as term text instead of file paths.
    #[arg(long)]
    inline: bool,
    /// Typing context, e.g. "x : X, y : !2 X".
    #[arg(long, default_value = "")]
    context: String,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Infer the type of a term.
    Check {
        theory: String,
        term: String,
        #[command(flatten)]
        src: TermSource,
        /// Print the typing derivation as an s-expression.
        #[arg(long)]
        emit_derivation: bool,
    },
    /// Validate a proof script and print its conclusion.
    Prove { theory: String, proof: String },
    /// Synthesize a bound relating two terms.
    Bound {
        theory: String,
        left: String,
        right: String,
        #[command(flatten)]
        src: TermSource,
        /// Beta-normalize both sides before searching.
        #[arg(long)]
        normalize_first: bool,
        /// Print the synthesized proof as a script.
        #[arg(long)]
        emit_proof: bool,
    },
    /// Finite models and probabilistic audits.
    Model {
        #[command(subcommand)]
        cmd: model_cmd::ModelCmd,
    },
    /// Brute-force cross-checks.
    Oracle {
        #[command(subcommand)]
        cmd: oracle_cmd::OracleCmd,
    },
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(shown.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(shown.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let format = match cli.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Text => Format::Text,
    };
    let mut buf = String::new();
    let res = dispatch(cli.cmd, format, &mut buf);
    let _ = out.write_all(buf.as_bytes());
    match res {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}

fn dispatch(cmd: Cmd, format: Format, out: &mut String) -> CResult<i32> {
    match cmd {
        Cmd::Check { theory, term, src, emit_derivation } => cmd_check(&theory, &term, &src, emit_derivation, out),
        Cmd::Prove { theory, proof } => cmd_prove(&theory, &proof, out),
        Cmd::Bound { theory, left, right, src, normalize_first, emit_proof } => {
            cmd_bound(&theory, &left, &right, &src, normalize_first, emit_proof, out)
        }
        Cmd::Model { cmd } => model_cmd::run(cmd, format, out),
        Cmd::Oracle { cmd } => oracle_cmd::run(cmd, format, out),
    }
}

pub(crate) fn read(path: &str) -> CResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {}", path, e)))
}

pub fn load_theory(path: &str) -> CResult<TheorySpec> {
    let src = read(path)?;
    theory::parse_theory(&src).map_err(|e| match e {
        theory::TheoryError::Syntax { .. } => Failure::new(EXIT_INPUT, format!("{}: {}", path, e)),
        theory::TheoryError::IllTyped { .. } => Failure::new(EXIT_TYPE, format!("{}: {}", path, e)),
    })
}

/// Drops `#` comment lines from a term file.
fn strip_comments(src: &str) -> String {
    src.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join("\n")
}

pub(crate) fn load_term(arg: &str, src: &TermSource) -> CResult<Term> {
    let text = if src.inline { arg.to_string() } else { strip_comments(&read(arg)?) };
    parse_term(text.trim()).map_err(|e| Failure::new(EXIT_INPUT, format!("term: {}", e)))
}

pub(crate) fn load_context(src: &TermSource) -> CResult<Context> {
    parse_context(&src.context).map_err(|e| Failure::new(EXIT_INPUT, format!("context: {}", e)))
}

fn cmd_check(theory: &str, term: &str, src: &TermSource, emit: bool, out: &mut String) -> CResult<i32> {
    let th = load_theory(theory)?;
    let t = load_term(term, src)?;
    let ctx = load_context(src)?;
    let d = infer(&th.signature, &ctx, &t).map_err(|e| Failure::new(EXIT_TYPE, e.to_string()))?;
    out.push_str(&format!("{}\n", d.ty));
    if emit {
        out.push_str(&d.to_sexp());
        if !out.ends_with('\n') {
            out.push('\n');
        }
    }
    Ok(EXIT_OK)
}

fn cmd_prove(theory: &str, proof: &str, out: &mut String) -> CResult<i32> {
    let th = load_theory(theory)?;
    let node = script::parse_script(&th, &read(proof)?).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    let eq = validate(&th, &node).map_err(|e| Failure::new(EXIT_PROOF, e.to_string()))?;
    out.push_str(&format!("{}\n", eq));
    out.push_str(&format!("bound {}\n", eq.bound));
    if !eq.bound.is_exact() {
        let (lo, hi) = eq.bound.enclosure().map_err(|e| Failure::new(EXIT_PROOF, e.to_string()))?;
        out.push_str(&format!("enclosure [{:.12}, {:.12}]\n", lo, hi));
    }
    Ok(EXIT_OK)
}

fn cmd_bound(
    theory: &str,
    left: &str,
    right: &str,
    src: &TermSource,
    normalize_first: bool,
    emit_proof: bool,
    out: &mut String,
) -> CResult<i32> {
    let th = load_theory(theory)?;
    let (v, w) = (load_term(left, src)?, load_term(right, src)?);
    let ctx = load_context(src)?;
    let opts = SynthOptions { normalize_first, ..SynthOptions::default() };
    let found = synthesize(&th, &ctx, &v, &w, opts).map_err(|e| match e {
        SynthError::IllTyped { .. } | SynthError::TypeMismatch(..) => Failure::new(EXIT_TYPE, e.to_string()),
        _ => Failure::new(EXIT_SYNTH, e.to_string()),
    })?;
    let Some((eq, proof)) = found else {
        out.push_str("FAIL\n");
        return Ok(EXIT_SYNTH);
    };
    out.push_str(&format!("{}\n", eq.bound));
    if emit_proof {
        // The synthesizer's output is re-checked before it is shown.
        annotate(&th, &proof).map_err(|e| Failure::new(EXIT_PROOF, e.to_string()))?;
        out.push_str(&script::emit_script(&proof));
    }
    Ok(EXIT_OK)
}

/// Enumeration guard, overridable through `GVLAM_GUARD`.
pub fn guard() -> CResult<u128> {
    match std::env::var("GVLAM_GUARD") {
        Ok(s) => s.trim().parse().map_err(|_| Failure::new(EXIT_USAGE, format!("GVLAM_GUARD must be a number, got `{}`", s))),
        Err(_) => Ok(gvlam_core::met_model::DEFAULT_GUARD),
    }
}
