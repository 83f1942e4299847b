//! `ncup` command-line interface.
//!
//! Exit codes: 0 when everything checked passes, 1 when a violation or an
//! evaluation failure was found, 2 for usage and input errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::algebra::AlgebraSignature;
use crate::explorer::{minimize_margin, SearchMode, SearchResult, SearchSpec, DEFAULT_INITIAL_STEP, DEFAULT_SHRINK};
use crate::hilbert_module::{check_module_axioms, AxiomReport};
use crate::instance::{sha256_hex, to_canonical_json, InstanceFile};
use crate::tolerance::{Tolerances, DEFAULT_IDENTITY_TOL, DEFAULT_TOL_ENV};
use crate::verifier::{fuzz, verify_instance, Evaluation, FuzzReport, InequalityReport, StatementId};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "ncup", version, about = "Noncommutative uncertainty inequalities over finite-dimensional Hilbert C*-modules")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every statement on an instance file.
    Verify(VerifyArgs),
    /// Evaluate seeded random instances and aggregate the margins.
    Fuzz(FuzzArgs),
    /// Search for states (and operators) minimizing one statement's margin.
    Explore(ExploreArgs),
    /// Sample the inner-product axioms and Cauchy–Schwarz.
    Axioms(AxiomArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Instance file.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Verdict tolerance (overrides the file and the environment).
    #[arg(long)]
    tol: Option<f64>,
    /// Normalize the state before verifying; defaults to the inverse of the file's `normalized` flag.
    #[arg(long, value_name = "BOOL", value_parser = clap::builder::BoolishValueParser::new())]
    normalize_state: Option<bool>,
}

#[derive(Debug, Args)]
struct FuzzArgs {
    /// Block dimensions, e.g. `2,1`.
    #[arg(long, value_parser = parse_signature)]
    signature: AlgebraSignature,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    /// Write the aggregate report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Directory for replayable violation and failure instances.
    #[arg(long, value_name = "DIR")]
    violations: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Joint,
    StateOnly,
}

#[derive(Debug, Args)]
struct ExploreArgs {
    #[arg(long, value_parser = parse_statement)]
    statement: StatementId,
    /// Defaults to `1`, or to the signature of `--in`.
    #[arg(long, value_parser = parse_signature)]
    signature: Option<AlgebraSignature>,
    /// Defaults to 2, or to the rank of `--in`.
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Joint)]
    mode: Mode,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_INITIAL_STEP)]
    step: f64,
    #[arg(long, default_value_t = DEFAULT_SHRINK)]
    shrink: f64,
    #[arg(long)]
    tol: Option<f64>,
    /// Instance file supplying `A` and `B` for state-only mode.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Write the search result here; a counterexample goes next to it.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AxiomArgs {
    #[arg(long, value_parser = parse_signature)]
    signature: AlgebraSignature,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance on axiom residuals and the Cauchy–Schwarz margin.
    #[arg(long, default_value_t = DEFAULT_IDENTITY_TOL)]
    tol: f64,
}

fn parse_signature(s: &str) -> Result<AlgebraSignature, String> {
    AlgebraSignature::parse_csv(s).map_err(|e| e.to_string())
}

fn parse_statement(s: &str) -> Result<StatementId, String> {
    s.parse().map_err(|e: crate::error::Error| e.to_string())
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

type CmdResult = Result<u8, Usage>;

struct Io<'a> {
    out: &'a mut dyn Write,
    format: Format,
}

impl Io<'_> {
    fn emit(&mut self, text: &str) -> Result<(), Usage> {
        self.out.write_all(text.as_bytes())?;
        Ok(())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io { out, format: cli.format };
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(a, &mut io),
        Command::Fuzz(a) => cmd_fuzz(a, &mut io),
        Command::Explore(a) => cmd_explore(a, &mut io),
        Command::Axioms(a) => cmd_axioms(a, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn env_tolerance() -> Result<Option<f64>, Usage> {
    match std::env::var(DEFAULT_TOL_ENV) {
        Ok(v) => {
            let t: f64 = v
                .trim()
                .parse()
                .map_err(|_| Usage(format!("{DEFAULT_TOL_ENV}={v:?} is not a number")))?;
            Ok(Some(t))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Usage(format!("{DEFAULT_TOL_ENV}: {e}"))),
    }
}

/// Defaults, then the environment, then the file, then the flag.
fn tolerances(file: Option<Tolerances>, flag: Option<f64>) -> Result<Tolerances, Usage> {
    let mut tol = match env_tolerance()? {
        Some(v) => Tolerances::with_verdict(v),
        None => Tolerances::default(),
    };
    if let Some(f) = file {
        tol = f;
    }
    if let Some(v) = flag {
        tol.verdict = v;
    }
    tol.validate().map_err(Usage)?;
    Ok(tol)
}

fn read_instance(path: &Path) -> Result<InstanceFile, Usage> {
    let text = fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    InstanceFile::parse(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Usage> {
    fs::write(path, text).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn cmd_verify(args: VerifyArgs, io: &mut Io<'_>) -> CmdResult {
    let file = read_instance(&args.input)?;
    let tol = tolerances(file.tolerances, args.tol)?;
    let instance = file.resolve(args.normalize_state, tol)?;
    let mut report = verify_instance(&instance.a, &instance.b, &instance.state, &tol)?;
    report.provenance = instance.provenance;
    match io.format {
        Format::Structured => io.emit(&to_canonical_json(&report))?,
        Format::Text => io.emit(&render_report(&report))?,
    }
    Ok(if report.all_passed() { EXIT_PASS } else { EXIT_VIOLATION })
}

/// Human-readable report: one line per statement, then its links and identities.
pub fn render_report(report: &InequalityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "signature {} rank {}  Δ_x(A) = {:.6e}  Δ_x(B) = {:.6e}  tolerance {:.1e}",
        report.signature, report.rank, report.delta_a, report.delta_b, report.tolerances.verdict
    );
    for row in &report.rows {
        let status = match row.passed() {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "n/a",
        };
        match &row.evaluation {
            Evaluation::Evaluated {
                margin,
                links,
                identities,
                ..
            } => {
                let _ = writeln!(s, "{:<10} {status:<4}  margin {margin:.3e}", row.statement.label());
                for l in links {
                    let _ = writeln!(
                        s,
                        "    {}  {}  margin {:.3e}  relative {:.3e}  lhs {}  rhs {}",
                        if l.holds { "ok " } else { "bad" },
                        l.relation,
                        l.margin,
                        l.relative_margin,
                        l.lhs.summary(),
                        l.rhs.summary()
                    );
                }
                for c in identities {
                    let _ = writeln!(
                        s,
                        "    {}  {}  residual {:.3e}",
                        if c.holds { "ok " } else { "bad" },
                        c.relation,
                        c.residual
                    );
                }
            }
            Evaluation::NotApplicable { reason } => {
                let _ = writeln!(s, "{:<10} {status:<4}  {reason}", row.statement.label());
            }
            Evaluation::Failed { reason, links, .. } => {
                let _ = writeln!(s, "{:<10} {status:<4}  evaluation failed: {reason}", row.statement.label());
                for l in links {
                    let _ = writeln!(s, "    {}  {}  margin {:.3e}", if l.holds { "ok " } else { "bad" }, l.relation, l.margin);
                }
            }
        }
    }
    s
}

fn render_fuzz(report: &FuzzReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "fuzz signature {} rank {} count {} seed {} tolerance {:.1e}",
        report.signature, report.rank, report.count, report.seed, report.tolerances.verdict
    );
    let _ = writeln!(
        s,
        "{:<10} {:>9} {:>5} {:>10} {:>8} {:>10}  min margin",
        "statement", "evaluated", "n/a", "violations", "failures", "identities"
    );
    for a in &report.statements {
        let min = a.min_margin.map_or_else(|| "-".to_string(), |m| format!("{m:.3e}"));
        let _ = writeln!(
            s,
            "{:<10} {:>9} {:>5} {:>10} {:>8} {:>10}  {min}",
            a.statement.label(),
            a.evaluated,
            a.not_applicable,
            a.violations,
            a.failed_evaluations,
            a.identity_failures
        );
    }
    for e in &report.precondition_errors {
        let _ = writeln!(s, "precondition error: {e}");
    }
    let _ = writeln!(s, "digest {}", report.digest);
    s
}

fn cmd_fuzz(args: FuzzArgs, io: &mut Io<'_>) -> CmdResult {
    let tol = tolerances(None, args.tol)?;
    let report = fuzz(&args.signature, args.rank, args.count, args.seed, &tol)?;
    let json = to_canonical_json(&report);
    if let Some(dir) = &args.violations {
        fs::create_dir_all(dir).map_err(|e| Usage(format!("{}: {e}", dir.display())))?;
        for a in &report.statements {
            let label = a.statement.label();
            if let Some(v) = &a.worst_violation {
                write_file(&dir.join(format!("{label}-violation-{}.json", v.index)), &to_canonical_json(&v.instance))?;
            }
            if let Some(f) = &a.first_failure {
                write_file(&dir.join(format!("{label}-failure-{}.json", f.index)), &to_canonical_json(&f.instance))?;
            }
            if let Some(f) = &a.first_identity_failure {
                write_file(&dir.join(format!("{label}-identity-{}.json", f.index)), &to_canonical_json(&f.instance))?;
            }
        }
    }
    match &args.out {
        Some(path) => {
            write_file(path, &json)?;
            if io.format == Format::Text {
                io.emit(&render_fuzz(&report))?;
            }
        }
        None => match io.format {
            Format::Structured => io.emit(&json)?,
            Format::Text => io.emit(&render_fuzz(&report))?,
        },
    }
    Ok(if report.is_clean() { EXIT_PASS } else { EXIT_VIOLATION })
}

fn counterexample_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.counterexample.json"))
}

fn cmd_explore(args: ExploreArgs, io: &mut Io<'_>) -> CmdResult {
    let (signature, rank, mode, file_tol) = match (args.mode, &args.input) {
        (Mode::StateOnly, None) => {
            return Err(Usage("--mode state-only requires --in FILE supplying A and B".into()));
        }
        (Mode::Joint, Some(_)) => {
            return Err(Usage("--in is only used with --mode state-only".into()));
        }
        (Mode::StateOnly, Some(path)) => {
            let file = read_instance(path)?;
            let (a, b) = file.operators()?;
            let signature = a.signature().clone();
            let rank = a.rank();
            if args.signature.as_ref().is_some_and(|s| *s != signature) || args.rank.is_some_and(|r| r != rank) {
                return Err(Usage(format!(
                    "--signature/--rank disagree with {} (signature {signature}, rank {rank})",
                    path.display()
                )));
            }
            (signature, rank, SearchMode::StateOnly { a, b }, file.tolerances)
        }
        (Mode::Joint, None) => (
            args.signature.unwrap_or_else(AlgebraSignature::scalar),
            args.rank.unwrap_or(2),
            SearchMode::Joint,
            None,
        ),
    };
    let spec = SearchSpec {
        statement: args.statement,
        signature,
        rank,
        mode,
        iterations: args.iters,
        restarts: args.restarts,
        seed: args.seed,
        initial_step: args.step,
        shrink: args.shrink,
        tolerances: tolerances(file_tol, args.tol)?,
    };
    spec.validate()?;
    let result = minimize_margin(&spec)?;
    let json = to_canonical_json(&result);
    if let Some(path) = &args.out {
        write_file(path, &json)?;
        if let Some(c) = &result.counterexample {
            write_file(&counterexample_path(path), &to_canonical_json(c))?;
        }
    }
    match io.format {
        Format::Structured if args.out.is_none() => io.emit(&json)?,
        Format::Structured => {}
        Format::Text => io.emit(&render_search(&result, args.out.as_deref()))?,
    }
    Ok(if result.found_counterexample() { EXIT_VIOLATION } else { EXIT_PASS })
}

fn render_search(result: &SearchResult, out: Option<&Path>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "explore {} signature {:?} rank {} mode {}",
        result.spec.statement, result.spec.signature, result.spec.rank, result.spec.mode
    );
    let _ = writeln!(
        s,
        "best margin {:.6e} (restart {}, {} evaluations over {} restarts)",
        result.best_margin,
        result.best_restart,
        result.evaluations,
        result.restarts.len()
    );
    if result.found_counterexample() {
        match out {
            Some(p) => {
                let _ = writeln!(s, "counterexample written to {}", counterexample_path(p).display());
            }
            None => {
                let _ = writeln!(s, "counterexample found; rerun with --out to save it");
            }
        }
    }
    s
}

#[derive(serde::Serialize)]
struct AxiomOutput<'a> {
    report: &'a AxiomReport,
    tolerance: f64,
    passed: bool,
    digest: String,
}

fn cmd_axioms(args: AxiomArgs, io: &mut Io<'_>) -> CmdResult {
    if args.samples == 0 {
        return Err(Usage("--samples must be at least 1".into()));
    }
    if args.rank == 0 {
        return Err(Usage("--rank must be at least 1".into()));
    }
    if !(args.tol.is_finite() && args.tol >= 0.0) {
        return Err(Usage(format!("--tol must be finite and nonnegative, got {}", args.tol)));
    }
    let report = check_module_axioms(&args.signature, args.rank, args.samples, args.seed);
    let passed = report.passes(args.tol, args.tol);
    let out = AxiomOutput {
        digest: sha256_hex(&to_canonical_json(&report)),
        report: &report,
        tolerance: args.tol,
        passed,
    };
    match io.format {
        Format::Structured => io.emit(&to_canonical_json(&out))?,
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "axioms signature {} rank {} samples {} seed {}",
                report.signature, report.rank, report.samples, report.seed
            );
            let _ = writeln!(s, "positivity          {:.3e}", report.positivity);
            let _ = writeln!(s, "definiteness        {}", report.definiteness);
            let _ = writeln!(s, "additivity          {:.3e}", report.additivity);
            let _ = writeln!(s, "left linearity      {:.3e}", report.left_linearity);
            let _ = writeln!(s, "conjugate symmetry  {:.3e}", report.conjugate_symmetry);
            let _ = writeln!(s, "Cauchy–Schwarz min  {:.3e}", report.cauchy_schwarz_min_margin);
            if let Some(c) = report.commutativity_defect {
                let _ = writeln!(s, "commutativity       {c:.3e}");
            }
            let _ = writeln!(s, "{}  digest {}", if passed { "pass" } else { "FAIL" }, out.digest);
            io.emit(&s)?;
        }
    }
    Ok(if passed { EXIT_PASS } else { EXIT_VIOLATION })
}
