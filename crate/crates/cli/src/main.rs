mod config;
mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use halfint::forms::{read_coeff_file, resolve_form, CoeffClass, Fricke, HalfIntegralForm, YOSHIDA_DEFAULT_TERMS};
use halfint::lfunc::{i_f, l_value, lambda_completed, r_f, z_twisted, LValue, Signature, TwistSpec};
use halfint::qseries::g_form_coeffs;
use halfint::verify::{run_check, verify_all, CheckResult, CHECK_NAMES};
use halfint::zeros::{count_zeros_rectangle, n0_growth, normalized_signature, scan_sign_changes, ZeroScanReport};
use halfint::Error;

use output::{num, write_json, Format, Table};

/// Terms the verification suite needs: the direct route for `L(s,f₁)` wants at least 67200.
const VERIFY_TERMS: usize = 80_000;

#[derive(Parser)]
#[command(name = "halfint", version, about = "L-functions of half-integral weight cusp forms")]
struct Cli {
    /// Worker threads for scans, growth runs and `verify all` (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized sampling (the functional-equation sample in `report`).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON object whose keys mirror the long flags; flags on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FormArgs {
    /// `yoshida_g` or a name from the registry file.
    #[arg(long, default_value = "yoshida_g")]
    form: String,
    /// JSON array of `{name, k, N, coeff_file, fricke, coeff_class}` entries.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Coefficients to generate for the built-in form.
    #[arg(long)]
    terms: Option<usize>,
}

#[derive(Args, Clone)]
struct Range {
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long, default_value_t = 30.0)]
    t1: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    /// Completed function `Λ(s)`.
    Lambda,
    /// `L(s)` itself.
    L,
    /// Real signature `R_f(t)` on the critical line.
    R,
    /// Real signature `I_f(t)` on the critical line.
    I,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sig {
    Plus,
    Minus,
}

impl From<Sig> for Signature {
    fn from(s: Sig) -> Self {
        match s {
            Sig::Plus => Signature::Plus,
            Sig::Minus => Signature::Minus,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fourier coefficients `n,a(n)` of a form.
    #[command(args_override_self = true)]
    Coeffs {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Values along `Re s = sigma` as rows `t,re,im,abs_err`.
    #[command(args_override_self = true)]
    Eval {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        range: Range,
        /// Real part of `s`; defaults to the centre of the critical strip.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_enum, default_value_t = Quantity::L)]
        quantity: Quantity,
    },
    /// Sign changes of a real signature on the critical line.
    #[command(args_override_self = true)]
    Scan {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        range: Range,
        #[arg(long, value_enum, default_value_t = Sig::Plus)]
        signature: Sig,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Zeros of `Λ` inside a rectangle by the argument principle.
    #[command(args_override_self = true)]
    RectCount {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long)]
        re0: Option<f64>,
        #[arg(long)]
        re1: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 30.0)]
        t1: f64,
    },
    /// The twisted signature `Z_{p/q}(t)` as rows `t,re,im,abs_err`.
    #[command(args_override_self = true)]
    TwistScan {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        range: Range,
        #[arg(long, default_value_t = 1)]
        p: i64,
        #[arg(long, default_value_t = 4)]
        q: i64,
    },
    /// Critical-line zero counts at increasing heights.
    #[command(args_override_self = true)]
    Growth {
        #[command(flatten)]
        form: FormArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [25.0, 50.0, 75.0, 100.0])]
        checkpoints: Vec<f64>,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Numerical checks of the identities and bounds; `all` runs every check.
    #[command(args_override_self = true)]
    Verify {
        /// A check name or `all`.
        check: String,
        #[command(flatten)]
        form: FormArgs,
    },
    /// Plot data for external tools, written as files into a directory.
    #[command(args_override_self = true)]
    Report {
        #[command(flatten)]
        form: FormArgs,
        #[command(flatten)]
        range: Range,
        #[arg(long, default_value = "report")]
        dir: PathBuf,
        /// Random points for the functional-equation sample (uses `--seed`).
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_domain() {
            Failure::Domain(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    if let Some(path) = config::config_path(&args) {
        match config::config_flags(Path::new(&path)) {
            Ok(extra) => args = config::splice(&args, extra),
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nUsage: halfint [OPTIONS] <COMMAND>\nRun `halfint --help` for the list of commands.");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn sink(cli: &Cli) -> std::io::Result<Box<dyn Write>> {
    Ok(match &cli.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn check_range(r: &Range) -> Result<(), Failure> {
    if !(r.t0 < r.t1) || !(r.step > 0.0) {
        return Err(Failure::Usage(format!("need t0 < t1 and step > 0, got t0={} t1={} step={}", r.t0, r.t1, r.step)));
    }
    Ok(())
}

fn grid(r: &Range) -> Vec<f64> {
    let n = ((r.t1 - r.t0) / r.step + 1e-9).floor() as usize;
    (0..=n).map(|i| r.t0 + i as f64 * r.step).collect()
}

/// Loads the form. The built-in form's coefficients are memoized as
/// `yoshida_g-<terms>.csv` under `HIL_CACHE_DIR` when that is set.
fn load_form(f: &FormArgs, default_terms: usize) -> Result<HalfIntegralForm, Failure> {
    let terms = f.terms.unwrap_or(default_terms);
    if terms == 0 {
        return Err(Failure::Usage("--terms must be positive".into()));
    }
    let cache = std::env::var_os("HIL_CACHE_DIR").map(PathBuf::from);
    if let (Some(dir), "yoshida_g", None) = (&cache, f.form.as_str(), &f.registry) {
        let path = dir.join(format!("yoshida_g-{terms}.csv"));
        if !path.exists() {
            std::fs::create_dir_all(dir)?;
            let tmp = dir.join(format!("yoshida_g-{terms}.csv.{}", std::process::id()));
            g_form_coeffs(terms)?.write_csv(File::create(&tmp)?)?;
            std::fs::rename(&tmp, &path)?;
        }
        let coeffs = read_coeff_file(&path)?.into_iter().map(|a| Complex64::new(a, 0.0)).collect();
        return Ok(HalfIntegralForm::new("yoshida_g", 4, 1, coeffs, Fricke::Eigenvalue(1), CoeffClass::Real)?);
    }
    Ok(resolve_form(&f.form, f.registry.as_deref(), terms)?)
}

fn lvalue_row(t: f64, v: LValue) -> Vec<Value> {
    vec![num(t), num(v.value.re), num(v.value.im), num(v.abs_err)]
}

fn run(cli: &Cli) -> Outcome {
    let mut out = sink(cli)?;
    let code = match &cli.command {
        Command::Coeffs { form, limit } => {
            let g = load_form(form, *limit)?;
            if *limit > g.len() {
                return Err(Error::InsufficientCoefficients { needed: *limit, available: g.len() }.into());
            }
            let mut t = Table::new(&["n", "a(n)"]);
            for n in 1..=*limit {
                let a = g.coeff(n);
                let a = if g.coeff_class() == CoeffClass::Real { a.re } else { a.im };
                let cell = if a.fract() == 0.0 && a.abs() < 9.0e15 { Value::from(a as i64) } else { num(a) };
                t.push(vec![Value::from(n), cell]);
            }
            t.write(cli.format, &mut out)?;
            ExitCode::SUCCESS
        }
        Command::Eval { form, range, sigma, quantity } => {
            check_range(range)?;
            let g = load_form(form, YOSHIDA_DEFAULT_TERMS)?;
            let sigma = sigma.unwrap_or(g.critical_re());
            let rows: Vec<Vec<Value>> = grid(range)
                .par_iter()
                .map(|&t| {
                    let s = Complex64::new(sigma, t);
                    Ok(match quantity {
                        Quantity::Lambda => lvalue_row(t, lambda_completed(&g, s)?),
                        Quantity::L => lvalue_row(t, l_value(&g, s)?),
                        Quantity::R => {
                            let v = r_f(&g, t)?;
                            vec![num(t), num(v.value), num(0.0), num(v.abs_err)]
                        }
                        Quantity::I => {
                            let v = i_f(&g, t)?;
                            vec![num(t), num(v.value), num(0.0), num(v.abs_err)]
                        }
                    })
                })
                .collect::<Result<_, Error>>()?;
            Table { columns: vec!["t", "re", "im", "abs_err"], rows }.write(cli.format, &mut out)?;
            ExitCode::SUCCESS
        }
        Command::Scan { form, range, signature, tol } => {
            check_range(range)?;
            let g = load_form(form, YOSHIDA_DEFAULT_TERMS)?;
            let which: Signature = (*signature).into();
            let report = scan_sign_changes(|t| normalized_signature(&g, t, which), range.t0, range.t1, range.step, *tol)?;
            write_scan(&report, cli.format, &mut out)?;
            ExitCode::SUCCESS
        }
        Command::RectCount { form, re0, re1, t0, t1 } => {
            let g = load_form(form, YOSHIDA_DEFAULT_TERMS)?;
            let c = g.critical_re();
            let (re0, re1) = (re0.unwrap_or(c - 1.5), re1.unwrap_or(c + 1.5));
            let count = count_zeros_rectangle(&g, re0, re1, *t0, *t1)?;
            let mut t = Table::new(&["re_lo", "re_hi", "t_lo", "t_hi", "count"]);
            t.push(vec![num(re0), num(re1), num(*t0), num(*t1), Value::from(count)]);
            t.write(cli.format, &mut out)?;
            ExitCode::SUCCESS
        }
        Command::TwistScan { form, range, p, q } => {
            check_range(range)?;
            let g = load_form(form, YOSHIDA_DEFAULT_TERMS)?;
            let tw = TwistSpec::new(*p, *q, 4 * g.level_n() as i64)?;
            let rows: Vec<Vec<Value>> = grid(range)
                .par_iter()
                .map(|&t| Ok(lvalue_row(t, z_twisted(&g, &tw, t)?)))
                .collect::<Result<_, Error>>()?;
            Table { columns: vec!["t", "re", "im", "abs_err"], rows }.write(cli.format, &mut out)?;
            ExitCode::SUCCESS
        }
        Command::Growth { form, checkpoints, step, tol } => {
            let g = load_form(form, YOSHIDA_DEFAULT_TERMS)?;
            let (rows, _, _) = n0_growth(&g, checkpoints, *step, *tol)?;
            let mut t = Table::new(&["T", "n_plus", "n_minus", "n_plus_over_t", "n_plus_over_sqrt_t"]);
            for r in rows {
                t.push(vec![num(r.t), Value::from(r.n_plus), Value::from(r.n_minus), num(r.n_plus_over_t), num(r.n_plus_over_sqrt_t)]);
            }
            t.write(cli.format, &mut out)?;
            ExitCode::SUCCESS
        }
        Command::Verify { check, form } => {
            if check != "all" && !CHECK_NAMES.contains(&check.as_str()) {
                return Err(Failure::Usage(format!("unknown check {check}; expected `all` or one of {}", CHECK_NAMES.join(", "))));
            }
            let g = load_form(form, VERIFY_TERMS)?;
            let results = if check == "all" { verify_all(&g) } else { vec![run_check(check, &g)?] };
            match cli.format {
                Format::Json => write_json(&results, &mut out)?,
                Format::Csv => summary_table(&results).write(Format::Csv, &mut out)?,
            }
            eprint!("{}", human_summary(&results));
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Report { form, range, dir, samples } => {
            check_range(range)?;
            let g = load_form(form, YOSHIDA_DEFAULT_TERMS)?;
            write_report(&g, range, dir, *samples, cli.seed, cli.format)?;
            writeln!(out, "{}", dir.display())?;
            ExitCode::SUCCESS
        }
    };
    out.flush()?;
    Ok(code)
}

fn write_scan(report: &ZeroScanReport, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Json => write_json(report, out),
        Format::Csv => {
            let mut t = Table::new(&["ordinate", "lo", "hi"]);
            for (o, b) in report.ordinates.iter().zip(&report.brackets) {
                t.push(vec![num(*o), num(b.lo), num(b.hi)]);
            }
            t.write(Format::Csv, out)
        }
    }
}

fn summary_table(results: &[CheckResult]) -> Table {
    let mut t = Table::new(&["name", "residual", "tolerance", "passed"]);
    for r in results {
        t.push(vec![Value::from(r.name.clone()), num(r.residual_or_sup), num(r.tolerance), Value::from(r.passed)]);
    }
    t
}

fn human_summary(results: &[CheckResult]) -> String {
    let mut s = format!("{:<24} {:>12} {:>12}  result\n", "check", "residual", "tolerance");
    for r in results {
        s += &format!("{:<24} {:>12.3e} {:>12.3e}  {}\n", r.name, r.residual_or_sup, r.tolerance, if r.passed { "PASS" } else { "FAIL" });
    }
    let passed = results.iter().filter(|r| r.passed).count();
    s += &format!("{passed}/{} passed\n", results.len());
    s
}

/// Signatures, scan and a seeded functional-equation sample, one file each.
fn write_report(g: &HalfIntegralForm, range: &Range, dir: &Path, samples: usize, seed: u64, format: Format) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)?;
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let rows: Vec<Vec<Value>> = grid(range)
        .par_iter()
        .map(|&t| {
            let (r, i) = (r_f(g, t)?, i_f(g, t)?);
            Ok(vec![num(t), num(r.value), num(r.abs_err), num(i.value), num(i.abs_err)])
        })
        .collect::<Result<_, Error>>()?;
    let sig = Table { columns: vec!["t", "r_f", "r_f_abs_err", "i_f", "i_f_abs_err"], rows };
    sig.write(format, &mut BufWriter::new(File::create(dir.join(format!("signatures.{ext}")))?))?;

    let scan = scan_sign_changes(|t| normalized_signature(g, t, Signature::Plus), range.t0, range.t1, range.step, 1e-10)?;
    write_scan(&scan, format, &mut BufWriter::new(File::create(dir.join(format!("zeros.{ext}")))?))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Complex64> = (0..samples)
        .map(|_| Complex64::new(rng.gen_range(-1.0..=g.weight() + 1.0), rng.gen_range(-40.0..=40.0)))
        .collect();
    let rows: Vec<Vec<Value>> = points
        .par_iter()
        .map(|&s| {
            let a = lambda_completed(g, s)?;
            let b = lambda_completed(g, Complex64::new(g.weight(), 0.0) - s)?;
            Ok(vec![num(s.re), num(s.im), num((a.value - b.value).norm()), num(a.abs_err.max(b.abs_err))])
        })
        .collect::<Result<_, Error>>()?;
    let fe = Table { columns: vec!["re_s", "im_s", "gap", "abs_err"], rows };
    fe.write(format, &mut BufWriter::new(File::create(dir.join(format!("functional_equation.{ext}")))?))?;
    Ok(())
}
