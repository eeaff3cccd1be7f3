//! Command-line frontend: evaluate expressions on the lattice, run
//! quantifiers, drive verification suites, and emit plot data, all under
//! one reproducible run configuration.
//!
//! Exit codes: 0 success, 1 verification failure, 2 expression parse
//! error, 3 precondition violation, 4 I/O error.

use clap::{Parser, Subcommand, ValueEnum};
use latticeq::dsl::{classify, eval_expr, parse, print_canonical, Bindings, ClassifiedPredicate, Var};
use latticeq::forms::{GaussianPredicate, PerturbedGaussianPredicate, Rational, SampledPredicate};
use latticeq::quantifier::{global_term_count, LocalMode, LocalOutcome};
use latticeq::report::{json_complex, json_num, Report};
use latticeq::verify;
use latticeq::{
    global_quantify, local_quantify, window_quantify, Error, FiniteUniverse, Interval,
    KPredicate, Window,
};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

const DEFAULT_COST_CEILING: u64 = 500_000_000;

fn clap_size(s: &str) -> Result<u64, String> {
    parse_size(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "latticeq",
    about = "Finite lattice phase sums: evaluation, quantifiers, verification",
    version
)]
struct Cli {
    /// Universe size n (even). Scientific notation accepted, e.g. 4e4;
    /// sweep suites also take comma lists and A..B ladders.
    #[arg(long, global = true)]
    n: Option<String>,

    /// Planck integer h_n, coprime to n.
    #[arg(long = "hn", global = true)]
    h_n: Option<u64>,

    /// Worker thread count (default: LATTICEQ_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Config file with key=value lines (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format on stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Refuse summations above this many terms.
    #[arg(long = "cost-ceiling", global = true)]
    cost_ceiling: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse, classify, and evaluate an expression at lattice points.
    Eval {
        /// Expression text, e.g. "exp(-pi*i*k^2/n)".
        expr: String,
        /// Lattice point(s) k to evaluate at.
        #[arg(long = "at", required = true)]
        at: Vec<i64>,
        /// Values for the parameters p1, p2, … in order.
        #[arg(long = "param")]
        params: Vec<i64>,
    },
    /// Apply a quantifier to an expression.
    Quantify {
        expr: String,
        /// Global one-period quantifier E^glob.
        #[arg(long, conflicts_with_all = ["local", "window"])]
        global: bool,
        /// Local sequence E^(m) for m = 1..m_max.
        #[arg(long, conflicts_with_all = ["global", "window"])]
        local: bool,
        /// Windowed quantifier E^(m1,m2): two real endpoints.
        #[arg(long, num_args = 2, allow_negative_numbers = true)]
        window: Vec<f64>,
        #[arg(long = "param")]
        params: Vec<i64>,
    },
    /// Run a verification suite and write JSON + CSV reports.
    Verify {
        /// gauss | local-global | converge | fourier | weyl | propagator | anharmonic
        suite: String,
        /// Leading coefficient a (rational, e.g. 3/2).
        #[arg(long)]
        a: Option<String>,
        /// Linear coefficient b (rational).
        #[arg(long)]
        b: Option<String>,
        /// Universe sizes, comma separated.
        #[arg(long = "n-list")]
        n_list: Option<String>,
        /// Convergence quantity: envelope | norm | both.
        #[arg(long)]
        quantity: Option<String>,
        /// Oscillator level H. Scientific notation accepted.
        #[arg(long = "H", value_parser = clap_size)]
        big_h: Option<u64>,
        /// Quartic divisor L, or "auto" to derive from --lambda-h.
        #[arg(long = "L")]
        big_l: Option<String>,
        /// Target λ𝐡 when --L auto.
        #[arg(long = "lambda-h")]
        lambda_h: Option<f64>,
        /// Random-state trials for operator suites.
        #[arg(long)]
        trials: Option<u64>,
        /// Evolution time for the propagator suite.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Extract plot columns from an existing report file.
    Plotdata {
        /// Path to a report JSON written by `verify`.
        report: PathBuf,
        /// Columns to extract (defaults chosen by report kind).
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
    },
    /// Print the derived constants of a universe.
    UniverseInfo,
}

/// Effective run configuration after merging flags, config file, and
/// defaults. Echoed into every report.
#[derive(Debug, Clone)]
struct RunConfig {
    n: Option<String>,
    h_n: u64,
    threads: Option<usize>,
    out: PathBuf,
    format: Format,
    cost_ceiling: u64,
}

impl RunConfig {
    fn echo(&self) -> Value {
        let mut m = serde_json::Map::new();
        if let Some(spec) = &self.n {
            match parse_size(spec) {
                Ok(n) => m.insert("n".into(), Value::from(n)),
                Err(_) => m.insert("n".into(), Value::from(spec.clone())),
            };
        }
        m.insert("h_n".into(), Value::from(self.h_n));
        if let Some(t) = self.threads {
            m.insert("threads".into(), Value::from(t as u64));
        }
        m.insert("out".into(), Value::from(self.out.display().to_string()));
        m.insert(
            "format".into(),
            Value::from(match self.format {
                Format::Json => "json",
                Format::Csv => "csv",
            }),
        );
        m.insert("cost_ceiling".into(), Value::from(self.cost_ceiling));
        Value::Object(m)
    }

    fn single_n(&self) -> Result<Option<u64>, Error> {
        self.n.as_deref().map(parse_size).transpose()
    }

    fn universe(&self) -> Result<FiniteUniverse, Error> {
        let n = self.single_n()?.ok_or_else(|| {
            Error::Precondition("this command needs a universe size: pass --n".into())
        })?;
        FiniteUniverse::new(n, self.h_n)
    }

    fn guard(&self, terms: u64) -> Result<(), Error> {
        if terms > self.cost_ceiling {
            return Err(Error::CostGuard {
                estimated: terms,
                ceiling: self.cost_ceiling,
            });
        }
        Ok(())
    }
}

fn parse_kv_config(path: &Path) -> Result<BTreeMap<String, String>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Precondition(format!(
                "config {}:{}: expected key=value, got {raw:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn config_get<T: FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, Error> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
            Error::Precondition(format!("config key {key}: cannot parse value {raw:?}"))
        }),
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Error> {
    let file = match &cli.config {
        Some(path) => parse_kv_config(path)?,
        None => BTreeMap::new(),
    };
    for key in file.keys() {
        if !matches!(
            key.as_str(),
            "n" | "hn" | "threads" | "out" | "format" | "cost_ceiling"
        ) {
            return Err(Error::Precondition(format!("config: unknown key {key:?}")));
        }
    }
    let format = match cli.format {
        Some(f) => f,
        None => match file.get("format").map(String::as_str) {
            None => Format::Json,
            Some("json") => Format::Json,
            Some("csv") => Format::Csv,
            Some(other) => {
                return Err(Error::Precondition(format!(
                    "config key format: expected json or csv, got {other:?}"
                )))
            }
        },
    };
    Ok(RunConfig {
        n: cli.n.clone().or_else(|| file.get("n").cloned()),
        h_n: cli.h_n.or(config_get(&file, "hn")?).unwrap_or(1),
        threads: cli.threads.or(config_get(&file, "threads")?),
        out: cli
            .out
            .clone()
            .or_else(|| file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".")),
        format,
        cost_ceiling: cli
            .cost_ceiling
            .or(config_get(&file, "cost_ceiling")?)
            .unwrap_or(DEFAULT_COST_CEILING),
    })
}

fn init_thread_pool(config: &RunConfig) {
    let from_env = std::env::var("LATTICEQ_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(t) = config.threads.or(from_env) {
        // Determinism does not depend on pool width; this only sizes the
        // worker pool. A second initialization in-process is impossible
        // because main runs once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
}

fn parse_rational(text: &str, flag: &str) -> Result<Rational, Error> {
    Rational::from_str(text.trim())
        .map_err(|e| Error::Precondition(format!("--{flag}: cannot parse {text:?}: {e}")))
}

fn emit(report: &Report, config: &RunConfig) -> Result<(), Error> {
    match config.format {
        Format::Json => print!("{}", report.to_json_string()),
        Format::Csv => print!("{}", report.to_csv_string()),
    }
    Ok(())
}

/// Bindings for evaluating an expression at lattice point k with the given
/// parameter values.
fn bindings_at(k: i64, params: &[i64], u: &FiniteUniverse) -> Bindings {
    let mut b = Bindings::with_n(u.n());
    b.k = Some(k);
    b.x = Some(k as f64 * u.spacing());
    for (j, &v) in params.iter().enumerate() {
        b.params.insert(j as u32 + 1, v);
    }
    b
}

fn tag_name(c: &ClassifiedPredicate) -> &'static str {
    match c {
        ClassifiedPredicate::Gaussian { .. } => "gaussian",
        ClassifiedPredicate::PerturbedGaussian { .. } => "perturbed-gaussian",
        ClassifiedPredicate::Sampled => "sampled",
    }
}

fn cmd_eval(
    config: &RunConfig,
    expr_text: &str,
    at: &[i64],
    params: &[i64],
) -> Result<Report, Error> {
    let u = config.universe()?;
    let expr = parse(expr_text)?;
    let classified = classify(&expr)?;
    let mut report = Report::new("eval");
    report.set_param("config", config.echo());
    report.set_param("expr", Value::from(expr_text));
    report.set_param("canonical", Value::from(print_canonical(&expr)?));
    report.set_param("classified", Value::from(tag_name(&classified)));
    for &k in at {
        // Points are accepted on the closed interval [−n/2, n/2]: the top
        // endpoint is the cyclic seam of the lattice and phase evaluation
        // is exact at the literal integer, so no wrapping is applied.
        let half = u.n() as i64 / 2;
        if k < -half || k > half {
            return Err(Error::Precondition(format!(
                "eval point {k} outside the accepted range [{}, {half}]",
                -half
            )));
        }
        let x = k as f64 * u.spacing();
        // Classified forms evaluate through the core predicates (exact
        // rational phase reduction); anything else through the DSL
        // evaluator.
        let value = match &classified {
            ClassifiedPredicate::Gaussian { eta, vars, form } => {
                let coords: Vec<i64> = vars
                    .iter()
                    .map(|v| match v {
                        Var::K => Ok(k),
                        Var::P(j) => params.get(*j as usize - 1).copied().ok_or_else(|| {
                            Error::Precondition(format!(
                                "expression uses p{j} but only {} --param values given",
                                params.len()
                            ))
                        }),
                        Var::X => Err(Error::Precondition(
                            "classified Gaussian cannot contain x".into(),
                        )),
                    })
                    .collect::<Result<_, Error>>()?;
                let pred = GaussianPredicate::new(eta.to_complex(), form.clone());
                latticeq::forms::eval_gaussian(&pred, &coords, &u)?
            }
            ClassifiedPredicate::PerturbedGaussian { big_h, big_l } => {
                PerturbedGaussianPredicate::new(*big_h, *big_l)?.eval(k, &u)
            }
            ClassifiedPredicate::Sampled => eval_expr(&expr, &bindings_at(k, params, &u))?,
        };
        let mut row = BTreeMap::new();
        row.insert("k".to_string(), Value::from(k));
        row.insert("x".to_string(), json_num(x));
        row.insert("value".to_string(), json_complex(value));
        report.push_row(row);
    }
    Ok(report)
}

/// Build the K-predicate for a quantifier run from a classified expression.
/// Sampled expressions become closures over the embedding coordinate,
/// validated once before the closure is trusted.
fn predicate_for_quantifier(
    expr_text: &str,
    params: &[i64],
    domain: Interval,
    u: &FiniteUniverse,
) -> Result<(KPredicate, Vec<i64>), Error> {
    let expr = parse(expr_text)?;
    match classify(&expr)? {
        ClassifiedPredicate::Gaussian { eta, vars, form } => {
            let k_index = vars
                .iter()
                .position(|v| *v == Var::K)
                .ok_or_else(|| Error::Precondition(
                    "quantifier needs the expression to contain k".into(),
                ))?;
            let mut p_bar = Vec::new();
            for v in &vars {
                match v {
                    Var::K => {}
                    Var::P(j) => p_bar.push(
                        params.get(*j as usize - 1).copied().ok_or_else(|| {
                            Error::Precondition(format!(
                                "expression uses p{j} but only {} --param values given",
                                params.len()
                            ))
                        })?,
                    ),
                    Var::X => {
                        return Err(Error::Precondition(
                            "classified Gaussian cannot contain x".into(),
                        ))
                    }
                }
            }
            let pred = GaussianPredicate::new(eta.to_complex(), form);
            Ok((KPredicate::gaussian_in(pred, k_index), p_bar))
        }
        ClassifiedPredicate::PerturbedGaussian { big_h, big_l } => {
            let pred = PerturbedGaussianPredicate::new(big_h, big_l)?;
            pred.validate_for(u)?;
            Ok((KPredicate::perturbed(pred), Vec::new()))
        }
        ClassifiedPredicate::Sampled => {
            let delta = u.spacing();
            let params = params.to_vec();
            let u_copy = *u;
            // Probe once so unbound variables and literal-zero divisions
            // surface as command errors instead of closure panics.
            let probe_k = (domain.lo() / delta).round() as i64 + 1;
            eval_expr(&expr, &bindings_at(probe_k, &params, u))?;
            let f = move |x: f64| {
                let k = (x / delta).round() as i64;
                eval_expr(&expr, &bindings_at(k, &params, &u_copy))
                    .expect("probed expression evaluates on its domain")
            };
            Ok((
                KPredicate::sampled(SampledPredicate::univariate(domain, f)),
                Vec::new(),
            ))
        }
    }
}

fn cmd_quantify(
    config: &RunConfig,
    expr_text: &str,
    global: bool,
    local: bool,
    window: &[f64],
    params: &[i64],
) -> Result<Report, Error> {
    let u = config.universe()?;
    let mut report = Report::new("quantify");
    report.set_param("config", config.echo());
    report.set_param("expr", Value::from(expr_text));

    if global {
        let domain = Interval::new(u.lo() as f64 * u.spacing(), u.hi() as f64 * u.spacing())?;
        let (pred, p_bar) = predicate_for_quantifier(expr_text, params, domain, &u)?;
        config.guard(global_term_count(&pred, &u, &p_bar)?)?;
        let out = global_quantify(&pred, &u, &p_bar)?;
        report.set_param("mode", Value::from("global"));
        let mut row = BTreeMap::new();
        row.insert("result".to_string(), out.to_json());
        report.push_row(row);
    } else if local {
        let domain = Interval::new(u.lo() as f64 * u.spacing(), u.hi() as f64 * u.spacing())?;
        let (pred, p_bar) = predicate_for_quantifier(expr_text, params, domain, &u)?;
        // The local sequence sums ~m_max²·√n/2 terms in total.
        let m_max = u.max_local_window();
        let per_window = Window::symmetric(m_max as f64)?.lattice_range(&u);
        let total = (m_max as u64) * ((per_window.1 - per_window.0 + 1) as u64);
        config.guard(total)?;
        report.set_param("mode", Value::from("local"));
        match local_quantify(&pred, &u, &p_bar, LocalMode::Sequence)? {
            LocalOutcome::Sequence(seq) => {
                for (m, res) in seq {
                    let mut row = BTreeMap::new();
                    row.insert("m".to_string(), Value::from(m));
                    row.insert("result".to_string(), res.to_json());
                    report.push_row(row);
                }
            }
            LocalOutcome::Single(res) => {
                let mut row = BTreeMap::new();
                row.insert("result".to_string(), res.to_json());
                report.push_row(row);
            }
        }
    } else if window.len() == 2 {
        let w = Window::new(window[0], window[1])?;
        w.validate_for(&u)?;
        let domain = Interval::new(window[0], window[1])?;
        let (pred, p_bar) = predicate_for_quantifier(expr_text, params, domain, &u)?;
        let (lo, hi) = w.lattice_range(&u);
        config.guard((hi - lo + 1).max(0) as u64)?;
        let out = window_quantify(&pred, w, &u, &p_bar)?;
        report.set_param("mode", Value::from("window"));
        report.set_param("m1", json_num(window[0]));
        report.set_param("m2", json_num(window[1]));
        let mut row = BTreeMap::new();
        row.insert("result".to_string(), out.to_json());
        report.push_row(row);
    } else {
        return Err(Error::Precondition(
            "quantify needs a mode: --global, --local, or --window m1 m2".into(),
        ));
    }
    Ok(report)
}

/// Parse a size that may use scientific notation: "40000", "4e4", "2.56e6".
fn parse_size(text: &str) -> Result<u64, Error> {
    let t = text.trim();
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    match t.parse::<f64>() {
        Ok(v) if v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        _ => Err(Error::Precondition(format!(
            "expected a positive integer (scientific notation accepted), got {t:?}"
        ))),
    }
}

/// Comma-separated sizes, where an entry "A..B" expands to the ×4 ladder
/// A, 4A, 16A, … ≤ B.
fn parse_n_list(text: &str) -> Result<Vec<u64>, Error> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let t = part.trim();
        match t.split_once("..") {
            Some((lo, hi)) => {
                let lo = parse_size(lo)?;
                let hi = parse_size(hi)?;
                if lo == 0 || hi < lo {
                    return Err(Error::Precondition(format!("--n-list: bad range {t:?}")));
                }
                let mut n = lo;
                while n <= hi {
                    out.push(n);
                    n = n.saturating_mul(4);
                }
            }
            None => out.push(parse_size(t)?),
        }
    }
    Ok(out)
}

fn cmd_verify(config: &RunConfig, cmd: &Command) -> Result<Report, Error> {
    let Command::Verify {
        suite,
        a,
        b,
        n_list,
        quantity,
        big_h,
        big_l,
        lambda_h,
        trials,
        t,
    } = cmd
    else {
        unreachable!("cmd_verify receives the Verify command");
    };
    let mut report = match suite.as_str() {
        "gauss" => {
            let a = parse_rational(a.as_deref().unwrap_or("1"), "a")?;
            let b = parse_rational(b.as_deref().unwrap_or("0"), "b")?;
            let n = config.single_n()?.unwrap_or(1_441_440);
            let b_form = if num_traits::Zero::is_zero(&b) {
                latticeq::LinearForm::zero(0)
            } else {
                latticeq::LinearForm::new(Vec::new(), b)
            };
            verify::gauss_lemma_check(&a, &b_form, &[vec![]], n)?
        }
        "local-global" => {
            let a = parse_rational(a.as_deref().unwrap_or("1"), "a")?;
            let b = parse_rational(b.as_deref().unwrap_or("0"), "b")?;
            let n = config.single_n()?.unwrap_or(1_000_000);
            verify::local_global_check(&a, &b, n)?
        }
        "converge" => {
            let ns = match n_list.as_deref().or(config.n.as_deref()) {
                Some(text) => parse_n_list(text)?,
                None => vec![10_000, 40_000, 160_000, 640_000, 2_560_000],
            };
            match quantity.as_deref() {
                None | Some("both") => verify::suite_converge(&ns)?,
                Some(which) => {
                    let q = match which {
                        "envelope" | "gauss-envelope-window" => {
                            verify::SweepQuantity::gauss_envelope_window()
                        }
                        "norm" | "gaussian-norm" | "normalized-gaussian-norm" => {
                            verify::SweepQuantity::normalized_gaussian_norm()
                        }
                        other => {
                            return Err(Error::Precondition(format!(
                                "--quantity: expected envelope, norm, or both, got {other:?}"
                            )))
                        }
                    };
                    let swept = verify::convergence_sweep(&q, &ns)?;
                    let mut r = Report::new("converge");
                    r.set_param("quantity", Value::from(q.id.as_str()));
                    r.set_tolerance("alpha_lo", verify::tol::ALPHA_LO);
                    r.set_tolerance("alpha_hi", verify::tol::ALPHA_HI);
                    for row in &swept.rows {
                        let mut m = BTreeMap::new();
                        m.insert("n".to_string(), Value::from(row.n));
                        m.insert("finite".to_string(), json_num(row.finite));
                        m.insert("reference".to_string(), json_num(row.reference));
                        m.insert("abs_error".to_string(), json_num(row.abs_error));
                        m.insert("bound".to_string(), json_num(row.bound));
                        m.insert(
                            "row_pass".to_string(),
                            Value::Bool(row.abs_error <= row.bound),
                        );
                        r.push_row(m);
                    }
                    let ok = swept.alpha >= verify::tol::ALPHA_LO
                        && swept.alpha <= verify::tol::ALPHA_HI;
                    let mut m = BTreeMap::new();
                    m.insert("alpha".to_string(), json_num(swept.alpha));
                    m.insert("row_pass".to_string(), Value::Bool(ok));
                    r.push_row(m);
                    r
                }
            }
        }
        "fourier" => {
            let n = config.single_n()?.unwrap_or(4096);
            verify::suite_fourier(n, trials.unwrap_or(20))?
        }
        "weyl" => {
            let ns = match n_list.as_deref().or(config.n.as_deref()) {
                Some(text) => parse_n_list(text)?,
                None => vec![16, 256, 4096],
            };
            verify::suite_weyl(&ns, trials.unwrap_or(100))?
        }
        "propagator" => {
            let n = config.single_n()?.unwrap_or(40_000);
            verify::suite_propagator(n, t.unwrap_or(1.0))?
        }
        "anharmonic" => match big_h {
            Some(h) => {
                let l = match (big_l.as_deref(), lambda_h) {
                    (Some("auto") | None, Some(target)) => {
                        let rho = config.single_n()?.map(|n| n / h).unwrap_or(6) as f64;
                        (rho / (2.0 * std::f64::consts::PI * target)).round().max(1.0) as u64
                    }
                    (Some(text), _) => text.parse::<u64>().map_err(|_| {
                        Error::Precondition(format!("--L: expected integer or auto, got {text:?}"))
                    })?,
                    (None, None) => {
                        return Err(Error::Precondition(
                            "anharmonic needs --L <int> or --lambda-h <target> with --L auto"
                                .into(),
                        ))
                    }
                };
                let n = config.single_n()?.unwrap_or(6 * h);
                verify::anharmonic_check(*h, l, n)?.to_report()
            }
            None => verify::suite_anharmonic(
                &[10_000, 20_000, 40_000],
                &[0.005, 0.01, 0.02],
                6,
            )?,
        },
        other => {
            return Err(Error::Precondition(format!(
                "unknown suite {other:?}: expected gauss, local-global, converge, fourier, weyl, propagator, or anharmonic"
            )))
        }
    };
    report.set_param("config", config.echo());
    std::fs::create_dir_all(&config.out)?;
    report.write_files(&config.out, &format!("verify-{suite}"))?;
    Ok(report)
}

/// Default plot columns by report kind.
fn default_columns(kind: &str) -> Option<(&'static str, &'static str)> {
    match kind {
        "converge" => Some(("n", "abs_error")),
        "local-global" => Some(("m", "tail_gap")),
        "delta" => Some(("p", "residual")),
        "anharmonic" => Some(("lambda_h", "residual")),
        "propagator" => Some(("r", "rel_deviation")),
        _ => None,
    }
}

fn cmd_plotdata(report_path: &Path, columns: &[String]) -> Result<String, Error> {
    let text = std::fs::read_to_string(report_path)?;
    let report = Report::from_json_str(&text)?;
    let cols: Vec<String> = if columns.is_empty() {
        let (x, y) = default_columns(&report.kind).ok_or_else(|| {
            Error::Precondition(format!(
                "report kind {:?} has no default plot columns: pass --columns",
                report.kind
            ))
        })?;
        vec![x.to_string(), y.to_string()]
    } else {
        columns.to_vec()
    };
    let mut out = String::new();
    out.push_str(&cols.join(","));
    out.push('\n');
    for row in &report.rows {
        // Skip rows missing the x column (summary rows).
        if !row.contains_key(&cols[0]) {
            continue;
        }
        let rendered: Vec<String> = cols
            .iter()
            .map(|c| match row.get(c) {
                None | Some(Value::Null) => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
            })
            .collect();
        out.push_str(&rendered.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn cmd_universe_info(config: &RunConfig) -> Result<Report, Error> {
    let u = config.universe()?;
    let mut report = Report::new("universe-info");
    report.set_param("config", config.echo());
    let mut row = BTreeMap::new();
    row.insert("n".to_string(), Value::from(u.n()));
    row.insert("h_n".to_string(), Value::from(u.h_n()));
    row.insert("spacing".to_string(), json_num(u.spacing()));
    row.insert("nu".to_string(), json_num(u.nu()));
    row.insert("lo".to_string(), Value::from(u.lo()));
    row.insert("hi".to_string(), Value::from(u.hi()));
    row.insert("diameter".to_string(), json_num((u.n() as f64) * u.spacing()));
    row.insert("max_local_window".to_string(), Value::from(u.max_local_window()));
    report.push_row(row);
    Ok(report)
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let config = resolve_config(cli)?;
    init_thread_pool(&config);
    let report = match &cli.command {
        Command::Eval { expr, at, params } => cmd_eval(&config, expr, at, params)?,
        Command::Quantify {
            expr,
            global,
            local,
            window,
            params,
        } => cmd_quantify(&config, expr, *global, *local, window, params)?,
        cmd @ Command::Verify { .. } => cmd_verify(&config, cmd)?,
        Command::Plotdata { report, columns } => {
            print!("{}", cmd_plotdata(report, columns)?);
            return Ok(true);
        }
        Command::UniverseInfo => cmd_universe_info(&config)?,
    };
    emit(&report, &config)?;
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_parse() {
                2
            } else if matches!(e, Error::Io(_)) {
                4
            } else {
                3
            };
            ExitCode::from(code)
        }
    }
}
