//! `qfib`: QFI upper bounds for Markovian sensing models from the command
//! line. Classifies models, computes the norm trade-off curve, and
//! integrates the time-domain bound, writing CSV/JSON/SVG deterministically.
//!
//! Exit codes: 0 success, 1 input parse/validation failure, 2 solver did
//! not reach certified optimality (partial output is still written),
//! 64 usage error.

use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qfi_bounds::bound::{
    asymptotes, integrate_bound, write_trace_csv, Asymptote, BoundTrace, IntegratorConfig,
    StepPolicy,
};
use qfi_bounds::model::{
    builtin_model, load_model, model_to_json, validate_model, BuiltinModelId,
};
use qfi_bounds::scaling::{
    ab_curve_from, classify, compute_constants, transition_times, write_curve_csv, ABCurve,
    ConstantsReport, TransitionTimes, DEFAULT_EPS_ZERO,
};
use qfi_bounds::sdp::{SolveStatus, SolverConfig};
use qfi_bounds::svg::{render_loglog, Plot};
use qfi_bounds::{MarkovianModel, ScalingConstants};

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 1;
const EXIT_SOLVER: i32 = 2;
const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "qfib",
    version,
    about = "Upper bounds on the quantum Fisher information of noisy sensing models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a builtin model as a JSON model file.
    Builtin {
        /// Model code: PD, RD, PDDS, PDDD or NOISELESS.
        id: String,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, default_value_t = 0.4)]
        gamma: f64,
        /// Output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute scaling constants, class and transition times (JSON).
    Classify(JobArgs),
    /// Compute the trade-off curve between the two norms (CSV or JSON).
    Abcurve(JobArgs),
    /// Integrate the bound F(t) (CSV, JSON or SVG).
    Bound(JobArgs),
    /// Full JSON report: constants, class, times, curve, trace, asymptotes.
    Report(JobArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "builtin"])))]
struct JobArgs {
    /// Path to a JSON model file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Builtin model code: PD, RD, PDDS, PDDD or NOISELESS.
    #[arg(long)]
    builtin: Option<String>,
    /// Hamiltonian derivative scale for builtin models.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Noise rate for builtin models.
    #[arg(long, default_value_t = 0.4)]
    gamma: f64,
    /// Threshold below which a constant counts as exactly zero.
    #[arg(long, default_value_t = DEFAULT_EPS_ZERO)]
    eps_zero: f64,
    /// Output path (stdout when absent); writes are atomic.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; default depends on the subcommand.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Number of trade-off curve points.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Largest time of the integrated bound.
    #[arg(long, default_value_t = 1e4)]
    tmax: f64,
    /// Fixed integration step (overrides --per-decade).
    #[arg(long)]
    dt: Option<f64>,
    /// Integration steps per decade of time.
    #[arg(long, default_value_t = 10_000)]
    per_decade: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

/// A terminal failure with its process exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: msg.into() }
    }
    fn input(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: msg.into() }
    }
    fn solver(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_SOLVER, message: msg.into() }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("qfib: {}", f.message);
            f.code
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.cmd {
        Cmd::Builtin { id, omega, gamma, out } => {
            let id = BuiltinModelId::from_str(&id)
                .map_err(|_| Failure::input(format!("unknown builtin model `{id}`")))?;
            let model = builtin_model(id, omega, gamma).map_err(|e| Failure::input(e.to_string()))?;
            write_output(out.as_ref(), model_to_json(&model).as_bytes())?;
            Ok(EXIT_OK)
        }
        Cmd::Classify(args) => classify_cmd(&args),
        Cmd::Abcurve(args) => abcurve_cmd(&args),
        Cmd::Bound(args) => bound_cmd(&args),
        Cmd::Report(args) => report_cmd(&args),
    }
}

fn check_common(args: &JobArgs) -> Result<(), Failure> {
    if !(args.eps_zero.is_finite() && args.eps_zero >= 0.0) {
        return Err(Failure::usage("--eps-zero must be a finite non-negative number"));
    }
    if args.points < 2 {
        return Err(Failure::usage("--points must be at least 2"));
    }
    if !(args.tmax.is_finite() && args.tmax > 0.0) {
        return Err(Failure::usage("--tmax must be a finite positive number"));
    }
    if let Some(dt) = args.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Failure::usage("--dt must be a finite positive number"));
        }
    }
    if args.per_decade == 0 {
        return Err(Failure::usage("--per-decade must be positive"));
    }
    Ok(())
}

fn load_job_model(args: &JobArgs) -> Result<MarkovianModel, Failure> {
    if let Some(path) = &args.input {
        let model = load_model(path).map_err(|e| Failure::input(e.to_string()))?;
        let report = validate_model(&model, 1e-8);
        if !report.passed() {
            let lines: Vec<String> =
                report.violations.iter().map(|v| v.to_string()).collect();
            return Err(Failure::input(format!(
                "model validation failed: {}",
                lines.join("; ")
            )));
        }
        Ok(model)
    } else {
        let raw = args.builtin.as_deref().expect("clap enforces the source group");
        let id = BuiltinModelId::from_str(raw)
            .map_err(|_| Failure::input(format!("unknown builtin model `{raw}`")))?;
        builtin_model(id, args.omega, args.gamma).map_err(|e| Failure::input(e.to_string()))
    }
}

fn env_override(var: &str) -> Result<Option<f64>, Failure> {
    match std::env::var(var) {
        Err(_) => Ok(None),
        Ok(text) => {
            let v: f64 = text
                .parse()
                .map_err(|_| Failure::input(format!("{var} is not a number: `{text}`")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Failure::input(format!("{var} must be finite and positive")));
            }
            Ok(Some(v))
        }
    }
}

fn solver_config() -> Result<SolverConfig, Failure> {
    let mut cfg = SolverConfig::default();
    if let Some(v) = env_override("QFIB_GAP_TOL")? {
        cfg.gap_tol = v;
    }
    if let Some(v) = env_override("QFIB_FEAS_TOL")? {
        cfg.feas_tol = v;
    }
    Ok(cfg)
}

fn constants(
    model: &MarkovianModel,
    args: &JobArgs,
    cfg: &SolverConfig,
) -> Result<ConstantsReport, Failure> {
    compute_constants(model, args.eps_zero, cfg).map_err(|e| Failure::solver(e.to_string()))
}

fn curve_ok(curve: &ABCurve) -> bool {
    curve.points.iter().all(|p| p.status == SolveStatus::Optimal)
}

fn status_str(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::MaxIter => "max-iter",
        SolveStatus::Infeasible => "infeasible",
    }
}

fn json_f64(v: f64) -> serde_json::Value {
    // serde_json maps non-finite floats to null; make that explicit.
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

fn json_constants(c: &ScalingConstants) -> serde_json::Value {
    json!({
        "a_minus": json_f64(c.a_minus),
        "b_minus": json_f64(c.b_minus),
        "a_plus": json_f64(c.a_plus),
        "b_plus": json_f64(c.b_plus),
    })
}

fn json_times(t: &TransitionTimes) -> serde_json::Value {
    match t {
        TransitionTimes::Single { tau } => json!({
            "type": "single",
            "tau": tau.map(json_f64).unwrap_or(serde_json::Value::Null),
        }),
        TransitionTimes::Window { tau_minus, tau_plus } => json!({
            "type": "window",
            "tau_minus": tau_minus.map(json_f64).unwrap_or(serde_json::Value::Null),
            "tau_plus": tau_plus.map(json_f64).unwrap_or(serde_json::Value::Null),
        }),
        TransitionTimes::NotApplicable => json!({ "type": "none" }),
    }
}

fn json_asymptote(a: &Asymptote) -> serde_json::Value {
    json!({ "coefficient": json_f64(a.coefficient), "power": a.power })
}

fn json_curve(curve: &ABCurve) -> serde_json::Value {
    let points: Vec<serde_json::Value> = curve
        .points
        .iter()
        .map(|p| {
            json!({
                "b_cap": json_f64(p.b_cap),
                "a": json_f64(p.a),
                "b_achieved": json_f64(p.b_achieved),
                "a_achieved": json_f64(p.a_achieved),
                "status": status_str(p.status),
            })
        })
        .collect();
    json!({ "points": points })
}

fn json_trace(trace: &BoundTrace) -> serde_json::Value {
    json!({
        "times": trace.times.iter().copied().map(json_f64).collect::<Vec<_>>(),
        "values": trace.values.iter().copied().map(json_f64).collect::<Vec<_>>(),
    })
}

fn classification_json(model: &MarkovianModel, args: &JobArgs, r: &ConstantsReport) -> serde_json::Value {
    let class = classify(&r.constants, args.eps_zero);
    let times = transition_times(&r.constants, class, args.eps_zero);
    json!({
        "model": model.label,
        "eps_zero": args.eps_zero,
        "constants": json_constants(&r.constants),
        "achieved": json_constants(&r.achieved),
        "class": class.to_string(),
        "transition_times": json_times(&times),
        "all_optimal": r.all_optimal,
    })
}

fn to_pretty(value: &serde_json::Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn classify_cmd(args: &JobArgs) -> Result<i32, Failure> {
    check_common(args)?;
    if args.format.unwrap_or(Format::Json) != Format::Json {
        return Err(Failure::usage("classify only supports --format json"));
    }
    let model = load_job_model(args)?;
    let cfg = solver_config()?;
    let report = constants(&model, args, &cfg)?;
    write_output(args.out.as_ref(), &to_pretty(&classification_json(&model, args, &report)))?;
    Ok(if report.all_optimal { EXIT_OK } else { EXIT_SOLVER })
}

fn abcurve_cmd(args: &JobArgs) -> Result<i32, Failure> {
    check_common(args)?;
    let format = args.format.unwrap_or(Format::Csv);
    if format == Format::Svg {
        return Err(Failure::usage("abcurve supports --format csv or json"));
    }
    let model = load_job_model(args)?;
    let cfg = solver_config()?;
    let report = constants(&model, args, &cfg)?;
    let curve = ab_curve_from(&model, &report, args.points, &cfg)
        .map_err(|e| Failure::solver(e.to_string()))?;
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_curve_csv(&curve, &mut buf).map_err(|e| Failure::input(e.to_string()))?;
            buf
        }
        Format::Json => to_pretty(&json!({
            "model": model.label,
            "curve": json_curve(&curve),
        })),
        Format::Svg => unreachable!(),
    };
    write_output(args.out.as_ref(), &bytes)?;
    Ok(if report.all_optimal && curve_ok(&curve) { EXIT_OK } else { EXIT_SOLVER })
}

fn integrator_config(args: &JobArgs) -> IntegratorConfig {
    IntegratorConfig {
        t_max: args.tmax,
        policy: match args.dt {
            Some(dt) => StepPolicy::Fixed { dt },
            None => StepPolicy::PerDecade { steps: args.per_decade },
        },
        ..IntegratorConfig::default()
    }
}

fn bound_cmd(args: &JobArgs) -> Result<i32, Failure> {
    check_common(args)?;
    let format = args.format.unwrap_or(Format::Csv);
    let model = load_job_model(args)?;
    let cfg = solver_config()?;
    let report = constants(&model, args, &cfg)?;
    let curve = ab_curve_from(&model, &report, args.points, &cfg)
        .map_err(|e| Failure::solver(e.to_string()))?;
    let trace =
        integrate_bound(&curve, &integrator_config(args)).map_err(|e| Failure::solver(e.to_string()))?;
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_trace_csv(&trace, &mut buf).map_err(|e| Failure::input(e.to_string()))?;
            buf
        }
        Format::Json => to_pretty(&json!({
            "model": model.label,
            "trace": json_trace(&trace),
        })),
        Format::Svg => {
            let class = classify(&report.constants, args.eps_zero);
            let times = transition_times(&report.constants, class, args.eps_zero);
            let markers = match times {
                TransitionTimes::Single { tau } => tau.into_iter().collect(),
                TransitionTimes::Window { tau_minus, tau_plus } => {
                    tau_minus.into_iter().chain(tau_plus).collect()
                }
                TransitionTimes::NotApplicable => Vec::new(),
            };
            let plot = Plot {
                title: format!("{} ({class})", model.label),
                asymptotes: asymptotes(&report.constants, class)
                    .map(|(s, l)| vec![s, l])
                    .unwrap_or_default(),
                markers,
            };
            render_loglog(&trace, &plot).into_bytes()
        }
    };
    write_output(args.out.as_ref(), &bytes)?;
    Ok(if report.all_optimal && curve_ok(&curve) { EXIT_OK } else { EXIT_SOLVER })
}

fn report_cmd(args: &JobArgs) -> Result<i32, Failure> {
    check_common(args)?;
    if args.format.unwrap_or(Format::Json) != Format::Json {
        return Err(Failure::usage("report only supports --format json"));
    }
    let model = load_job_model(args)?;
    let cfg = solver_config()?;
    let report = constants(&model, args, &cfg)?;
    let curve = ab_curve_from(&model, &report, args.points, &cfg)
        .map_err(|e| Failure::solver(e.to_string()))?;
    let trace =
        integrate_bound(&curve, &integrator_config(args)).map_err(|e| Failure::solver(e.to_string()))?;
    let class = classify(&report.constants, args.eps_zero);
    let mut doc = classification_json(&model, args, &report);
    let obj = doc.as_object_mut().expect("object");
    obj.insert("curve".into(), json_curve(&curve));
    obj.insert("trace".into(), json_trace(&trace));
    obj.insert(
        "asymptotes".into(),
        asymptotes(&report.constants, class)
            .map(|(s, l)| json!({ "short": json_asymptote(&s), "long": json_asymptote(&l) }))
            .unwrap_or(serde_json::Value::Null),
    );
    obj.insert(
        "solver".into(),
        json!({ "gap_tol": cfg.gap_tol, "feas_tol": cfg.feas_tol }),
    );
    write_output(args.out.as_ref(), &to_pretty(&doc))?;
    Ok(if report.all_optimal && curve_ok(&curve) { EXIT_OK } else { EXIT_SOLVER })
}

/// Writes to stdout, or atomically to a file via a same-directory temp file.
fn write_output(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::input(format!("cannot write to stdout: {e}"))),
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => std::path::Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .map_err(|e| Failure::input(format!("cannot create temp file in {dir:?}: {e}")))?;
            tmp.write_all(bytes)
                .map_err(|e| Failure::input(format!("cannot write {path:?}: {e}")))?;
            tmp.persist(path)
                .map_err(|e| Failure::input(format!("cannot persist {path:?}: {e}")))?;
            Ok(())
        }
    }
}
