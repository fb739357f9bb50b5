//! `fracdiff`: command-line front end for the fractional-diffusion kernel
//! library. Four subcommands: `hfun` evaluates the Mellin-Barnes kernel
//! transform, `check` evaluates the mean-square convergence conditions,
//! `verify` runs a verification suite, `simulate` propagates initial data
//! and samples the first-order fluctuation.
//!
//! Exit codes: 0 success (including negative `check` verdicts), 1 numeric
//! failure, 2 invalid input or configuration, 3 verification suite failure.

mod emit;
mod suites;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emit::{render, Doc, Val};
use fracdiff::estimates::{check_conditions, default_gamma0, BoundCase, ConditionReport};
use fracdiff::specfun::hfun::{h_eval_tol, HFunctionSpec, Method};
use fracdiff::{
    convergence_report, psi0, psi1_mc, psi1_moment_exact, ChaosConfig, ConvergenceReport,
    GreenModel, HurstVector,
};
use std::collections::HashMap;
use std::io::Write as _;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "fracdiff",
    version,
    about = "Fractional-diffusion kernels, moment bounds, and chaos-expansion diagnostics"
)]
struct Cli {
    /// Write results to this path ('-' means stdout)
    #[arg(long, global = true)]
    output: Option<String>,
    /// Output format
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Config file with `key = value` lines (keys: seed, output, format, threads)
    #[arg(long, global = true)]
    config: Option<String>,
    /// Seed for Monte Carlo runs; flags beat the config file, which beats FRACDIFF_SEED
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections; results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the Mellin-Barnes kernel transform at a point z > 0
    Hfun(HfunArgs),
    /// Evaluate the mean-square convergence conditions for (alpha, H, gamma)
    Check(CheckArgs),
    /// Run a verification suite and print its case table
    Verify(VerifyArgs),
    /// Propagate initial data and sample the first-order fluctuation
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct HfunArgs {
    /// Evaluation point (must be positive)
    #[arg(long, allow_negative_numbers = true)]
    z: f64,
    /// Parameter block: eh1 (exponential family), z0, or y0
    #[arg(long, default_value = "eh1")]
    spec: String,
    /// Spatial dimension entering the parameter block
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Diffusion order in (0, 1]; required by the z0/y0 blocks
    #[arg(long)]
    alpha: Option<f64>,
    /// Evaluation route: auto, residue, or contour
    #[arg(long, default_value = "auto")]
    method: String,
    /// Relative tolerance
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct CheckArgs {
    /// Diffusion order in (0, 1]
    #[arg(long)]
    alpha: f64,
    /// Comma-separated Hurst components, one per dimension
    #[arg(long)]
    hurst: String,
    /// Integrability exponent gamma in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Auxiliary exponent gamma0 in (0, gamma); defaults to gamma/100
    #[arg(long)]
    gamma0: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name: z0-bounds, y0-bounds, time-scaling, log-singular,
    /// double-integral, or simplex
    #[arg(long)]
    suite: String,
    /// Restrict bound suites to one dimension
    #[arg(long)]
    d: Option<usize>,
    /// Restrict bound suites to one diffusion order, or pick the
    /// double-integral order (default 0.8)
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of randomized simplex cases
    #[arg(long, default_value_t = 20)]
    cases: usize,
    /// Monte Carlo samples per simplex case
    #[arg(long = "mc-samples", default_value_t = 200_000)]
    mc_samples: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// Diffusion order in (0, 1]
    #[arg(long)]
    alpha: f64,
    /// Hurst index of the driving noise (one spatial dimension)
    #[arg(long, default_value = "0.75")]
    hurst: String,
    /// Evaluation time (0 < t <= horizon)
    #[arg(long)]
    t: f64,
    /// Evaluation point
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    x: f64,
    /// Time horizon; defaults to t
    #[arg(long)]
    horizon: Option<f64>,
    /// Initial data: one, zero, or gauss
    #[arg(long, default_value = "one")]
    u0: String,
    /// Spatial cells for the fluctuation discretization
    #[arg(long, default_value_t = 64)]
    cells: usize,
    /// Monte Carlo sample count
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Override the half-width of the sampling window
    #[arg(long)]
    span: Option<f64>,
    /// Integrability exponent for the convergence report
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Auxiliary exponent gamma0 in (0, gamma); defaults to gamma/100
    #[arg(long)]
    gamma0: Option<f64>,
    /// Partial sums reported from the majorant series
    #[arg(long, default_value_t = 50)]
    terms: usize,
}

/// A terminal failure: exit code plus message for stderr.
struct Failure {
    code: i32,
    msg: String,
}

fn fail(code: i32, msg: impl Into<String>) -> Failure {
    Failure {
        code,
        msg: msg.into(),
    }
}

/// Invalid input / domain problems exit 2; numeric failures exit 1.
fn code_for(e: &fracdiff::Error) -> i32 {
    use fracdiff::Error as E;
    match e {
        E::InvalidSpec(_)
        | E::DomainViolation(_)
        | E::DimensionMismatch { .. }
        | E::InsufficientGrid { .. }
        | E::CoincidentPoints(_)
        | E::DimensionTooLarge { .. }
        | E::GridCoverage(_)
        | E::SingularPoint(_) => 2,
        _ => 1,
    }
}

fn core_fail(e: fracdiff::Error) -> Failure {
    fail(code_for(&e), e.to_string())
}

struct Settings {
    output: String,
    format: FormatArg,
    seed: Option<u64>,
    threads: Option<usize>,
}

fn load_config(path: &str) -> Result<HashMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(2, format!("cannot read config file {path}: {e}")))?;
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(fail(
                2,
                format!("config line {} is not `key = value`: {raw}", idx + 1),
            ));
        };
        let key = k.trim();
        match key {
            "seed" | "output" | "format" | "threads" => {
                map.insert(key.to_string(), v.trim().to_string());
            }
            other => return Err(fail(2, format!("unknown config key '{other}'"))),
        }
    }
    Ok(map)
}

fn resolve_settings(cli: &Cli) -> Result<Settings, Failure> {
    let file = match cli.config.as_deref() {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let output = cli
        .output
        .clone()
        .or_else(|| file.get("output").cloned())
        .unwrap_or_else(|| "-".to_string());
    let format = match cli.format {
        Some(f) => f,
        None => match file.get("format").map(String::as_str) {
            Some("json") => FormatArg::Json,
            Some("csv") => FormatArg::Csv,
            Some(other) => {
                return Err(fail(2, format!("config format must be json or csv, got '{other}'")))
            }
            None => FormatArg::Json,
        },
    };
    let seed = match cli.seed {
        Some(v) => Some(v),
        None => match file.get("seed") {
            Some(v) => Some(
                v.parse::<u64>()
                    .map_err(|_| fail(2, format!("config seed '{v}' is not a valid u64")))?,
            ),
            None => match std::env::var("FRACDIFF_SEED") {
                Ok(v) => Some(v.parse::<u64>().map_err(|_| {
                    fail(2, format!("FRACDIFF_SEED '{v}' is not a valid u64"))
                })?),
                Err(_) => None,
            },
        },
    };
    let threads = match cli.threads {
        Some(v) => Some(v),
        None => match file.get("threads") {
            Some(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| fail(2, format!("config threads '{v}' is not a valid count")))?,
            ),
            None => None,
        },
    };
    Ok(Settings {
        output,
        format,
        seed,
        threads,
    })
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| fail(2, format!("{what} entry '{}' is not a number", s.trim())))
        })
        .collect()
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Residue => "residue",
        Method::Contour => "contour",
    }
}

fn run_hfun(args: &HfunArgs) -> Result<(Doc, i32), Failure> {
    if args.d == 0 {
        return Err(fail(2, "dimension d must be at least 1"));
    }
    let d2 = args.d as f64 / 2.0;
    let spec = match args.spec.as_str() {
        "eh1" => HFunctionSpec::new(2, 0, vec![(1.0, 1.0)], vec![(d2, 1.0), (1.0, 1.0)]),
        "z0" | "y0" => {
            let alpha = args
                .alpha
                .ok_or_else(|| fail(2, format!("spec '{}' requires --alpha", args.spec)))?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(fail(2, format!("alpha must lie in (0, 1], got {alpha}")));
            }
            let u = if args.spec == "z0" { 1.0 } else { alpha };
            HFunctionSpec::new(2, 0, vec![(u, alpha)], vec![(d2, 1.0), (1.0, 1.0)])
        }
        other => {
            return Err(fail(
                2,
                format!("unknown spec '{other}' (expected eh1, z0, or y0)"),
            ))
        }
    }
    .map_err(core_fail)?;
    let method = match args.method.as_str() {
        "auto" | "residue" => Method::Residue,
        "contour" => Method::Contour,
        other => {
            return Err(fail(
                2,
                format!("unknown method '{other}' (expected auto, residue, or contour)"),
            ))
        }
    };
    if !(args.tol > 0.0) || !args.tol.is_finite() {
        return Err(fail(2, format!("tolerance must be positive, got {}", args.tol)));
    }
    let ev = h_eval_tol(&spec, args.z, method, args.tol).map_err(core_fail)?;
    let doc = Val::Obj(vec![
        ("value", Val::Num(ev.value)),
        ("method", Val::Str(method_name(ev.method_used).into())),
        ("est_error", Val::Num(ev.est_rel_err)),
        ("work", Val::UInt(ev.work as u64)),
    ]);
    Ok((Doc::Map(doc), 0))
}

fn conditions_val(rep: &ConditionReport) -> Val {
    let mut fields: Vec<(&'static str, Val)> = rep
        .checks()
        .iter()
        .map(|(name, check)| {
            (
                *name,
                Val::Obj(vec![
                    ("pass", Val::Bool(check.pass)),
                    ("boundary", Val::Bool(check.boundary)),
                    ("margin", Val::Num(check.margin)),
                    ("detail", Val::Str(check.detail.clone())),
                ]),
            )
        })
        .collect();
    fields.push(("all_pass", Val::Bool(rep.all_pass())));
    Val::Obj(fields)
}

fn run_check(args: &CheckArgs) -> Result<(Doc, i32), Failure> {
    let hs = parse_f64_list(&args.hurst, "hurst")?;
    let h = HurstVector::new(hs.clone()).map_err(core_fail)?;
    let rep = check_conditions(args.alpha, &h, args.gamma, args.gamma0).map_err(core_fail)?;
    let mut fields = vec![
        ("alpha", Val::Num(args.alpha)),
        ("d", Val::UInt(h.dim() as u64)),
        ("hurst", Val::Arr(hs.into_iter().map(Val::Num).collect())),
        ("gamma", Val::Num(args.gamma)),
        (
            "gamma0",
            Val::Num(args.gamma0.unwrap_or_else(|| default_gamma0(args.gamma))),
        ),
        ("zeta_d", Val::Num(rep.table.zeta_d)),
        ("kappa_d", Val::Num(rep.table.kappa_d)),
        ("ell", Val::Num(rep.ell)),
        ("conditions", conditions_val(&rep)),
        ("overall", Val::Bool(rep.all_pass())),
    ];
    if args.alpha <= 0.5 {
        fields.push((
            "reason",
            Val::Str(
                "alpha <= 1/2 makes the Hurst-sum requirement |H| > d - 2 + 1/alpha \
                 unsatisfiable: it would need |H| >= d, beyond the admissible range"
                    .into(),
            ),
        ));
    }
    Ok((Doc::Map(Val::Obj(fields)), 0))
}

fn run_verify(args: &VerifyArgs, settings: &Settings) -> Result<(Doc, i32), Failure> {
    let table = match args.suite.as_str() {
        "z0-bounds" => suites::bounds_suite(BoundCase::Z0, args.d, args.alpha),
        "y0-bounds" => suites::bounds_suite(BoundCase::Y0, args.d, args.alpha),
        "time-scaling" | "lem9" => suites::time_scaling_suite(),
        "log-singular" | "lem11" => suites::log_singular_suite(),
        "double-integral" | "cor14" => {
            suites::double_integral_suite(args.alpha.unwrap_or(0.8))
        }
        "simplex" => {
            let seed = settings.seed.ok_or_else(|| {
                fail(
                    2,
                    "simplex Monte Carlo requires a seed (--seed, config file, or FRACDIFF_SEED)",
                )
            })?;
            if args.cases == 0 {
                return Err(fail(2, "need at least one simplex case"));
            }
            suites::simplex_suite(seed, args.cases, args.mc_samples)
        }
        other => return Err(fail(2, format!("unknown suite '{other}'"))),
    }
    .map_err(core_fail)?;
    if table.rows.is_empty() {
        return Err(fail(2, "case filters left the suite empty"));
    }
    let code = if table.all_pass { 0 } else { 3 };
    Ok((Doc::Cases(table), code))
}

fn report_val(rep: &ConvergenceReport) -> Val {
    Val::Obj(vec![
        ("ell", Val::Num(rep.ell)),
        ("zeta_d", Val::Num(rep.zeta_d)),
        ("kappa_d", Val::Num(rep.kappa_d)),
        ("conditions", conditions_val(&rep.conditions)),
        (
            "theta_partial_sums",
            Val::Arr(rep.theta_partial_sums.iter().copied().map(Val::Num).collect()),
        ),
        ("verdict", Val::Str(rep.verdict.as_str().into())),
    ])
}

fn run_simulate(args: &SimulateArgs, settings: &Settings) -> Result<(Doc, i32), Failure> {
    let seed = settings.seed.ok_or_else(|| {
        fail(
            2,
            "simulate requires a seed (--seed, config file, or FRACDIFF_SEED)",
        )
    })?;
    let hs = parse_f64_list(&args.hurst, "hurst")?;
    if hs.len() != 1 {
        return Err(fail(
            2,
            "simulate runs in one spatial dimension; pass a single Hurst value",
        ));
    }
    let model = GreenModel::identity(args.alpha, 1).map_err(core_fail)?;
    let hurst = HurstVector::new(hs.clone()).map_err(core_fail)?;
    let u0: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> = match args.u0.as_str() {
        "one" => Arc::new(|_: &[f64]| 1.0),
        "zero" => Arc::new(|_: &[f64]| 0.0),
        "gauss" => Arc::new(|x: &[f64]| (-x[0] * x[0]).exp()),
        other => {
            return Err(fail(
                2,
                format!("unknown initial data '{other}' (expected one, zero, or gauss)"),
            ))
        }
    };
    let horizon = args.horizon.unwrap_or(args.t);
    let mut cfg = ChaosConfig::new(model, hurst, u0, horizon, args.t, vec![args.x])
        .map_err(core_fail)?
        .with_space_cells(args.cells)
        .with_mc_samples(args.samples)
        .with_seed(seed);
    if let Some(span) = args.span {
        cfg = cfg.with_mc_span(span);
    }
    let p0 = psi0(&cfg).map_err(core_fail)?;
    let m1 = psi1_moment_exact(&cfg).map_err(core_fail)?;
    let mc = psi1_mc(&cfg).map_err(core_fail)?;
    let report =
        convergence_report(&cfg, args.gamma, args.gamma0, args.terms).map_err(core_fail)?;

    let doc = Val::Obj(vec![
        ("seed", Val::UInt(seed)),
        ("alpha", Val::Num(args.alpha)),
        ("hurst", Val::Num(hs[0])),
        ("t", Val::Num(args.t)),
        ("x", Val::Num(args.x)),
        ("u0", Val::Str(args.u0.clone())),
        ("psi0", Val::Num(p0)),
        ("psi1_exact_moment", Val::Num(m1)),
        (
            "psi1_mc",
            Val::Obj(vec![
                ("mean", Val::Num(mc.mean)),
                ("var", Val::Num(mc.variance)),
                ("stderr", Val::Num(mc.mean_std_err)),
                ("second_moment", Val::Num(mc.second_moment)),
                ("second_moment_stderr", Val::Num(mc.second_moment_std_err)),
                ("discrete_second_moment", Val::Num(mc.discrete_second_moment)),
                ("cells", Val::UInt(mc.cells as u64)),
                ("samples", Val::UInt(args.samples as u64)),
            ]),
        ),
        ("convergence_report", report_val(&report)),
    ]);
    Ok((Doc::Map(doc), 0))
}

fn write_output(target: &str, text: &str) -> Result<(), Failure> {
    if target == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| fail(1, format!("cannot write to stdout: {e}")))
    } else {
        std::fs::write(target, text)
            .map_err(|e| fail(1, format!("cannot write output file {target}: {e}")))
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let settings = resolve_settings(&cli)?;
    if let Some(n) = settings.threads {
        if n == 0 {
            return Err(fail(2, "threads must be at least 1"));
        }
        // ignore the error if a pool already exists (e.g. repeated calls in
        // one process); determinism does not depend on the pool size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let (doc, code) = match &cli.cmd {
        Cmd::Hfun(args) => run_hfun(args)?,
        Cmd::Check(args) => run_check(args)?,
        Cmd::Verify(args) => run_verify(args, &settings)?,
        Cmd::Simulate(args) => run_simulate(args, &settings)?,
    };
    let text = render(&doc, settings.format == FormatArg::Csv);
    write_output(&settings.output, &text)?;
    Ok(code)
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            std::process::exit(f.code);
        }
    }
}
