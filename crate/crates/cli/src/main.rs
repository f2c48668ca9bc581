//! `picardnets` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails (a JSON
//! diagnostic goes to stdout), 2 for usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use picardnets::calculus::check_identity;
use picardnets::compiler::{compile_mlp, prune_zero_blocks, size_report, verify_compiled, CompileInputs};
use picardnets::identity::default_identity;
use picardnets::interp::{approx_net, max_difference_quotient, LipschitzFn};
use picardnets::lab::{
    brownian_moment_check, convergence_experiment, engine_setup, nonlinearity_net, quadratic_net, write_csv,
    Direction, EngineFns, ExperimentOptions, Nonlinearity, PdeProblem,
};
use picardnets::mlp::mlp_estimate_batch;
use picardnets::oracle::{RandomOracle, SampleKind, ThetaPath};
use picardnets::{Activation, Network};

#[derive(Parser)]
#[command(name = "picardnets", version, about = "Compile and check multilevel Picard networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile the estimator into a network and write it as JSON.
    Compile(CompileArgs),
    /// Compile, then compare the network with the estimator at random probes.
    Verify(VerifyArgs),
    /// Batch estimates of u(t, x) at the points of a CSV file.
    Mlp(MlpArgs),
    /// Convergence experiment against the closed-form reference.
    PdeError(PdeErrorArgs),
    /// Compare Brownian norm moments with their closed form.
    SamplerCheck(SamplerArgs),
    /// Build a shallow approximation of a 1-D function and audit its guarantees.
    InterpBuild(InterpArgs),
}

#[derive(Args, Clone)]
struct CompileArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Evaluation time.
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// relu | leaky:ALPHA | softplus | repu:GAMMA
    #[arg(long, default_value = "relu", value_parser = parse_activation)]
    activation: Activation,
    /// quadratic | file PATH
    #[arg(long, num_args = 1..=2, default_values_t = vec!["quadratic".to_string()])]
    g: Vec<String>,
    /// zero | linear:LAMBDA | interp PATH
    #[arg(long, num_args = 1..=2, default_values_t = vec!["zero".to_string()])]
    f: Vec<String>,
    #[arg(long, env = "PICARDNETS_SEED", default_value_t = 0)]
    seed: u64,
    /// Accept configurations whose parameter bound exceeds 1e8.
    #[arg(long)]
    allow_large: bool,
    /// Output network (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Size report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Remove hidden units with all-zero outgoing weights.
    #[arg(long)]
    prune: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    compile: CompileArgs,
    #[arg(long, default_value_t = 20)]
    probes: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct ProblemArgs {
    /// Benchmark problem; only heat-quadratic has a closed-form reference.
    #[arg(long, default_value = "heat-quadratic")]
    problem: String,
    #[arg(long, default_value_t = 5)]
    d: usize,
    /// Diffusion coefficient.
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// f(u) = lambda u.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// terminal | initial
    #[arg(long, default_value = "terminal")]
    direction: String,
}

#[derive(Args)]
struct MlpArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// CSV file with one point per line.
    #[arg(long)]
    points: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PdeErrorArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Comma-separated n:M pairs.
    #[arg(long, value_delimiter = ',', value_parser = parse_level, required = true)]
    levels: Vec<(usize, usize)>,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// Number of evaluation points on the box.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    /// Seed of the evaluation points.
    #[arg(long, env = "PICARDNETS_SEED", default_value_t = 0)]
    point_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write wall_ms = 0 so the output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Use the reference in place of the estimator.
    #[arg(long)]
    self_test: bool,
    /// Lift the desk-scale limits (d <= 10, n = M <= 4, samples <= 1e6).
    #[arg(long)]
    no_limits: bool,
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    gamma: u32,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, env = "PICARDNETS_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InterpArgs {
    /// sin | cos | abs | tanh
    #[arg(long = "fn", default_value = "sin")]
    function: String,
    /// Declared Lipschitz constant.
    #[arg(long = "L", default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "relu", value_parser = parse_activation)]
    activation: Activation,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    s.parse().map_err(|e: picardnets::Error| e.to_string())
}

fn parse_level(s: &str) -> std::result::Result<(usize, usize), String> {
    let (n, m) = s.split_once(':').ok_or_else(|| format!("expected n:M, got {s:?}"))?;
    let n = n.trim().parse().map_err(|_| format!("bad level {n:?}"))?;
    let m = m.trim().parse().map_err(|_| format!("bad base {m:?}"))?;
    Ok((n, m))
}

/// Non-success outcomes of a subcommand.
enum Failure {
    Usage(String),
    Check(serde_json::Value),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn check_failed(kind: &str, detail: impl serde::Serialize) -> Failure {
    Failure::Check(json!({ "status": "fail", "check": kind, "detail": detail }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Compile(a) => run_compile(&a),
        Command::Verify(a) => run_verify(&a),
        Command::Mlp(a) => run_mlp(&a),
        Command::PdeError(a) => run_pde_error(&a),
        Command::SamplerCheck(a) => run_sampler(&a),
        Command::InterpBuild(a) => run_interp(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(v)) => {
            println!("{v}");
            ExitCode::from(1)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_network(path: &str) -> std::result::Result<Network, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let (net, _) = Network::from_json(&text).map_err(|e| usage(format!("{path}: {e}")))?;
    Ok(net)
}

fn build_inputs(a: &CompileArgs) -> std::result::Result<CompileInputs, Failure> {
    let g_net = match a.g.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["quadratic"] => quadratic_net(a.d, &a.activation).map_err(|e| usage(e.to_string()))?,
        ["file", path] => read_network(path)?,
        _ => return Err(usage(format!("--g expects `quadratic` or `file PATH`, got {:?}", a.g))),
    };
    let f_net = match a.f.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["zero"] => nonlinearity_net(&Nonlinearity::Zero).map_err(|e| usage(e.to_string()))?,
        [spec] if spec.starts_with("linear:") => {
            let lambda: f64 = spec["linear:".len()..].parse().map_err(|_| usage(format!("bad --f {spec:?}")))?;
            nonlinearity_net(&Nonlinearity::Linear(lambda)).map_err(|e| usage(e.to_string()))?
        }
        ["interp", path] => read_network(path)?,
        _ => return Err(usage(format!("--f expects `zero`, `linear:LAMBDA` or `interp PATH`, got {:?}", a.f))),
    };
    let inputs = CompileInputs {
        cfg: picardnets::mlp::MlpConfig { n: a.n, m: a.m, horizon: a.horizon, t: a.t, d: a.d },
        g_net,
        f_net,
        j_net: default_identity(&a.activation),
        activation: a.activation,
        oracle: RandomOracle::new(a.seed),
        allow_large: a.allow_large,
    };
    inputs.validate().map_err(|e| usage(e.to_string()))?;
    check_identity(&inputs.j_net, &a.activation).map_err(|e| check_failed("identity", e.to_string()))?;
    Ok(inputs)
}

fn compile_and_report(a: &CompileArgs) -> std::result::Result<(CompileInputs, Network), Failure> {
    let inputs = build_inputs(a)?;
    let net = compile_mlp(&inputs, &ThetaPath::root(), a.t).map_err(|e| match e {
        picardnets::Error::TooLarge { .. } => usage(format!("{e}; pass --allow-large to override")),
        other => check_failed("compile", other.to_string()),
    })?;
    let report = size_report(&inputs, &net).map_err(|e| check_failed("size-bounds", e.to_string()))?;
    let out = if a.prune { prune_zero_blocks(&net) } else { net };
    if let Some(path) = &a.out {
        write_text(path, &out.to_json(Some(&a.activation)))?;
    }
    if let Some(path) = &a.report {
        let mut value = serde_json::to_value(&report).expect("report serializes");
        if a.prune {
            value["pruned_params"] = json!(out.param_count());
        }
        write_text(path, &serde_json::to_string_pretty(&value).expect("json"))?;
    }
    Ok((inputs, out))
}

fn run_compile(a: &CompileArgs) -> std::result::Result<(), Failure> {
    let (_, net) = compile_and_report(a)?;
    println!("{}", json!({ "status": "ok", "dims": net.dims(), "params": net.param_count() }));
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> std::result::Result<(), Failure> {
    let (inputs, net) = compile_and_report(&a.compile)?;
    let oracle = RandomOracle::new(a.compile.seed);
    let probes: Vec<Vec<f64>> = (0..a.probes as i64)
        .map(|i| {
            let s = oracle.stream(SampleKind::Probe, &ThetaPath::new(vec![i]));
            (0..a.compile.d as u64).map(|j| 2.0 * s.uniform(j) - 1.0).collect()
        })
        .collect();
    let report = verify_compiled(&inputs, &net, &ThetaPath::root(), a.compile.t, &probes, a.tol)
        .map_err(|e| check_failed("equivalence", e.to_string()))?;
    println!("{}", json!({ "status": "pass", "report": report }));
    Ok(())
}

fn build_problem(a: &ProblemArgs) -> std::result::Result<PdeProblem, Failure> {
    if a.problem != "heat-quadratic" {
        return Err(usage(format!("unknown problem {:?}; available: heat-quadratic", a.problem)));
    }
    let mut p = PdeProblem::heat_quadratic(a.d, a.c, a.horizon, a.lambda);
    p.direction = match a.direction.as_str() {
        "terminal" => Direction::Terminal,
        "initial" => Direction::Initial,
        other => return Err(usage(format!("unknown direction {other:?}"))),
    };
    p.validate().map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

fn read_points(path: &Path, d: usize) -> std::result::Result<Vec<Vec<f64>>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| usage(format!("{}:{}: not a list of numbers", path.display(), no + 1)))?;
        if x.len() != d {
            return Err(usage(format!("{}:{}: expected {d} coordinates, got {}", path.display(), no + 1, x.len())));
        }
        points.push(x);
    }
    Ok(points)
}

fn run_mlp(a: &MlpArgs) -> std::result::Result<(), Failure> {
    let problem = build_problem(&a.problem)?;
    let points = read_points(&a.points, problem.d)?;
    let (cfg, rescaled) = engine_setup(&problem, a.n, a.m, a.t).map_err(|e| usage(e.to_string()))?;
    let rows = mlp_estimate_batch(&cfg, &points, &a.seeds, &EngineFns { problem: &rescaled })
        .map_err(|e| usage(e.to_string()))?;
    let mut out = String::from("point,seed,value\n");
    for (seed, row) in a.seeds.iter().zip(&rows) {
        for (i, v) in row.iter().enumerate() {
            out.push_str(&format!("{i},{seed},{v}\n"));
        }
    }
    emit(a.out.as_deref(), &out)?;
    Ok(())
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn run_pde_error(a: &PdeErrorArgs) -> std::result::Result<(), Failure> {
    let problem = build_problem(&a.problem)?;
    if !a.no_limits {
        if problem.d > 10 {
            return Err(usage("d above 10 needs --no-limits"));
        }
        if a.levels.iter().any(|&(n, m)| n > 4 || m > 4) {
            return Err(usage("levels above n = M = 4 need --no-limits"));
        }
        if a.samples > 1_000_000 {
            return Err(usage("more than 1e6 samples needs --no-limits"));
        }
    }
    let opts = ExperimentOptions {
        points: a.samples,
        point_seed: a.point_seed,
        t: None,
        timing: !a.no_timing,
        self_test: a.self_test,
    };
    let rows = convergence_experiment(&problem, &a.levels, &a.seeds, a.p, &opts).map_err(|e| match e {
        picardnets::Error::Check(msg) => check_failed("experiment", msg),
        other => usage(other.to_string()),
    })?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).context("formatting csv")?;
    emit(a.out.as_deref(), std::str::from_utf8(&buf).expect("ascii csv"))?;
    Ok(())
}

fn run_sampler(a: &SamplerArgs) -> std::result::Result<(), Failure> {
    let report = brownian_moment_check(a.d, a.s, a.gamma, a.samples, a.seed).map_err(|e| usage(e.to_string()))?;
    if !report.passed {
        return Err(check_failed("brownian-moment", report));
    }
    println!("{}", json!({ "status": "pass", "report": report }));
    Ok(())
}

fn run_interp(a: &InterpArgs) -> std::result::Result<(), Failure> {
    let f = LipschitzFn::named(&a.function)
        .and_then(|f| f.with_lipschitz(a.lipschitz))
        .map_err(|e| usage(e.to_string()))?;
    let (net, guarantee) = approx_net(&f, a.q, a.eps, &a.activation).map_err(|e| usage(e.to_string()))?;
    guarantee.check().map_err(|e| check_failed("size-bounds", e.to_string()))?;
    let act = a.activation;
    let eval = |x: f64| net.realize_scalar(&act, &[x]).expect("scalar network");
    // Growth-weighted error on a dense grid over [-50, 50].
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let x = -50.0 + 100.0 * i as f64 / 9_999.0;
        worst = worst.max((eval(x) - f.eval(x)).abs() / x.abs().powf(a.q).max(1.0));
    }
    let allowed = guarantee.error_factor * a.eps * (1.0 + 1e-9);
    let pairs: Vec<(f64, f64)> = (0..10_000)
        .map(|i| {
            let x = -50.0 + 100.0 * ((i as f64 * 0.618_033_988_749_895) % 1.0);
            (x, x + 1e-3 + ((i as f64 * 0.414_213_562_373_095) % 1.0))
        })
        .collect();
    let lip = max_difference_quotient(eval, &pairs);
    let audit = json!({
        "guarantee": guarantee,
        "max_weighted_error": worst,
        "allowed_weighted_error": allowed,
        "max_difference_quotient": lip,
    });
    if let Some(path) = &a.out {
        write_text(path, &net.to_json(Some(&act)))?;
    }
    if let Some(path) = &a.report {
        write_text(path, &serde_json::to_string_pretty(&audit).expect("json"))?;
    }
    if !(worst <= allowed) {
        return Err(check_failed("approximation-error", audit));
    }
    if !(lip <= a.lipschitz * (1.0 + 1e-9)) {
        return Err(check_failed("lipschitz", audit));
    }
    println!("{}", json!({ "status": "pass", "audit": audit }));
    Ok(())
}
