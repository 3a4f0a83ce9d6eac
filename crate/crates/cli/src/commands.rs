//! Subcommand definitions and handlers. Every handler prints one JSON
//! report to stdout (except `suite`, which prints its table) and returns
//! the process exit code: 0 ok, 2 config error, 3 assertion failure,
//! 4 numeric failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use genharnack::drift::{self, CheckOptions, DriftFunction};
use genharnack::pucci::EllipticityPair;
use genharnack::pxlab::{self, PxSpec};
use genharnack::{barrier, extremal1d, harnack, levelsets, suite};
use genharnack::Error as CoreError;

use crate::config::{CoveringSection, ExperimentConfig};
use crate::emit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ASSERT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser)]
#[command(
    name = "genharnack",
    version,
    about = "Verification toolkit for drift-damped Harnack functionals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Check structural properties of a drift function.
    DriftCheck(DriftCheckArgs),
    /// Classify the small-scale integral of 1/phi as divergent or convergent.
    Osgood(OsgoodArgs),
    /// Evaluate the drift-damped oscillation functional between two log-levels.
    Harnack(HarnackArgs),
    /// Build and verify the extremal one-dimensional profile.
    Extremal1d(ExtremalArgs),
    /// Search the barrier scale and verify it on its annulus.
    Barrier(BarrierArgs),
    /// Level-set scaffolding: scale sequences, covering radii, random-set sampling.
    #[command(subcommand)]
    Levelsets(LevelsetsCmd),
    /// Variable-exponent laboratory: exact solves, inverse profiles, functional.
    #[command(subcommand)]
    Px(PxCmd),
    /// Run the acceptance matrix, one line per criterion.
    Suite(SuiteArgs),
    /// Run an experiment described by a JSON config file.
    Run(RunArgs),
}

#[derive(Args)]
pub struct DriftCheckArgs {
    /// Drift spec: shorthand (homogeneous | log_iterated | power:A | log_linear:C) or JSON.
    #[arg(long)]
    drift: String,
    /// Also write the JSON report here (atomic).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct OsgoodArgs {
    #[arg(long)]
    drift: String,
    /// Upper endpoint of the probed interval (0, eps].
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Number of dyadic shells summed.
    #[arg(long, default_value_t = 40)]
    shells: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct HarnackArgs {
    #[arg(long)]
    drift: String,
    /// Lower level, as ln m.
    #[arg(long)]
    log_m: f64,
    /// Upper level, as ln M.
    #[arg(long)]
    log_sup: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Integrate 1/phi instead of the full functional.
    #[arg(long)]
    phi_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ExtremalArgs {
    #[arg(long)]
    drift: String,
    /// Starting level: w(0) = -ln k.
    #[arg(long)]
    k: f64,
    /// Grid nodes on [-2, 2]; must be 4j + 1.
    #[arg(long, default_value_t = 801)]
    nodes: usize,
    /// Write per-node columns x, log_u, log_u_prime, ratio here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BarrierArgs {
    #[arg(long)]
    drift: String,
    /// Dimension.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda_min: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_max: f64,
    /// Radial verification nodes on the annulus.
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    /// Verify this matching radius instead of searching for one.
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum LevelsetsCmd {
    /// Scale sequence with its dual-form diagnostic.
    Sequence(SequenceArgs),
    /// Covering radii with the tail closed form.
    Covering(CoveringArgs),
    /// Empirical isoperimetric constant on random connected pixel sets.
    Iso(IsoArgs),
}

#[derive(Args)]
pub struct SequenceArgs {
    #[arg(long)]
    drift: String,
    /// Top level as ln m.
    #[arg(long)]
    log_m: f64,
    /// Level ratio between consecutive indices.
    #[arg(long, default_value_t = 6.0)]
    l: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 64)]
    k_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CoveringArgs {
    /// Scale entering the leading radius.
    #[arg(long)]
    a_k1: f64,
    #[arg(long, default_value_t = 2.0)]
    l0_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 40)]
    l_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct IsoArgs {
    /// Number of random connected sets.
    #[arg(long, default_value_t = 100)]
    sets: usize,
    #[arg(long, default_value_t = 5383)]
    seed: u64,
    /// Cell size; keep at or below delta / 8.
    #[arg(long, default_value_t = 0.0125)]
    h: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.9)]
    ball_radius: f64,
    /// Smallest target cell count.
    #[arg(long, default_value_t = 40)]
    target_lo: usize,
    /// Largest target cell count.
    #[arg(long, default_value_t = 1200)]
    target_hi: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum PxCmd {
    /// Exact Dirichlet solve for the one-dimensional p(x)-Laplacian.
    Solve(PxSolveArgs),
    /// Build the inverse-family exponent profile.
    Inverse(PxInverseArgs),
    /// Damped oscillation functional with its explicit constant.
    Harnack(PxHarnackArgs),
}

#[derive(Args)]
pub struct PxSolveArgs {
    /// Exponent profile as JSON, e.g. {"kind":"sin","base":2.0,"amplitude":0.5}.
    #[arg(long)]
    profile: String,
    /// Profile interval "lo,hi" (analytic profiles only).
    #[arg(long)]
    interval: Option<String>,
    /// Tabulation nodes for the inverse family.
    #[arg(long, default_value_t = 801)]
    profile_nodes: usize,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    ua: f64,
    #[arg(long)]
    ub: f64,
    #[arg(long, default_value_t = 101)]
    nodes: usize,
    /// Write columns x, u here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PxInverseArgs {
    /// Family index.
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 801)]
    nodes: usize,
    /// Write columns x, p, p_prime here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PxHarnackArgs {
    #[arg(long)]
    log_m: f64,
    #[arg(long)]
    log_sup: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Drift scale dividing the functional.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SuiteArgs {
    /// Run a single criterion (1..=10) instead of all.
    #[arg(long)]
    criterion: Option<usize>,
    /// Write the JSON summary here (runtimes excluded for determinism).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RunArgs {
    /// Path to the experiment config JSON.
    #[arg(long)]
    config: PathBuf,
}

enum CliError {
    Config(String),
    Numeric(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::Domain(_) | CoreError::Io(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

type CliResult = Result<i32, CliError>;

pub fn dispatch(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::DriftCheck(a) => drift_check(a),
        Command::Osgood(a) => osgood(a),
        Command::Harnack(a) => harnack_cmd(a),
        Command::Extremal1d(a) => extremal(a),
        Command::Barrier(a) => barrier_cmd(a),
        Command::Levelsets(c) => match c {
            LevelsetsCmd::Sequence(a) => sequence(a),
            LevelsetsCmd::Covering(a) => covering(a),
            LevelsetsCmd::Iso(a) => iso(a),
        },
        Command::Px(c) => match c {
            PxCmd::Solve(a) => px_solve(a),
            PxCmd::Inverse(a) => px_inverse(a),
            PxCmd::Harnack(a) => px_harnack(a),
        },
        Command::Suite(a) => suite_cmd(a),
        Command::Run(a) => run_config(a),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            EXIT_NUMERIC
        }
    }
}

fn parse_drift(text: &str) -> Result<DriftFunction, CliError> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed)
            .map_err(|e| CliError::Config(format!("bad drift spec: {e}")));
    }
    let parse_c = |v: &str| {
        v.parse::<f64>()
            .map_err(|e| CliError::Config(format!("bad drift parameter {v:?}: {e}")))
    };
    match trimmed.split_once(':') {
        None => match trimmed {
            "homogeneous" => Ok(DriftFunction::homogeneous()),
            "log_iterated" => Ok(DriftFunction::log_iterated()),
            other => Err(CliError::Config(format!(
                "unknown drift {other:?}; use homogeneous, log_iterated, power:A, log_linear:C, or JSON"
            ))),
        },
        Some(("power", v)) => Ok(DriftFunction::power(parse_c(v)?)?),
        Some(("log_linear", v)) => Ok(DriftFunction::log_linear(parse_c(v)?)?),
        Some((other, _)) => Err(CliError::Config(format!(
            "unknown drift kind {other:?}"
        ))),
    }
}

fn to_value<T: serde::Serialize>(t: &T) -> Result<Value, CliError> {
    serde_json::to_value(t).map_err(|e| CliError::Config(format!("serialization failed: {e}")))
}

fn emit_report(v: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let text = emit::render(v);
    print!("{text}");
    write_text(out, &text)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    if let Some(p) = path {
        emit::write_atomic(p, text.as_bytes())
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn drift_check(a: DriftCheckArgs) -> CliResult {
    let f = parse_drift(&a.drift)?;
    let opts = CheckOptions::default();
    let reports = drift::rv_properties(&f, &opts)?;
    let props: Result<Vec<Value>, CliError> = reports.iter().map(to_value).collect();
    let hypotheses = json!({
        "monotone_structure": to_value(&drift::check_p1(&f, &drift::default_p1_grid(), &opts)?)?,
        "doubling": to_value(&drift::check_p2(&f, &drift::default_p2_grid(), &opts)?)?,
        "submultiplicative": to_value(&drift::check_p3(&f, &drift::default_p3_pairs(), &opts)?)?,
    });
    let v = json!({
        "drift": to_value(&f)?,
        "properties": props?,
        "hypotheses": hypotheses,
    });
    emit_report(&v, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn osgood(a: OsgoodArgs) -> CliResult {
    let f = parse_drift(&a.drift)?;
    let report = drift::check_osgood(&f, a.eps, a.shells, &CheckOptions::default())?;
    let v = json!({
        "drift": to_value(&f)?,
        "eps": a.eps,
        "shells": a.shells,
        "report": to_value(&report)?,
    });
    emit_report(&v, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn harnack_cmd(a: HarnackArgs) -> CliResult {
    let f = parse_drift(&a.drift)?;
    run_harnack(&f, a.log_m, a.log_sup, a.radius, a.phi_only, a.out.as_deref())
}

fn run_harnack(
    f: &DriftFunction,
    log_m: f64,
    log_sup: f64,
    radius: f64,
    phi_only: bool,
    out: Option<&Path>,
) -> CliResult {
    let levels = json!({
        "m": emit::log_value(log_m),
        "sup": emit::log_value(log_sup),
    });
    let v = if phi_only {
        let value = harnack::phi_integral_log(f, log_m, log_sup)?;
        json!({
            "kind": "phi_integral",
            "drift": to_value(f)?,
            "levels": levels,
            "value": value,
        })
    } else {
        let rep = harnack::harnack_integral_log(f, log_m, log_sup, radius)?;
        json!({
            "kind": "functional",
            "drift": to_value(f)?,
            "levels": levels,
            "radius": radius,
            "integral_value": rep.integral_value,
            "classical_ratio_log": emit::log_value(rep.classical_ratio_log),
            "classical_cap": (log_sup - log_m) / (1.0 + radius),
        })
    };
    emit_report(&v, out)?;
    Ok(EXIT_OK)
}

fn extremal(a: ExtremalArgs) -> CliResult {
    let f = parse_drift(&a.drift)?;
    run_extremal(&f, a.k, a.nodes, a.csv.as_deref(), a.out.as_deref())
}

fn run_extremal(
    f: &DriftFunction,
    k: f64,
    nodes: usize,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> CliResult {
    let sol = extremal1d::build_extremal(f, k, nodes)?;
    let verify = extremal1d::verify_extremal(&sol)?;
    let sharp = extremal1d::sharpness_report(&sol)?;
    if let Some(path) = csv {
        let mut rows = Vec::with_capacity(sol.x_grid.len());
        for i in 0..sol.x_grid.len() {
            let w = sol.log_u[i];
            let ratio =
                (f.eta_log(w) + f.deta_dlogt(w)).abs() / f.eta_log(sol.log_u_prime[i]);
            rows.push(vec![sol.x_grid[i], w, sol.log_u_prime[i], ratio]);
        }
        let text = emit::render_csv(&["x", "log_u", "log_u_prime", "ratio"], &rows);
        write_text(Some(path), &text)?;
    }
    let v = json!({
        "drift": to_value(f)?,
        "k": k,
        "nodes": nodes,
        "vanished_at": sol.vanished_at,
        "sharpness": {
            "integral_value": sharp.integral_value,
            "m": emit::log_value(sharp.m_inf),
            "sup": emit::log_value(sharp.m_sup),
            "classical_ratio_log": emit::log_value(sharp.classical_ratio_log),
        },
        "verify": to_value(&verify)?,
    });
    emit_report(&v, out)?;
    Ok(EXIT_OK)
}

fn barrier_cmd(a: BarrierArgs) -> CliResult {
    let f = parse_drift(&a.drift)?;
    let pair = EllipticityPair::new(a.lambda_min, a.lambda_max)?;
    run_barrier(&f, a.n, &pair, a.nodes, a.r0, a.out.as_deref())
}

fn run_barrier(
    f: &DriftFunction,
    n: usize,
    pair: &EllipticityPair,
    nodes: usize,
    r0_override: Option<f64>,
    out: Option<&Path>,
) -> CliResult {
    let spec = match r0_override {
        Some(r0) => Ok(barrier::BarrierSpec::for_radius(n, pair, r0)?),
        None => barrier::find_r0(f, n, pair),
    };
    let spec = match spec {
        Ok(s) => s,
        Err(CoreError::Infeasible(detail)) => {
            // Infeasibility is a finding, not a failure: report and exit 0.
            let v = json!({
                "drift": to_value(f)?,
                "n": n,
                "ellipticity": to_value(pair)?,
                "feasible": false,
                "detail": detail,
            });
            emit_report(&v, out)?;
            return Ok(EXIT_OK);
        }
        Err(e) => return Err(e.into()),
    };
    let report = barrier::verify_barrier(&spec, f, nodes)?;
    let passes = report.passes;
    let v = json!({
        "drift": to_value(f)?,
        "n": n,
        "ellipticity": to_value(pair)?,
        "feasible": true,
        "spec": to_value(&spec)?,
        "report": to_value(&report)?,
    });
    emit_report(&v, out)?;
    Ok(if passes { EXIT_OK } else { EXIT_ASSERT })
}

fn sequence(a: SequenceArgs) -> CliResult {
    let f = parse_drift(&a.drift)?;
    run_sequence(&f, a.log_m, a.l, a.radius, a.k_max, a.out.as_deref())
}

fn sequence_value(seq: &levelsets::ScalingSequence) -> Value {
    json!({
        "l": seq.l,
        "log_m": emit::log_value(seq.log_m),
        "radius": seq.radius,
        "a": seq.a,
        "max_dual_gap": seq.max_dual_gap,
    })
}

fn run_sequence(
    f: &DriftFunction,
    log_m: f64,
    l: f64,
    radius: f64,
    k_max: usize,
    out: Option<&Path>,
) -> CliResult {
    let seq = levelsets::a_sequence(f, log_m, l, radius, k_max)?;
    let v = json!({
        "drift": to_value(f)?,
        "sequence": sequence_value(&seq),
    });
    emit_report(&v, out)?;
    Ok(EXIT_OK)
}

fn covering(a: CoveringArgs) -> CliResult {
    let consts = levelsets::CoveringConsts {
        l0_scale: a.l0_scale,
        sigma: a.sigma,
        eps: a.eps,
        n: a.n,
    };
    let radii = levelsets::caffarelli_radii(a.a_k1, &consts, a.l_max)?;
    let v = json!({
        "a_k1": a.a_k1,
        "consts": to_value(&consts)?,
        "radii": to_value(&radii)?,
    });
    emit_report(&v, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn iso(a: IsoArgs) -> CliResult {
    if a.target_hi <= a.target_lo {
        return Err(CliError::Config(format!(
            "target range [{}, {}] must be increasing",
            a.target_lo, a.target_hi
        )));
    }
    if !(a.h > 0.0) || !(a.ball_radius > 0.0) {
        return Err(CliError::Config(
            "h and ball radius must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let side = (2.0 / a.h).round() as usize;
    let span = a.target_hi - a.target_lo;
    let mut min_constant = f64::INFINITY;
    let mut max_constant = f64::NEG_INFINITY;
    let mut failures = 0usize;
    for trial in 0..a.sets {
        let target = a.target_lo + (trial * 11) % span;
        let set = levelsets::random_connected_set(
            &mut rng,
            [-1.0, -1.0],
            a.h,
            [side, side],
            a.ball_radius,
            target,
        )?;
        let report = levelsets::isoperimetric_check(&set, a.ball_radius, &[a.delta])?;
        match report.min_ratio {
            Some(r) if r > 0.0 => {
                min_constant = min_constant.min(r);
                max_constant = max_constant.max(r);
            }
            _ => failures += 1,
        }
    }
    let all_positive = failures == 0;
    let v = json!({
        "sets": a.sets,
        "seed": a.seed,
        "h": a.h,
        "delta": a.delta,
        "ball_radius": a.ball_radius,
        "min_constant": if min_constant.is_finite() { Value::from(min_constant) } else { Value::Null },
        "max_constant": if max_constant.is_finite() { Value::from(max_constant) } else { Value::Null },
        "degenerate_sets": failures,
        "all_positive": all_positive,
    });
    emit_report(&v, a.out.as_deref())?;
    Ok(if all_positive { EXIT_OK } else { EXIT_ASSERT })
}

fn parse_profile(
    text: &str,
    interval: Option<&str>,
    profile_nodes: usize,
) -> Result<pxlab::PxProfile, CliError> {
    let spec: PxSpec = serde_json::from_str(text.trim())
        .map_err(|e| CliError::Config(format!("bad exponent profile: {e}")))?;
    let interval = match interval {
        None => None,
        Some(s) => {
            let (lo, hi) = s
                .split_once(',')
                .ok_or_else(|| CliError::Config(format!("interval {s:?} must be \"lo,hi\"")))?;
            let lo: f64 = lo
                .trim()
                .parse()
                .map_err(|e| CliError::Config(format!("bad interval endpoint: {e}")))?;
            let hi: f64 = hi
                .trim()
                .parse()
                .map_err(|e| CliError::Config(format!("bad interval endpoint: {e}")))?;
            Some((lo, hi))
        }
    };
    Ok(pxlab::profile_from_spec(&spec, interval, profile_nodes)?)
}

fn px_solve(a: PxSolveArgs) -> CliResult {
    let prof = parse_profile(&a.profile, a.interval.as_deref(), a.profile_nodes)?;
    let sol = pxlab::solve_px_1d(&prof, a.a, a.b, a.ua, a.ub, a.nodes)?;
    let residual = pxlab::residual_px_nondiv(&sol.u, &prof)?;
    if let Some(path) = a.csv.as_deref() {
        let rows: Vec<Vec<f64>> = (0..a.nodes)
            .map(|i| vec![sol.u.x(i), sol.u.values()[i]])
            .collect();
        write_text(Some(path), &emit::render_csv(&["x", "u"], &rows))?;
    }
    let v = json!({
        "profile": to_value(&prof)?,
        "window": { "a": a.a, "b": a.b, "ua": a.ua, "ub": a.ub, "nodes": a.nodes },
        "flux": sol.flux,
        "residual": {
            "max_abs": residual.max_abs,
            "checked": residual.checked,
            "skipped": residual.skipped,
            "vacuous": residual.vacuous,
        },
    });
    emit_report(&v, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn px_inverse(a: PxInverseArgs) -> CliResult {
    let prof = pxlab::inverse_pk(a.k, a.nodes)?;
    let (pair, model_drift) = pxlab::derive_model_params(&prof)?;
    if let Some(path) = a.csv.as_deref() {
        let (lo, hi) = prof.interval;
        let h = (hi - lo) / ((a.nodes - 1) as f64);
        let mut rows = Vec::with_capacity(a.nodes);
        for i in 0..a.nodes {
            let x = lo + h * (i as f64);
            let (p, dp) = prof.p_and_prime(x)?;
            rows.push(vec![x, p, dp]);
        }
        write_text(Some(path), &emit::render_csv(&["x", "p", "p_prime"], &rows))?;
    }
    let v = json!({
        "profile": to_value(&prof)?,
        "model": {
            "ellipticity": to_value(&pair)?,
            "drift": to_value(&model_drift)?,
        },
    });
    emit_report(&v, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn px_harnack(a: PxHarnackArgs) -> CliResult {
    let rep = pxlab::px_harnack_functional(a.log_m, a.log_sup, a.radius, a.scale)?;
    let v = json!({
        "levels": {
            "m": emit::log_value(rep.log_m),
            "sup": emit::log_value(rep.log_sup),
        },
        "radius": rep.radius,
        "scale": rep.scale,
        "value": rep.value,
        "quadrature_gap": rep.quadrature_gap,
        "explicit_constant": rep.explicit_constant,
    });
    emit_report(&v, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn suite_cmd(a: SuiteArgs) -> CliResult {
    let results = match a.criterion {
        Some(id) => {
            if !(1..=10).contains(&id) {
                return Err(CliError::Config(format!(
                    "criterion ids run 1..=10, got {id}"
                )));
            }
            vec![suite::run_criterion(id)]
        }
        None => suite::run_all(),
    };
    run_suite_report(&results, a.out.as_deref())
}

fn run_suite_report(results: &[suite::CriterionResult], out: Option<&Path>) -> CliResult {
    for r in results {
        println!("{}", r.line());
    }
    let all = suite::all_passed(results);
    println!(
        "{}: {} of {} criteria passed",
        if all { "OK" } else { "FAILED" },
        results.iter().filter(|r| r.passed || r.informational).count(),
        results.len()
    );
    // Runtimes are excluded from the JSON so reruns are byte-identical.
    let rows: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "name": r.name,
                "passed": r.passed,
                "informational": r.informational,
                "detail": r.detail,
            })
        })
        .collect();
    let v = json!({ "results": rows, "all_passed": all });
    write_text(out, &emit::render(&v))?;
    Ok(if all { EXIT_OK } else { EXIT_ASSERT })
}

fn run_config(a: RunArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", a.config.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad config {}: {e}", a.config.display())))?;
    match cfg {
        ExperimentConfig::Sharpness {
            drift,
            k,
            nodes,
            output,
        } => {
            let f = DriftFunction::new(drift)?;
            run_extremal(&f, k, nodes, None, output.as_deref())
        }
        ExperimentConfig::Harnack {
            drift,
            log_m,
            log_sup,
            radius,
            phi_only,
            output,
        } => {
            let f = DriftFunction::new(drift)?;
            run_harnack(&f, log_m, log_sup, radius, phi_only, output.as_deref())
        }
        ExperimentConfig::Barrier {
            drift,
            n,
            lambda_min,
            lambda_max,
            nodes,
            output,
        } => {
            let f = DriftFunction::new(drift)?;
            let pair = EllipticityPair::new(lambda_min, lambda_max)?;
            run_barrier(&f, n, &pair, nodes, None, output.as_deref())
        }
        ExperimentConfig::Levelsets {
            drift,
            log_m,
            l,
            radius,
            k_max,
            covering,
            output,
        } => {
            let f = DriftFunction::new(drift)?;
            run_levelsets_config(&f, log_m, l, radius, k_max, covering, output.as_deref())
        }
        ExperimentConfig::Suite { output } => {
            let results = suite::run_all();
            run_suite_report(&results, output.as_deref())
        }
    }
}

fn run_levelsets_config(
    f: &DriftFunction,
    log_m: f64,
    l: f64,
    radius: f64,
    k_max: usize,
    covering: Option<CoveringSection>,
    out: Option<&Path>,
) -> CliResult {
    let seq = levelsets::a_sequence(f, log_m, l, radius, k_max)?;
    let covering_value = match covering {
        None => Value::Null,
        Some(section) => {
            let radii = levelsets::caffarelli_radii(section.a_k1, &section.consts, section.l_max)?;
            json!({
                "a_k1": section.a_k1,
                "consts": to_value(&section.consts)?,
                "radii": to_value(&radii)?,
            })
        }
    };
    let v = json!({
        "drift": to_value(f)?,
        "sequence": sequence_value(&seq),
        "covering": covering_value,
    });
    emit_report(&v, out)?;
    Ok(EXIT_OK)
}
