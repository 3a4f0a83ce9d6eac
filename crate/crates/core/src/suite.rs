//! The full verification matrix: every headline check in the project runs
//! as a numbered, timed criterion with a one-line pass/fail summary, so a
//! single call reproduces the whole battery deterministically.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::drift::{self, CheckOptions, DriftFunction, Verdict};
use crate::error::Result;
use crate::extremal1d;
use crate::grid::GridFunction;
use crate::harnack;
use crate::levelsets;
use crate::pucci::{self, EllipticityPair, SymMatrix};
use crate::pxlab::{self, PxSpec};
use crate::barrier;

/// Outcome of one numbered criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// Informational rows report excluded quantities and always pass.
    pub informational: bool,
    /// Short measurement summary for the one-line report.
    pub detail: String,
    pub runtime: Duration,
}

impl CriterionResult {
    /// One-line rendering: status, number, name, measurement, runtime.
    pub fn line(&self) -> String {
        let status = if self.informational {
            "INFO"
        } else if self.passed {
            "PASS"
        } else {
            "FAIL"
        };
        format!(
            "{status} criterion {:2} {}: {} [{:.2}s]",
            self.id,
            self.name,
            self.detail,
            self.runtime.as_secs_f64()
        )
    }
}

const CRITERION_NAMES: [&str; 10] = [
    "sharpness-identity",
    "classical-ratio-blowup",
    "curvature-ratio-bound",
    "osgood-classifier",
    "barrier-feasibility",
    "pucci-identities",
    "functional-bounds",
    "px-pipeline",
    "level-set-machinery",
    "excluded-constants",
];

/// Run one criterion by its 1-based id.
pub fn run_criterion(id: usize) -> CriterionResult {
    let start = Instant::now();
    let outcome = match id {
        1 => sharpness_identity(),
        2 => classical_ratio_blowup(),
        3 => curvature_ratio_bound(),
        4 => osgood_classifier(),
        5 => barrier_feasibility(),
        6 => pucci_identities(),
        7 => functional_bounds(),
        8 => px_pipeline(),
        9 => level_set_machinery(),
        10 => excluded_constants(),
        _ => Err(crate::Error::domain(format!(
            "criterion ids run 1..=10, got {id}"
        ))),
    };
    let runtime = start.elapsed();
    let (mut passed, detail) = match outcome {
        Ok(pair) => pair,
        Err(e) => (false, format!("error: {e}")),
    };
    // Per-criterion runtime budgets are part of the pass condition.
    let budget = match id {
        1 => Some(Duration::from_secs(5)),
        4 => Some(Duration::from_secs(1)),
        8 => Some(Duration::from_secs(30)),
        _ => None,
    };
    if let Some(b) = budget {
        if runtime > b {
            passed = false;
        }
    }
    CriterionResult {
        id,
        name: CRITERION_NAMES[id.clamp(1, 10) - 1],
        passed,
        informational: id == 10,
        detail,
        runtime,
    }
}

/// Run the whole matrix in order.
pub fn run_all() -> Vec<CriterionResult> {
    (1..=10).map(run_criterion).collect()
}

/// True when every non-informational criterion passed.
pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.passed || r.informational)
}

/// Criterion 1: the extremal construction integrates to exactly 2 between
/// its endpoint levels for the unit log-linear drift.
fn sharpness_identity() -> Result<(bool, String)> {
    let f = DriftFunction::log_linear(1.0)?;
    let mut worst = 0.0f64;
    for k in [1.0, 2.0, std::f64::consts::E, 10.0] {
        let sol = extremal1d::build_extremal(&f, k, 801)?;
        let rep = extremal1d::sharpness_report(&sol)?;
        worst = worst.max((rep.integral_value - 2.0).abs());
    }
    Ok((
        worst <= 1e-6,
        format!("max |integral - 2| = {worst:.2e} over k in {{1, 2, e, 10}}"),
    ))
}

/// Criterion 2: the closed-form family's classical ratio equals
/// e^k (e - 1/e) in the log and grows strictly in k.
fn classical_ratio_blowup() -> Result<(bool, String)> {
    let scale = std::f64::consts::E - (-1.0f64).exp();
    let mut worst = 0.0f64;
    let mut prev = f64::NEG_INFINITY;
    let mut increasing = true;
    for k in 1..=10 {
        let kf = k as f64;
        let got = extremal1d::closed_form_classical_ratio_log(kf);
        let expect = kf.exp() * scale;
        worst = worst.max((got - expect).abs() / expect);
        if got <= prev {
            increasing = false;
        }
        prev = got;
    }
    Ok((
        worst <= 1e-10 && increasing,
        format!("max rel err = {worst:.2e}, strictly increasing = {increasing}"),
    ))
}

/// Criterion 3: curvature-to-drift ratio of the closed-form family stays
/// at or below 2 on a 10^4-point sweep.
fn curvature_ratio_bound() -> Result<(bool, String)> {
    let mut max_ratio = f64::NEG_INFINITY;
    for i in 0..100 {
        let k = 1.0 + 19.0 * (i as f64) / 99.0;
        for j in 0..100 {
            let x = -2.0 + 4.0 * (j as f64 + 0.5) / 100.0;
            let point = extremal1d::closed_form_example(k, x)?;
            max_ratio = max_ratio.max(point.ratio);
        }
    }
    Ok((
        max_ratio <= 2.0 + 1e-12,
        format!("max ratio = {max_ratio:.12} over 10^4 samples, bound 2"),
    ))
}

/// Criterion 4: the shell-sum classifier separates divergent from
/// convergent drift integrals at three probe scales.
fn osgood_classifier() -> Result<(bool, String)> {
    let opts = CheckOptions::default();
    let mut ok = true;
    for eps in [1.0, 0.1, 0.01] {
        let homog = drift::check_osgood(&DriftFunction::homogeneous(), eps, 40, &opts)?;
        let loglin = drift::check_osgood(&DriftFunction::log_linear(1.0)?, eps, 40, &opts)?;
        let sqrt = drift::check_osgood(&DriftFunction::power(0.5)?, eps, 40, &opts)?;
        ok &= homog.verdict == Verdict::Holds;
        ok &= loglin.verdict == Verdict::Holds;
        ok &= sqrt.verdict == Verdict::Fails;
    }
    Ok((
        ok,
        "t and (1+|log t|)t divergent, sqrt(t) convergent, eps in {1, 0.1, 0.01}".into(),
    ))
}

/// Criterion 5: the radial barrier is feasible at the predicted scales and
/// verifies with nonnegative interior residual.
fn barrier_feasibility() -> Result<(bool, String)> {
    let pair = EllipticityPair::unit();
    let homog = DriftFunction::homogeneous();
    let found = barrier::find_r0(&homog, 2, &pair)?;
    let rel = (found.r0 - 1.0 / 96.0).abs() / (1.0 / 96.0);
    let homog_report = barrier::verify_barrier(&found, &homog, 64)?;

    let loglin = DriftFunction::log_linear(1.0)?;
    let found_ll = barrier::find_r0(&loglin, 2, &pair)?;
    let ll_in_window = found_ll.r0 >= 8e-4 && found_ll.r0 <= 9e-4;
    let ll_report = barrier::verify_barrier(&found_ll, &loglin, 64)?;

    let residual_ok =
        homog_report.min_residual >= -1e-12 && ll_report.min_residual >= -1e-12;
    Ok((
        rel <= 1e-6 && ll_in_window && residual_ok,
        format!(
            "r0 = {:.9} (rel err {rel:.2e} vs 1/96), log-linear r0 = {:.6e}, min residual {:.1e}",
            found.r0,
            found_ll.r0,
            homog_report.min_residual.min(ll_report.min_residual)
        ),
    ))
}

/// Criterion 6: extremal-operator duality, ordering, and the equal-bounds
/// trace collapse on 1000 random symmetric matrices.
fn pucci_identities() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(0x7e11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = rng.gen_range(-1.0..1.0);
        let b = rng.gen_range(-1.0..1.0);
        let c = rng.gen_range(-1.0..1.0);
        let lam = rng.gen_range(0.1..2.0);
        let big = lam + rng.gen_range(0.0..2.0);
        let pair = EllipticityPair::new(lam, big)?;
        let m = SymMatrix::from_rows([[a, b], [b, a + c]])?;
        let neg = SymMatrix::from_rows([[-a, -b], [-b, -(a + c)]])?;
        let plus = pucci::pucci_plus(&m, &pair);
        let minus = pucci::pucci_minus(&m, &pair);
        // Duality: the maximal operator of -M mirrors the minimal of M.
        worst = worst.max((pucci::pucci_plus(&neg, &pair) + minus).abs());
        worst = worst.max((pucci::pucci_minus(&neg, &pair) + plus).abs());
        // Ordering.
        if minus > plus + 1e-13 {
            worst = worst.max(minus - plus);
        }
        // Equal bounds collapse both operators onto -lambda tr.
        let equal = EllipticityPair::new(lam, lam)?;
        let trace = -lam * (2.0 * a + c);
        worst = worst.max((pucci::pucci_plus(&m, &equal) - trace).abs());
        worst = worst.max((pucci::pucci_minus(&m, &equal) - trace).abs());
    }
    Ok((
        worst <= 1e-13,
        format!("max identity defect = {worst:.2e} on 1000 random matrices"),
    ))
}

/// Criterion 7: the damped functional sits below the classical spread
/// scaled by 1/(1+R); closed form, quadrature, and the rescaled identity
/// agree.
fn functional_bounds() -> Result<(bool, String)> {
    let homog = DriftFunction::homogeneous();
    let loglin = DriftFunction::log_linear(1.0)?;
    let mut rng = StdRng::seed_from_u64(0xb0b);
    let mut bound_ok = true;
    for f in [&homog, &loglin] {
        for _ in 0..1000 {
            let a = rng.gen_range(-20.0..20.0);
            let b = rng.gen_range(-20.0..20.0);
            let (ln_m, ln_sup) = if a <= b { (a, b) } else { (b, a) };
            let radius = rng.gen_range(0.01..1.0);
            let rep = harnack::harnack_integral_log(f, ln_m, ln_sup, radius)?;
            let cap = (ln_sup - ln_m) / (1.0 + radius);
            if rep.integral_value > cap + 1e-12 {
                bound_ok = false;
            }
        }
    }

    let mut closed_gap = 0.0f64;
    for i in 0..50 {
        let ln_m = -10.0 + 0.3 * (i as f64);
        let ln_sup = ln_m + 1.0 + (i as f64) * 0.2;
        let rep = harnack::harnack_integral_log(&loglin, ln_m, ln_sup, 1.0)?;
        let closed = harnack::closed_form_harnack_log(&loglin, ln_m, ln_sup, 1.0)
            .expect("log-linear closed form exists");
        closed_gap = closed_gap.max((rep.integral_value - closed).abs());
    }

    let mut rescale_gap = 0.0f64;
    for _ in 0..100 {
        let a = rng.gen_range(-15.0..15.0);
        let b = rng.gen_range(-15.0..15.0);
        let (ln_m, ln_sup) = if a <= b { (a, b) } else { (b, a) };
        let radius = rng.gen_range(0.05..1.0);
        let (lhs, rhs) = harnack::rescaled_integral_identity_log(&loglin, ln_m, ln_sup, radius)?;
        rescale_gap = rescale_gap.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }

    Ok((
        bound_ok && closed_gap <= 1e-8 && rescale_gap <= 1e-8,
        format!(
            "bound held on 2x1000 draws, closed-vs-quad gap {closed_gap:.2e}, rescale gap {rescale_gap:.2e}"
        ),
    ))
}

/// Criterion 8: the variable-exponent pipeline end to end: exact linear
/// solves, the inverse family's residuals and refinement order, and
/// two-sided bounds on q_k.
fn px_pipeline() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();

    // Constant exponents give linear solutions whose residual vanishes.
    for value in [2.0, 4.0] {
        let prof = pxlab::profile_from_spec(&PxSpec::Constant { value }, Some((0.0, 1.0)), 0)?;
        let sol = pxlab::solve_px_1d(&prof, 0.0, 1.0, 0.0, 1.0, 21)?;
        let rep = pxlab::residual_px_nondiv(&sol.u, &prof)?;
        if rep.max_abs > 1e-12 {
            ok = false;
            notes.push(format!("p = {value}: residual {:.2e}", rep.max_abs));
        }
    }

    // The log-form exact solution passes the residual check for every
    // index, at the stated grid resolution.
    let mut max_residual = 0.0f64;
    for k in 1..=10u32 {
        let prof = pxlab::inverse_pk(k, 801)?;
        let lo = f64::from(k) - 2.0;
        let w = GridFunction::from_fn_1d(lo, 1e-3, 4001, true, |x| -x.exp())?;
        let rep = pxlab::residual_px_nondiv(&w, &prof)?;
        max_residual = max_residual.max(rep.max_abs);
    }
    if max_residual > 1e-6 {
        ok = false;
    }
    notes.push(format!("max log residual {max_residual:.2e}"));

    // Second-order refinement.
    let prof3 = pxlab::inverse_pk(3, 801)?;
    let coarse = GridFunction::from_fn_1d(1.0, 2e-3, 2001, true, |x| -x.exp())?;
    let fine = GridFunction::from_fn_1d(1.0, 1e-3, 4001, true, |x| -x.exp())?;
    let rc = pxlab::residual_px_nondiv(&coarse, &prof3)?.max_abs;
    let rf = pxlab::residual_px_nondiv(&fine, &prof3)?.max_abs;
    let order = (rc / rf).log2();
    if (order - 2.0).abs() > 0.2 {
        ok = false;
    }
    notes.push(format!("refinement order {order:.2}"));

    // Two-sided bounds on q_k: one constant works for every index, and
    // the window endpoints settle within 10% of e^{-+2} once the index
    // clears the transient regime (k >= 6).
    let mut q_lo = f64::INFINITY;
    let mut q_hi = f64::NEG_INFINITY;
    for k in 1..=10u32 {
        let prof = pxlab::inverse_pk(k, 801)?;
        q_lo = q_lo.min(prof.p_minus - 1.0);
        q_hi = q_hi.max(prof.p_plus - 1.0);
    }
    if !(q_lo >= 0.1 && q_hi <= 10.0) {
        ok = false;
    }
    let mut endpoints_ok = true;
    for k in 6..=10u32 {
        let prof = pxlab::inverse_pk(k, 801)?;
        let kf = f64::from(k);
        let left = prof.p(kf - 2.0)? - 1.0;
        let right = prof.p(kf + 2.0)? - 1.0;
        endpoints_ok &= (left - 2.0f64.exp()).abs() <= 0.1 * 2.0f64.exp();
        endpoints_ok &= (right - (-2.0f64).exp()).abs() <= 0.1 * (-2.0f64).exp();
    }
    if !endpoints_ok {
        ok = false;
    }
    notes.push(format!(
        "q range [{q_lo:.4}, {q_hi:.4}] within [0.1, 10], settled endpoints within 10%"
    ));

    Ok((ok, notes.join("; ")))
}

/// Criterion 9: level-set scaffolding: dual forms of the scale sequence,
/// its ratio bound, the empirical isoperimetric constant on random sets,
/// and the covering-tail closed form.
fn level_set_machinery() -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();

    let drifts = [
        DriftFunction::homogeneous(),
        DriftFunction::log_linear(1.0)?,
        DriftFunction::power(2.0)?,
        DriftFunction::log_iterated(),
    ];
    let mut dual_gap = 0.0f64;
    let mut ratio_ok = true;
    let l = 6.0;
    for f in &drifts {
        for log_m in [-3.0, 0.0, 2.0] {
            let seq = levelsets::a_sequence(f, log_m, l, 1.0, 64)?;
            dual_gap = dual_gap.max(seq.max_dual_gap);
            for k in 1..seq.a.len() {
                if seq.a[k] / seq.a[k - 1] > l * (1.0 + 1e-12) {
                    ratio_ok = false;
                }
            }
        }
    }
    if dual_gap > 1e-12 || !ratio_ok {
        ok = false;
    }
    notes.push(format!("dual gap {dual_gap:.2e}, ratio bound L = 6 held"));

    // 100 randomized connected pixel sets at h = delta/8.
    let mut rng = ChaCha8Rng::seed_from_u64(0x1507);
    let h = 0.0125;
    let delta = 0.1;
    let mut min_constant = f64::INFINITY;
    for trial in 0..100 {
        let target = 40 + (trial * 11) % 1200;
        let set = levelsets::random_connected_set(&mut rng, [-1.0, -1.0], h, [160, 160], 0.9, target)?;
        let report = levelsets::isoperimetric_check(&set, 0.9, &[delta])?;
        match report.min_ratio {
            Some(r) if r > 0.0 => min_constant = min_constant.min(r),
            _ => ok = false,
        }
    }
    notes.push(format!("empirical isoperimetric constant {min_constant:.4}"));

    let consts = levelsets::CoveringConsts::default();
    let radii = levelsets::caffarelli_radii(0.25, &consts, 40)?;
    if radii.max_tail_gap > 1e-12 {
        ok = false;
    }
    notes.push(format!("covering tail gap {:.2e}", radii.max_tail_gap));

    Ok((ok, notes.join("; ")))
}

/// Criterion 10: quantities excluded from desk-scale verification,
/// reported with measured stand-ins instead of assertions.
fn excluded_constants() -> Result<(bool, String)> {
    // Oscillation-decay exponent: fitted on a sample profile, reported only.
    let u = GridFunction::from_fn_2d([-1.0, -1.0], 0.01, [201, 201], false, |x, y| {
        (x * x + y * y).powf(0.25)
    })?;
    let osc = harnack::holder_oscillation(&u, [0.0, 0.0], 0.5, 5)?;
    let alpha = osc
        .alpha
        .map(|a| format!("{a:.3}"))
        .unwrap_or_else(|| "n/a".into());
    Ok((
        true,
        format!(
            "excluded: universal inequality constant, oscillation exponent (sample fit alpha = {alpha}), \
             measure-dichotomy constants; covered by property suites 1-9"
        ),
    ))
}
