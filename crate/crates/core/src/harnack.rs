//! The generalized Harnack functional and its companions.
//!
//! Two distinct integral families appear downstream and are kept apart
//! deliberately:
//!
//! * the **full functional** `int_m^M dt / (R^2 phi(t/R) + t)`, the
//!   quantity the main estimate bounds by a universal constant; after the
//!   substitution `s = ln t` its integrand is `1/(R eta(e^{s - ln R}) + 1)`,
//!   which stays O(1) no matter how extreme `m` and `M` are;
//! * the **phi-only integral** `int_m^M dt / phi(t)`, the sharpness
//!   quantity ([`phi_integral_log`]); its log-domain integrand is
//!   `1/eta(e^s)`.
//!
//! For the log-linear drift at `R = 1` the two differ by a constant inside
//! the logarithm (`ln((2 + |ln .|)/..)` vs `ln((1 + |ln .|)/..)`), an easy
//! pair to conflate; the tests pin both values side by side.
//!
//! All entry points accept endpoints either as values or as logarithms
//! (`*_log`), because the sharp examples live at scales like
//! `m = exp(-e^{k+1})` that no `f64` can hold directly.

use crate::drift::{DriftFunction, DriftSpec};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quad::{self, QuadOptions};
use serde::Serialize;

/// Outcome of evaluating the full functional.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HarnackReport {
    /// Infimum endpoint; holds `ln m` when `log_domain` is set.
    #[serde(rename = "m")]
    pub m_inf: f64,
    /// Supremum endpoint; holds `ln M` when `log_domain` is set.
    #[serde(rename = "M")]
    pub m_sup: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub integral_value: f64,
    /// `ln M - ln m`, finite even when the values are not representable.
    pub classical_ratio_log: f64,
    pub log_domain: bool,
}

fn validate_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::domain(format!("radius must lie in (0, 1], got {radius}")));
    }
    Ok(())
}

fn validate_log_endpoints(ln_m: f64, ln_sup: f64) -> Result<()> {
    if !ln_m.is_finite() || !ln_sup.is_finite() {
        return Err(Error::domain(format!(
            "endpoints must be positive finite, got logs ({ln_m}, {ln_sup})"
        )));
    }
    if ln_m > ln_sup {
        return Err(Error::domain(format!(
            "lower endpoint exceeds upper: ln m = {ln_m} > ln M = {ln_sup}"
        )));
    }
    Ok(())
}

/// Full-functional integrand after `s = ln t`.
fn full_integrand(f: &DriftFunction, radius: f64) -> impl Fn(f64) -> f64 + '_ {
    let ln_r = radius.ln();
    move |s: f64| 1.0 / (radius * f.eta_log(s - ln_r) + 1.0)
}

/// Closed form of the full functional for drift kinds that admit one
/// (exact for every admissible `R`), in log endpoints.
pub fn closed_form_harnack_log(
    f: &DriftFunction,
    ln_m: f64,
    ln_sup: f64,
    radius: f64,
) -> Option<f64> {
    match f.spec() {
        DriftSpec::Homogeneous => Some((ln_sup - ln_m) / (radius + 1.0)),
        DriftSpec::LogLinear { c } => {
            // Antiderivative of 1/(Rc(1 + |sigma|) + 1) in sigma = s - ln R,
            // normalized at sigma = 0.
            let rc = radius * c;
            let g = |sigma: f64| {
                sigma.signum() * ((rc * (1.0 + sigma.abs()) + 1.0).ln() - (rc + 1.0).ln()) / rc
            };
            let ln_r = radius.ln();
            Some(g(ln_sup - ln_r) - g(ln_m - ln_r))
        }
        _ => None,
    }
}

fn harnack_core(
    f: &DriftFunction,
    ln_m: f64,
    ln_sup: f64,
    radius: f64,
    log_domain: bool,
) -> Result<HarnackReport> {
    validate_radius(radius)?;
    validate_log_endpoints(ln_m, ln_sup)?;
    let integral_value = if ln_m == ln_sup {
        0.0
    } else {
        quad::integrate_with_breakpoints(
            full_integrand(f, radius),
            ln_m,
            ln_sup,
            &[radius.ln()],
            &QuadOptions::default(),
        )?
        .value
    };
    Ok(HarnackReport {
        m_inf: ln_m,
        m_sup: ln_sup,
        radius,
        integral_value,
        classical_ratio_log: ln_sup - ln_m,
        log_domain,
    })
}

/// `int_m^M dt / (R^2 phi(t/R) + t)` by adaptive quadrature in `s = ln t`
/// with the integrand kink at `t = R` pinned to a panel boundary.
pub fn harnack_integral(
    f: &DriftFunction,
    m: f64,
    sup: f64,
    radius: f64,
) -> Result<HarnackReport> {
    if !(m > 0.0) || !(sup > 0.0) {
        return Err(Error::domain(format!("endpoints must be positive, got ({m}, {sup})")));
    }
    let mut rep = harnack_core(f, m.ln(), sup.ln(), radius, false)?;
    rep.m_inf = m;
    rep.m_sup = sup;
    Ok(rep)
}

/// Same functional with endpoints supplied as `(ln m, ln M)`.
pub fn harnack_integral_log(
    f: &DriftFunction,
    ln_m: f64,
    ln_sup: f64,
    radius: f64,
) -> Result<HarnackReport> {
    harnack_core(f, ln_m, ln_sup, radius, true)
}

/// `ln M - ln m`; `+inf` when `m = 0`.
pub fn classical_ratio(m: f64, sup: f64) -> Result<f64> {
    if m < 0.0 || !(sup > 0.0) || m > sup {
        return Err(Error::domain(format!(
            "classical ratio needs 0 <= m <= M with M > 0, got ({m}, {sup})"
        )));
    }
    Ok(sup.ln() - m.ln())
}

/// `ln M - ln m` from log endpoints.
pub fn classical_ratio_from_logs(ln_m: f64, ln_sup: f64) -> Result<f64> {
    validate_log_endpoints(ln_m, ln_sup)?;
    Ok(ln_sup - ln_m)
}

/// `int_m^M dt / phi(t)` from log endpoints: closed-form antiderivative when
/// the drift carries one, adaptive quadrature of `1/eta(e^s)` otherwise.
pub fn phi_integral_log(f: &DriftFunction, ln_m: f64, ln_sup: f64) -> Result<f64> {
    validate_log_endpoints(ln_m, ln_sup)?;
    if ln_m == ln_sup {
        return Ok(0.0);
    }
    if let (Some(fa), Some(fb)) = (
        f.phi_recip_antideriv_log(ln_m),
        f.phi_recip_antideriv_log(ln_sup),
    ) {
        return Ok(fb - fa);
    }
    Ok(quad::integrate_with_breakpoints(
        |s| 1.0 / f.eta_log(s),
        ln_m,
        ln_sup,
        &[0.0],
        &QuadOptions::default(),
    )?
    .value)
}

/// The same quantity through two independent float paths: the full
/// functional, and `int_{m/R}^{M/R} ds / (R phi(s) + s)` after `t = R s`.
/// They agree analytically; the pair exposes quadrature drift.
pub fn rescaled_integral_identity(
    f: &DriftFunction,
    m: f64,
    sup: f64,
    radius: f64,
) -> Result<(f64, f64)> {
    if !(m > 0.0) || !(sup > 0.0) {
        return Err(Error::domain(format!("endpoints must be positive, got ({m}, {sup})")));
    }
    rescaled_integral_identity_log(f, m.ln(), sup.ln(), radius)
}

pub fn rescaled_integral_identity_log(
    f: &DriftFunction,
    ln_m: f64,
    ln_sup: f64,
    radius: f64,
) -> Result<(f64, f64)> {
    let value_a = harnack_core(f, ln_m, ln_sup, radius, true)?.integral_value;
    let value_b = if ln_m == ln_sup {
        0.0
    } else {
        let ln_r = radius.ln();
        quad::integrate_with_breakpoints(
            |s| 1.0 / (radius * f.eta_log(s) + 1.0),
            ln_m - ln_r,
            ln_sup - ln_r,
            &[0.0],
            &QuadOptions::default(),
        )?
        .value
    };
    Ok((value_a, value_b))
}

/// Comparison of `int_m^{L^k m} dt/(R phi(t) + t)` against the geometric
/// sums built from `a_j = (1/L) / (R eta(L^j m) + 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct SumVsIntegral {
    pub lhs: f64,
    /// `L * sum a_j` — the printed comparison; NOT an upper bound for the
    /// integral (see the module tests for the explicit counterexample).
    pub rhs_scaled_sum: f64,
    /// `L (L - 1) * sum a_j` — the bound that does hold: the integrand
    /// `1/(R phi + t)` is decreasing once phi is nondecreasing, so each
    /// geometric block is at most its width `L^j m (L-1)` times the
    /// left-endpoint value `1/(L^j m (R eta(L^j m) + 1)) = L a_j / (L^j m)`.
    pub rhs_block_bound: f64,
    pub a: Vec<f64>,
}

/// Log-endpoint form: the blocks live at `ln m + j ln L`.
pub fn sum_vs_integral_log(
    f: &DriftFunction,
    ln_m: f64,
    l: f64,
    radius: f64,
    k: usize,
) -> Result<SumVsIntegral> {
    validate_radius(radius)?;
    if !ln_m.is_finite() {
        return Err(Error::domain(format!("ln m must be finite, got {ln_m}")));
    }
    if !(l > 1.0) || !l.is_finite() {
        return Err(Error::domain(format!("block ratio L must exceed 1, got {l}")));
    }
    if k < 1 {
        return Err(Error::domain("sum comparison needs k >= 1"));
    }
    let ln_l = l.ln();
    let a: Vec<f64> = (0..k)
        .map(|j| (1.0 / l) / (radius * f.eta_log(ln_m + j as f64 * ln_l) + 1.0))
        .collect();
    let sum: f64 = a.iter().sum();
    let lhs = quad::integrate_with_breakpoints(
        |s| 1.0 / (radius * f.eta_log(s) + 1.0),
        ln_m,
        ln_m + k as f64 * ln_l,
        &[0.0],
        &QuadOptions::default(),
    )?
    .value;
    Ok(SumVsIntegral {
        lhs,
        rhs_scaled_sum: l * sum,
        rhs_block_bound: l * (l - 1.0) * sum,
        a,
    })
}

pub fn sum_vs_integral(
    f: &DriftFunction,
    m: f64,
    l: f64,
    radius: f64,
    k: usize,
) -> Result<SumVsIntegral> {
    if !(m > 0.0) {
        return Err(Error::domain(format!("m must be positive, got {m}")));
    }
    sum_vs_integral_log(f, m.ln(), l, radius, k)
}

/// Oscillation decay over dyadic balls plus a fitted exponent.
#[derive(Clone, Debug, Serialize)]
pub struct OscillationReport {
    pub radii: Vec<f64>,
    /// `ln(sup - inf)` per radius, computed without underflow for
    /// log-domain grids; `-inf` marks a radius with zero oscillation.
    pub osc_log: Vec<f64>,
    /// Least-squares slope of `osc_log` against `ln R`; `None` when fewer
    /// than two radii carry positive oscillation.
    pub alpha: Option<f64>,
    /// RMS residual of the fit, when `alpha` exists.
    pub fit_residual: Option<f64>,
    /// Set when the data was degenerate (constant function, or radii lost
    /// to grid coarseness).
    pub degenerate: bool,
}

/// Oscillations of `u` over the balls `B(center, R0 2^{-i})`, `i < levels`,
/// with an exponent fitted by log-log least squares. Radii whose ball holds
/// fewer than two grid nodes are dropped.
pub fn holder_oscillation(
    u: &GridFunction,
    center: [f64; 2],
    r0: f64,
    levels: usize,
) -> Result<OscillationReport> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::domain(format!("R0 must be positive, got {r0}")));
    }
    if levels < 3 {
        return Err(Error::domain("oscillation fit needs at least 3 levels"));
    }
    let [nx, ny] = u.shape();
    let mut radii = Vec::new();
    let mut osc_log = Vec::new();
    let mut truncated = false;
    for level in 0..levels {
        let r = r0 * 0.5f64.powi(level as i32);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut count = 0usize;
        for i in 0..nx {
            for j in 0..ny {
                let dx = u.x(i) - center[0];
                let dy = if u.dim() == 2 { u.y(j) - center[1] } else { 0.0 };
                if dx.hypot(dy) <= r + 1e-12 {
                    let v = u.get(i, j);
                    lo = lo.min(v);
                    hi = hi.max(v);
                    count += 1;
                }
            }
        }
        if count < 2 {
            truncated = true;
            break;
        }
        // Oscillation of the represented function. Stored logs turn
        // sup - inf into exp(hi) - exp(lo) = exp(hi) (1 - e^{lo - hi}),
        // evaluated in log form to survive hi far below ln(MIN_POSITIVE).
        let ln_osc = if u.log_domain() {
            if hi == lo {
                f64::NEG_INFINITY
            } else {
                hi + (-((lo - hi).exp())).ln_1p()
            }
        } else {
            (hi - lo).ln()
        };
        radii.push(r);
        osc_log.push(ln_osc);
    }

    let finite: Vec<(f64, f64)> = radii
        .iter()
        .zip(&osc_log)
        .filter(|&(_, &o)| o.is_finite())
        .map(|(&r, &o)| (r.ln(), o))
        .collect();
    let (alpha, fit_residual) = if finite.len() >= 2 {
        let n = finite.len() as f64;
        let mean_x = finite.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = finite.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = finite.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
        let sxy: f64 = finite.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        let slope = sxy / sxx;
        let rss: f64 = finite
            .iter()
            .map(|p| (p.1 - (mean_y + slope * (p.0 - mean_x))).powi(2))
            .sum();
        (Some(slope), Some((rss / n).sqrt()))
    } else {
        (None, None)
    };
    let degenerate = alpha.is_none() || truncated;
    Ok(OscillationReport { radii, osc_log, alpha, fit_residual, degenerate })
}
