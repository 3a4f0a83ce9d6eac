//! One-dimensional extremal trajectories `u' = phi(u)`.
//!
//! These solutions saturate the generalized Harnack comparison: along any
//! trajectory, `int_{u(a)}^{u(b)} dt/phi(t) = b - a` holds exactly, so the
//! interval `(-1, 1)` always contributes the value 2 regardless of how fast
//! the drift grows. The classical `ln(M/m)` ratio on the same trajectories is
//! unbounded in the starting depth `k`, which is the gap the generalized
//! functional closes.
//!
//! Everything is stored in log-domain: for starting depth `k`, the endpoint
//! values behave like `exp(-e^k)` and underflow doubles long before the
//! interesting regime ends.

use serde::Serialize;

use crate::drift::DriftFunction;
use crate::error::{Error, Result};
use crate::harnack::{phi_integral_log, HarnackReport};
use crate::ode::{integrate, OdeOptions, StopReason};

/// Trajectory of `u' = phi(u)` with `u(0) = 1/k`, sampled on `[-2, 2]`.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremalSolution {
    /// Starting depth: `u(0) = 1/k`, stored as `ln u(0) = -ln k`.
    pub k: f64,
    /// Sample abscissae, uniform, always containing -1, 0, 1.
    pub x_grid: Vec<f64>,
    /// `ln u` at each node.
    pub log_u: Vec<f64>,
    /// `ln u' = ln phi(u)` at each node.
    pub log_u_prime: Vec<f64>,
    /// Where the solution hit zero, for drifts violating the Osgood
    /// condition; nodes to the left of this abscissa are not present.
    pub vanished_at: Option<f64>,
    pub drift: DriftFunction,
}

/// Integrates `d(ln u)/dx = eta(u)` on `[-2, 2]` from `ln u(0) = -ln k`.
///
/// `nodes` must be odd with `nodes - 1` divisible by 4 so that -1, 0, 1 are
/// all sample points (the default CLI grid uses 801). A solution collapsing
/// to zero in finite `x` (possible only for non-Osgood drifts) yields a
/// truncated grid plus `vanished_at`; a right-side blow-up before `x = 2`
/// (drift growing faster than the trajectory can sustain) is an error.
pub fn build_extremal(f: &DriftFunction, k: f64, nodes: usize) -> Result<ExtremalSolution> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::domain(format!("starting depth k must be >= 1, got {k}")));
    }
    if nodes < 5 || !(nodes - 1).is_multiple_of(4) {
        return Err(Error::domain(format!(
            "node count must be 4j + 1 for some j >= 1 so that -1, 0, 1 are nodes, got {nodes}"
        )));
    }
    let h = 4.0 / (nodes - 1) as f64;
    let center = (nodes - 1) / 2;
    let x_of = |i: usize| -2.0 + h * i as f64;
    let rhs = |_: f64, w: f64| f.eta_log(w);
    let opts = OdeOptions::default();

    let w0 = -k.ln();
    let mut w_right = vec![w0];
    for i in center..nodes - 1 {
        let (xa, xb) = (x_of(i), x_of(i + 1));
        let out = integrate(rhs, xa, *w_right.last().unwrap(), xb, &opts);
        if out.reason != StopReason::Reached {
            // Rightward the state only grows, so any stop is a blow-up.
            return Err(Error::OdeFailure {
                x: out.x,
                reason: format!("solution blows up (ln u = {:.3e})", out.w),
            });
        }
        w_right.push(out.w);
    }

    let mut w_left = Vec::new();
    let mut vanished_at = None;
    for i in (0..center).rev() {
        let (xa, xb) = (x_of(i + 1), x_of(i));
        let prev = w_left.last().copied().unwrap_or(w0);
        let out = integrate(rhs, xa, prev, xb, &opts);
        if out.reason != StopReason::Reached {
            // Leftward the state only falls, so any stop means u reached
            // zero at finite x: the strong-minimum-principle counterexample.
            vanished_at = Some(out.x);
            break;
        }
        w_left.push(out.w);
    }

    let first = center - w_left.len();
    let mut x_grid = Vec::with_capacity(nodes - first);
    let mut log_u = Vec::with_capacity(nodes - first);
    for (offset, &w) in w_left.iter().rev().enumerate() {
        x_grid.push(x_of(first + offset));
        log_u.push(w);
    }
    for (offset, &w) in w_right.iter().enumerate() {
        x_grid.push(x_of(center + offset));
        log_u.push(w);
    }
    let log_u_prime = log_u.iter().map(|&w| f.phi_log(w)).collect();
    Ok(ExtremalSolution {
        k,
        x_grid,
        log_u,
        log_u_prime,
        vanished_at,
        drift: f.clone(),
    })
}

impl ExtremalSolution {
    /// `ln u` at an abscissa that must be a grid node.
    pub fn log_u_at(&self, x: f64) -> Result<f64> {
        let i = self
            .x_grid
            .iter()
            .position(|&g| (g - x).abs() < 1e-12)
            .ok_or_else(|| Error::domain(format!("x = {x} is not a node of this trajectory")))?;
        Ok(self.log_u[i])
    }
}

/// Node-by-node diagnostics of the defining relation.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremalReport {
    /// Empirical constant: max over nodes of `|u''| / phi(u')`.
    pub max_ratio: f64,
    /// Abscissa attaining `max_ratio`.
    pub max_ratio_at: f64,
    /// Minimum of `phi'(u)` over nodes; nonnegative iff the trajectory is
    /// convex (`u'' = phi'(u) u'` shares its sign).
    pub min_phi_slope: f64,
    pub convex: bool,
    /// Max over nodes of `| int dt/phi between u(0) and u(x) - |x| |`, the
    /// quadrature route to the same trajectory.
    pub max_identity_deviation: f64,
}

/// Checks each node against `u'' = phi'(u) u'` and the integral identity.
///
/// The curvature ratio `|u''| / phi(u')` reduces in log-domain to
/// `|phi'(u)| / eta(u')` with `phi'(u) = eta(u) + t eta'(t)|_{t=u}`, all
/// evaluated through log-argument forms.
pub fn verify_extremal(s: &ExtremalSolution) -> Result<ExtremalReport> {
    if s.x_grid.is_empty() {
        return Err(Error::domain("empty trajectory"));
    }
    let f = &s.drift;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut max_ratio_at = s.x_grid[0];
    let mut min_slope = f64::INFINITY;
    for (i, &w) in s.log_u.iter().enumerate() {
        let slope = f.eta_log(w) + f.deta_dlogt(w);
        let ratio = slope.abs() / f.eta_log(s.log_u_prime[i]);
        if ratio > max_ratio {
            max_ratio = ratio;
            max_ratio_at = s.x_grid[i];
        }
        min_slope = min_slope.min(slope);
    }

    let w0 = s.log_u_at(0.0)?;
    let mut max_dev = 0.0_f64;
    for (i, &x) in s.x_grid.iter().enumerate() {
        let w = s.log_u[i];
        let (lo, hi) = if w <= w0 { (w, w0) } else { (w0, w) };
        let integral = phi_integral_log(f, lo, hi)?;
        max_dev = max_dev.max((integral - x.abs()).abs());
    }

    Ok(ExtremalReport {
        max_ratio,
        max_ratio_at,
        min_phi_slope: min_slope,
        convex: min_slope >= -1e-12,
        max_identity_deviation: max_dev,
    })
}

/// Saturation check: `int_{u(-1)}^{u(1)} dt/phi(t)` on a full trajectory.
///
/// Packaged as a [`HarnackReport`] with `R = 1` holding the drift-only
/// integral; its `integral_value` equals 2 up to the integration error, while
/// `classical_ratio_log` grows without bound in the starting depth.
pub fn sharpness_report(s: &ExtremalSolution) -> Result<HarnackReport> {
    let ln_m = s.log_u_at(-1.0).map_err(|_| {
        Error::domain("trajectory does not reach x = -1; sharpness needs the full interval")
    })?;
    let ln_sup = s.log_u_at(1.0)?;
    Ok(HarnackReport {
        m_inf: ln_m,
        m_sup: ln_sup,
        radius: 1.0,
        integral_value: phi_integral_log(&s.drift, ln_m, ln_sup)?,
        classical_ratio_log: ln_sup - ln_m,
        log_domain: true,
    })
}

/// A point of the decreasing reference family `u(x) = exp(-e^{x+k})`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedFormPoint {
    pub log_u: f64,
    pub log_abs_u_prime: f64,
    /// `|u''| / phi(|u'|)` for the drift `phi(t) = (1 + |ln t|) t`.
    pub ratio: f64,
}

/// Evaluates the reference family at `(k, x)`, exactly.
///
/// `ln u = -e^{x+k}`, `ln |u'| = (x+k) - e^{x+k}`, and with `y = x + k` the
/// curvature ratio is `|e^y - 1| / (e^y - y + 1)`, which stays at most 2 for
/// every `k >= 1` and `|x| <= 2`.
pub fn closed_form_example(k: f64, x: f64) -> Result<ClosedFormPoint> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::domain(format!("depth k must be >= 1, got {k}")));
    }
    if !(x.abs() <= 2.0) {
        return Err(Error::domain(format!("x must lie in [-2, 2], got {x}")));
    }
    let y = x + k;
    let ey = y.exp();
    Ok(ClosedFormPoint {
        log_u: -ey,
        log_abs_u_prime: y - ey,
        ratio: (ey - 1.0).abs() / (ey - y + 1.0),
    })
}

/// `ln(u(-1) / u(1)) = e^{k+1} - e^{k-1}` for the reference family.
pub fn closed_form_classical_ratio_log(k: f64) -> f64 {
    (k + 1.0).exp() - (k - 1.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftFunction;
    use crate::grid::GridFunction;
    use crate::pucci::{residual_subsolution, residual_supersolution, EllipticityPair};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn homogeneous_trajectory_is_the_exponential() {
        let f = DriftFunction::homogeneous();
        let s = build_extremal(&f, 1.0, 401).unwrap();
        assert!(s.vanished_at.is_none());
        for (i, &x) in s.x_grid.iter().enumerate() {
            assert_abs_diff_eq!(s.log_u[i], x, epsilon = 1e-9);
            assert_abs_diff_eq!(s.log_u_prime[i], x, epsilon = 1e-9);
        }
        let report = verify_extremal(&s).unwrap();
        assert_relative_eq!(report.max_ratio, 1.0, epsilon = 1e-12);
        assert!(report.convex);
        assert!(report.max_identity_deviation < 1e-8);
    }

    // Below the unit crossing the log-linear trajectory has the closed form
    // ln u = 1 - (1 + ln k) e^{-x}; above it, ln u = e^{x - x*} - 1 with
    // x* = ln(1 + ln k).
    fn log_linear_exact(k: f64, x: f64) -> f64 {
        let x_star = (1.0 + k.ln()).ln();
        if x <= x_star {
            1.0 - (1.0 + k.ln()) * (-x).exp()
        } else {
            (x - x_star).exp() - 1.0
        }
    }

    #[test]
    fn log_linear_matches_closed_form_at_every_node() {
        let f = DriftFunction::log_linear(1.0).unwrap();
        for &k in &[2.0, std::f64::consts::E, 10.0] {
            let s = build_extremal(&f, k, 801).unwrap();
            assert_eq!(s.x_grid.len(), 801);
            for (i, &x) in s.x_grid.iter().enumerate() {
                assert_abs_diff_eq!(s.log_u[i], log_linear_exact(k, x), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn depth_e_value_at_minus_one() {
        let f = DriftFunction::log_linear(1.0).unwrap();
        let s = build_extremal(&f, std::f64::consts::E, 801).unwrap();
        let w = s.log_u_at(-1.0).unwrap();
        // 1 - 2e, since 1 + ln e = 2.
        assert_abs_diff_eq!(w, 1.0 - 2.0 * std::f64::consts::E, epsilon = 1e-8);
        assert_abs_diff_eq!(w, -4.43656365691809, epsilon = 1e-6);
    }

    #[test]
    fn unit_depth_log_linear_grows_on_the_upper_branch() {
        let f = DriftFunction::log_linear(1.0).unwrap();
        let s = build_extremal(&f, 1.0, 401).unwrap();
        // k = 1 starts exactly at the kink: ln u = e^x - 1 for x >= 0.
        for (i, &x) in s.x_grid.iter().enumerate() {
            if x >= 0.0 {
                assert_abs_diff_eq!(s.log_u[i], x.exp() - 1.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn sharpness_integral_is_two_for_all_depths() {
        let f = DriftFunction::log_linear(1.0).unwrap();
        let mut previous_classical = 0.0;
        for &k in &[1.0, 2.0, std::f64::consts::E, 10.0] {
            let s = build_extremal(&f, k, 801).unwrap();
            let report = sharpness_report(&s).unwrap();
            assert!(
                (report.integral_value - 2.0).abs() < 1e-6,
                "k = {k}: integral = {}",
                report.integral_value
            );
            assert!(report.log_domain);
            assert_eq!(report.radius, 1.0);
            assert!(report.classical_ratio_log > previous_classical);
            previous_classical = report.classical_ratio_log;
        }
    }

    #[test]
    fn homogeneous_sharpness_is_exactly_the_unit_interval_pair() {
        let f = DriftFunction::homogeneous();
        let s = build_extremal(&f, 1.0, 401).unwrap();
        let report = sharpness_report(&s).unwrap();
        // u = e^x: the integral of dt/t from e^{-1} to e is exactly 2.
        assert_abs_diff_eq!(report.integral_value, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.classical_ratio_log, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn verify_reports_uniform_curvature_constant_for_log_linear() {
        let f = DriftFunction::log_linear(1.0).unwrap();
        for k in 1..=10 {
            let s = build_extremal(&f, k as f64, 801).unwrap();
            let report = verify_extremal(&s).unwrap();
            // The ratio peaks just above the unit crossing, where
            // phi'(u) / eta(u') approaches (2 + w) / (1 + w + ln(1 + w)) -> 2.
            assert!(
                report.max_ratio > 1.9 && report.max_ratio <= 2.0 + 1e-9,
                "k = {k}: max ratio {}",
                report.max_ratio
            );
            assert!(report.convex, "k = {k}: min slope {}", report.min_phi_slope);
            assert!(
                report.max_identity_deviation < 1e-8,
                "k = {k}: identity deviation {}",
                report.max_identity_deviation
            );
        }
    }

    #[test]
    fn square_root_drift_vanishes_at_finite_x() {
        // u' = sqrt(u), u(0) = 1/4: u = (1/2 + x/2)^2 hits zero at x = -1.
        let f = DriftFunction::power(0.5).unwrap();
        let s = build_extremal(&f, 4.0, 801).unwrap();
        let vanish = s.vanished_at.expect("non-Osgood drift must vanish");
        assert_abs_diff_eq!(vanish, -1.0, epsilon = 1e-6);
        assert!(s.x_grid.first().copied().unwrap() >= vanish - 1e-12);
        let w = s.log_u_at(-0.5).unwrap();
        assert_abs_diff_eq!(w, 0.0625_f64.ln(), epsilon = 1e-6);
        // The surviving right part still satisfies the defining identity.
        let report = verify_extremal(&s).unwrap();
        assert!(report.max_identity_deviation < 1e-6);
    }

    #[test]
    fn superlinear_drift_blows_up_before_the_right_edge() {
        // u' = u^2, u(0) = 1: u = 1/(1 - x) in log form w = -ln(1 - x).
        let f = DriftFunction::power(2.0).unwrap();
        let err = build_extremal(&f, 1.0, 801).unwrap_err();
        match err {
            Error::OdeFailure { x, .. } => assert!((x - 1.0).abs() < 1e-6, "stopped at {x}"),
            other => panic!("expected a blow-up failure, got {other:?}"),
        }
    }

    #[test]
    fn closed_form_reference_points() {
        let p = closed_form_example(2.0, 0.0).unwrap();
        assert_relative_eq!(p.log_u, -(2.0_f64.exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(p.log_u, -7.38905609893065, epsilon = 1e-11);
        assert_eq!(p.ratio, 1.0);
        // The numerator |e^y - 1| vanishes exactly at y = x + k = 0.
        assert_eq!(closed_form_example(1.0, -1.0).unwrap().ratio, 0.0);
        assert_eq!(closed_form_example(2.0, -2.0).unwrap().ratio, 0.0);
        let q = closed_form_example(1.0, -2.0).unwrap();
        let e_inv = (-1.0_f64).exp();
        assert_relative_eq!(q.ratio, (1.0 - e_inv) / (e_inv + 2.0), epsilon = 1e-15);
    }

    #[test]
    fn closed_form_ratio_capped_by_two_on_dense_sweep() {
        let mut worst: f64 = 0.0;
        for ik in 0..100 {
            let k = 1.0 + 19.0 * ik as f64 / 99.0;
            for ix in 0..100 {
                let x = -2.0 + 4.0 * ix as f64 / 99.0;
                let p = closed_form_example(k, x).unwrap();
                assert!(p.ratio <= 2.0, "ratio {} at k={k}, x={x}", p.ratio);
                worst = worst.max(p.ratio);
            }
        }
        // The sweep should get close to the cap, not sit far below it.
        assert!(worst > 1.05, "worst ratio only {worst}");
    }

    #[test]
    fn closed_form_classical_ratio_matches_endpoint_logs() {
        for k in 1..=10 {
            let kf = k as f64;
            let at = |x: f64| closed_form_example(kf, x).unwrap().log_u;
            // The family is decreasing: m = u(1), M = u(-1).
            let direct = at(-1.0) - at(1.0);
            assert_relative_eq!(direct, closed_form_classical_ratio_log(kf), epsilon = 1e-12);
            let product_form = kf.exp() * (1.0_f64.exp() - (-1.0_f64).exp());
            assert_relative_eq!(
                closed_form_classical_ratio_log(kf),
                product_form,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn closed_form_family_passes_extremal_residual_checks() {
        // As solutions of the two-sided extremal equations with unit
        // ellipticity, the reference family needs the drift doubled:
        // |u''| <= 2 phi(|u'|) with phi(t) = (1 + |ln t|) t.
        let f = DriftFunction::log_linear(2.0).unwrap();
        let pair = EllipticityPair::unit();
        for &k in &[1.0, 10.0] {
            let grid = GridFunction::from_fn_1d(-2.0, 1e-2, 401, true, |x| {
                closed_form_example(k, x).unwrap().log_u
            })
            .unwrap();
            let sup = residual_supersolution(&grid, &f, &pair, 1.0).unwrap();
            assert!(sup.holds, "k = {k}: supersolution residual {}", sup.worst_violation);
            let sub = residual_subsolution(&grid, &f, &pair, 1.0).unwrap();
            assert!(sub.holds, "k = {k}: subsolution residual {}", sub.worst_violation);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = DriftFunction::homogeneous();
        assert!(build_extremal(&f, 0.5, 801).is_err());
        assert!(build_extremal(&f, 1.0, 800).is_err());
        assert!(build_extremal(&f, 1.0, 3).is_err());
        assert!(closed_form_example(0.0, 0.0).is_err());
        assert!(closed_form_example(1.0, 3.0).is_err());
        let s = build_extremal(&f, 1.0, 401).unwrap();
        assert!(s.log_u_at(0.123).is_err());
    }
}
