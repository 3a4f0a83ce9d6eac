//! Radial barrier construction on an annulus.
//!
//! The barrier is the radial profile `B(x) = m1 - m2 |x|^{-alpha}` on the
//! annulus `r0/2 <= |x| <= 2 r0`, normalized so that `B = 0` on the outer
//! sphere and `B = -2` on the middle sphere `|x| = r0`. For a strong enough
//! exponent `alpha` the profile is a supersolution of the gradient-dependent
//! extremal inequality `pucci_minus(D^2 B) >= phi(|DB|)` on the whole
//! annulus, which is what [`verify_barrier`] checks node by node.
//!
//! [`find_r0`] searches for the largest admissible annulus scale by testing a
//! closed-form sufficient condition that compares the worst (outermost) value
//! of the Pucci term against the worst (innermost) value of the drift term.

use serde::{Deserialize, Serialize};

use crate::drift::DriftFunction;
use crate::error::{Error, Result};
use crate::pucci::{pucci_minus_from_eigenvalues, EllipticityPair, SymMatrix};
use crate::roots::{bisect, BisectOptions};

/// Smallest annulus scale considered before declaring the search infeasible.
pub const R0_FLOOR: f64 = 1e-12;

/// Barrier exponent: `max(2 (n-1) lambda_max / lambda_min, 1)`.
///
/// This choice makes the radial Hessian eigenvalue structure favorable for
/// `pucci_minus`: the single negative (radial) eigenvalue outweighs the
/// `n - 1` positive (tangential) ones with a factor-two margin.
pub fn barrier_alpha(n: usize, e: &EllipticityPair) -> f64 {
    let raw = 2.0 * (n as f64 - 1.0) * e.lambda_max / e.lambda_min;
    raw.max(1.0)
}

/// Radial barrier profile `B(x) = m1 - m2 |x|^{-alpha}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub alpha: f64,
    pub r0: f64,
    pub m1: f64,
    pub m2: f64,
    pub n: usize,
    pub ellipticity: EllipticityPair,
}

impl BarrierSpec {
    /// Builds the normalized barrier for a given annulus scale.
    ///
    /// `m2 = 2 r0^alpha / (1 - 2^{-alpha})` and `m1 = m2 (2 r0)^{-alpha}`,
    /// which pins `B(2 r0) = 0` and `B(r0) = -2`.
    pub fn for_radius(n: usize, e: &EllipticityPair, r0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::domain("annulus scale r0 must be positive and finite"));
        }
        let alpha = barrier_alpha(n, e);
        let m2 = 2.0 * r0.powf(alpha) / (1.0 - 2.0_f64.powf(-alpha));
        let m1 = m2 * (2.0 * r0).powf(-alpha);
        Ok(BarrierSpec { alpha, r0, m1, m2, n, ellipticity: *e })
    }

    /// Barrier value at radius `rho`.
    pub fn value(&self, rho: f64) -> f64 {
        self.m1 - self.m2 * rho.powf(-self.alpha)
    }

    /// `|DB|` at radius `rho`: `alpha m2 rho^{-alpha-1}`.
    pub fn gradient_magnitude(&self, rho: f64) -> f64 {
        self.alpha * self.m2 * rho.powf(-self.alpha - 1.0)
    }

    /// Hessian eigenvalues at radius `rho` as `(tangential, radial)`.
    ///
    /// The tangential eigenvalue `alpha m2 rho^{-alpha-2}` has multiplicity
    /// `n - 1`; the radial one is `-alpha (alpha+1) m2 rho^{-alpha-2}`.
    pub fn hessian_eigenvalues(&self, rho: f64) -> (f64, f64) {
        let scale = self.alpha * self.m2 * rho.powf(-self.alpha - 2.0);
        (scale, -(self.alpha + 1.0) * scale)
    }

    /// Full Hessian at a planar point, for the two-dimensional profile.
    ///
    /// `D^2 B = alpha m2 rho^{-alpha-2} (I - (alpha+2) xhat (x)hat)`.
    pub fn hessian_2d(&self, x: f64, y: f64) -> Result<SymMatrix> {
        if self.n != 2 {
            return Err(Error::domain("planar Hessian requires n = 2"));
        }
        let rho2 = x * x + y * y;
        if !(rho2 > 0.0) {
            return Err(Error::domain("Hessian is singular at the origin"));
        }
        let rho = rho2.sqrt();
        let scale = self.alpha * self.m2 * rho.powf(-self.alpha - 2.0);
        let proj = self.alpha + 2.0;
        let (cx, cy) = (x / rho, y / rho);
        Ok(SymMatrix::Two {
            xx: scale * (1.0 - proj * cx * cx),
            xy: scale * (-proj * cx * cy),
            yy: scale * (1.0 - proj * cy * cy),
        })
    }

    /// `pucci_minus(D^2 B)` at radius `rho`, from the closed eigenvalues.
    pub fn pucci_minus_at(&self, rho: f64) -> f64 {
        let (tangential, radial) = self.hessian_eigenvalues(rho);
        let mut eigs = vec![tangential; self.n - 1];
        eigs.push(radial);
        pucci_minus_from_eigenvalues(&eigs, &self.ellipticity)
    }
}

/// Margin of the sufficient condition at annulus scale `r`.
///
/// The condition compares the infimum of the Pucci term over the annulus,
/// `n alpha lambda_min / (2 (2^alpha - 1)) * r^{-2}`, against an upper bound
/// for the drift term, `phi(2^{alpha+3} alpha / r)`. Nonnegative margin
/// means the scale is admissible.
pub fn feasibility_margin(f: &DriftFunction, n: usize, e: &EllipticityPair, r: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("annulus scale must be positive and finite"));
    }
    let alpha = barrier_alpha(n, e);
    let lhs = n as f64 * alpha * e.lambda_min / (2.0 * (2.0_f64.powf(alpha) - 1.0)) / (r * r);
    let rhs = f.phi(2.0_f64.powf(alpha + 3.0) * alpha / r)?;
    Ok(lhs - rhs)
}

/// Largest annulus scale `r0 <= 1` passing the sufficient condition.
///
/// Scales below the found one remain admissible; the search bisects the unique
/// sign change down to relative width `1e-6` and returns the feasible end of
/// the final bracket. Fails with [`Error::Infeasible`] when no scale at or
/// above [`R0_FLOOR`] passes.
pub fn find_r0(f: &DriftFunction, n: usize, e: &EllipticityPair) -> Result<BarrierSpec> {
    let margin = |r: f64| feasibility_margin(f, n, e, r);
    if margin(1.0)? >= 0.0 {
        return BarrierSpec::for_radius(n, e, 1.0);
    }
    // Walk down geometrically until the condition flips to feasible.
    let mut lo = 1.0;
    loop {
        lo /= 4.0;
        if lo < R0_FLOOR {
            return Err(Error::Infeasible(format!(
                "no admissible annulus scale of at least {R0_FLOOR:e}"
            )));
        }
        if margin(lo)? >= 0.0 {
            break;
        }
    }
    let opts = BisectOptions { rel_width: 1e-6, ..BisectOptions::default() };
    let root = bisect(|r| margin(r).unwrap_or(f64::NEG_INFINITY), lo, 4.0 * lo, &opts)?;
    // The bisection localizes the flip point; step back to the last scale
    // with a verified nonnegative margin.
    let mut r0 = root;
    while margin(r0)? < 0.0 {
        r0 *= 1.0 - 1e-9;
    }
    BarrierSpec::for_radius(n, e, r0)
}

/// Outcome of the node-by-node annulus verification.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    /// True when both the pointwise and the uniform inequality hold.
    pub passes: bool,
    /// Minimum of `pucci_minus(D^2 B) - phi(|DB|)` over the grid.
    pub min_residual: f64,
    /// Minimum of the Pucci term over the grid.
    pub min_pucci_minus: f64,
    /// Maximum of the drift term `phi(|DB|)` over the grid.
    pub max_phi_of_gradient: f64,
    /// `min_pucci_minus - max_phi_of_gradient`; the uniform inequality
    /// compares worst cases attained at opposite ends of the annulus.
    pub uniform_margin: f64,
    /// Radius of the node where the drift term peaks (the matching sphere
    /// end of the annulus).
    pub worst_node_radius: f64,
    /// Barrier value on the outer sphere `|x| = 2 r0` (zero by construction).
    pub value_outer: f64,
    /// Barrier value on the middle sphere `|x| = r0` (minus two by design).
    pub value_middle: f64,
    /// `max |B|` over the annulus.
    pub sup_abs_value: f64,
    /// `1 / min |DB|` over the annulus.
    pub inv_min_gradient: f64,
    /// Bound constant: the larger of `sup_abs_value` and `inv_min_gradient`.
    pub bound_constant: f64,
    /// Drift-term size `phi(|DB|)` on the matching sphere `|x| = r0/2`; a
    /// smooth extension across the inner ball must absorb this order.
    pub extension_scale: f64,
}

/// Checks `pucci_minus(D^2 B) >= phi(|DB|)` on the annulus `[r0/2, 2 r0]`.
///
/// Uses `radial_nodes` radii; in two dimensions each radius is additionally
/// swept over `2 * radial_nodes` angles through the planar Hessian assembly,
/// guarding the eigenvalue shortcut against assembly errors. Two criteria
/// must hold: every node's residual stays above `-1e-12`, and the grid
/// minimum of the Pucci term dominates the grid maximum of the drift term.
pub fn verify_barrier(
    spec: &BarrierSpec,
    f: &DriftFunction,
    radial_nodes: usize,
) -> Result<BarrierReport> {
    if radial_nodes < 2 {
        return Err(Error::domain("need at least 2 radial nodes"));
    }
    let inner = 0.5 * spec.r0;
    let outer = 2.0 * spec.r0;
    let mut min_residual = f64::INFINITY;
    let mut min_pucci = f64::INFINITY;
    let mut max_phi = f64::NEG_INFINITY;
    let mut min_grad = f64::INFINITY;
    let mut sup_abs = 0.0_f64;
    let mut worst_radius = inner;

    let angular_nodes = 2 * radial_nodes;
    for i in 0..radial_nodes {
        let t = i as f64 / (radial_nodes - 1) as f64;
        let rho = inner + t * (outer - inner);
        let grad = spec.gradient_magnitude(rho);
        let phi_term = f.phi(grad)?;
        let pucci = spec.pucci_minus_at(rho);
        if spec.n == 2 {
            // The planar assembly must reproduce the eigenvalue shortcut at
            // every angle; any drift beyond rounding is an assembly bug.
            for j in 0..angular_nodes {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / angular_nodes as f64;
                let h = spec.hessian_2d(rho * theta.cos(), rho * theta.sin())?;
                let swept = crate::pucci::pucci_minus(&h, &spec.ellipticity);
                let scale = pucci.abs().max(1.0);
                if (swept - pucci).abs() > 1e-9 * scale {
                    return Err(Error::domain(format!(
                        "planar Hessian disagrees with radial eigenvalues at rho={rho}, theta={theta}"
                    )));
                }
            }
        }
        let residual = pucci - phi_term;
        if residual < min_residual {
            min_residual = residual;
        }
        if pucci < min_pucci {
            min_pucci = pucci;
        }
        if phi_term > max_phi {
            max_phi = phi_term;
            worst_radius = rho;
        }
        if grad < min_grad {
            min_grad = grad;
        }
        sup_abs = sup_abs.max(spec.value(rho).abs());
    }

    let uniform_margin = min_pucci - max_phi;
    let passes = min_residual >= -1e-12 && uniform_margin >= 0.0;
    let inv_min_gradient = 1.0 / min_grad;
    Ok(BarrierReport {
        passes,
        min_residual,
        min_pucci_minus: min_pucci,
        max_phi_of_gradient: max_phi,
        uniform_margin,
        worst_node_radius: worst_radius,
        value_outer: spec.value(outer),
        value_middle: spec.value(spec.r0),
        sup_abs_value: sup_abs,
        inv_min_gradient,
        bound_constant: sup_abs.max(inv_min_gradient),
        extension_scale: f.phi(spec.gradient_magnitude(inner))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftFunction;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn unit_pair() -> EllipticityPair {
        EllipticityPair::unit()
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(barrier_alpha(2, &unit_pair()), 2.0);
        assert_eq!(barrier_alpha(1, &unit_pair()), 1.0);
        assert_eq!(barrier_alpha(1, &EllipticityPair::new(0.3, 7.0).unwrap()), 1.0);
        assert_eq!(barrier_alpha(3, &EllipticityPair::new(1.0, 2.0).unwrap()), 8.0);
    }

    #[test]
    fn spec_normalization_pins_boundary_values() {
        let spec = BarrierSpec::for_radius(2, &unit_pair(), 0.37).unwrap();
        assert_eq!(spec.value(2.0 * spec.r0), 0.0);
        assert_abs_diff_eq!(spec.value(spec.r0), -2.0, epsilon = 1e-12);
        // m1 and m2 satisfy the two defining constraints.
        assert_relative_eq!(
            spec.m2,
            2.0 * spec.r0.powf(spec.alpha) / (1.0 - 2.0_f64.powf(-spec.alpha)),
            epsilon = 1e-15
        );
        assert_relative_eq!(spec.m1, spec.m2 * (2.0 * spec.r0).powf(-spec.alpha), epsilon = 1e-15);
    }

    #[test]
    fn hessian_eigenvalues_match_numeric_eigendecomposition() {
        let spec = BarrierSpec::for_radius(2, &unit_pair(), 0.25).unwrap();
        let rho = 0.31;
        let (tangential, radial) = spec.hessian_eigenvalues(rho);
        for &theta in &[0.0, 0.4, 1.1, 2.0, 3.9, 5.5] {
            let h = spec.hessian_2d(rho * f64::cos(theta), rho * f64::sin(theta)).unwrap();
            let eigs = h.eigenvalues();
            let scale = tangential.abs().max(radial.abs());
            assert_abs_diff_eq!(eigs[0], radial, epsilon = 1e-12 * scale);
            assert_abs_diff_eq!(eigs[1], tangential, epsilon = 1e-12 * scale);
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let spec = BarrierSpec::for_radius(2, &unit_pair(), 0.25).unwrap();
        let value = |x: f64, y: f64| spec.m1 - spec.m2 * (x * x + y * y).powf(-0.5 * spec.alpha);
        let (x0, y0) = (0.2, 0.23);
        let h = 1e-5;
        let fd_xx = (value(x0 + h, y0) - 2.0 * value(x0, y0) + value(x0 - h, y0)) / (h * h);
        let fd_yy = (value(x0, y0 + h) - 2.0 * value(x0, y0) + value(x0, y0 - h)) / (h * h);
        let fd_xy = (value(x0 + h, y0 + h) - value(x0 + h, y0 - h) - value(x0 - h, y0 + h)
            + value(x0 - h, y0 - h))
            / (4.0 * h * h);
        match spec.hessian_2d(x0, y0).unwrap() {
            SymMatrix::Two { xx, xy, yy } => {
                assert_relative_eq!(xx, fd_xx, epsilon = 1e-5);
                assert_relative_eq!(xy, fd_xy, epsilon = 1e-5);
                assert_relative_eq!(yy, fd_yy, epsilon = 1e-5);
            }
            SymMatrix::One(_) => panic!("expected a planar Hessian"),
        }
    }

    #[test]
    fn homogeneous_scale_is_one_over_ninety_six() {
        let f = DriftFunction::homogeneous();
        let spec = find_r0(&f, 2, &unit_pair()).unwrap();
        assert_relative_eq!(spec.r0, 1.0 / 96.0, epsilon = 1e-6);
        assert!(feasibility_margin(&f, 2, &unit_pair(), spec.r0).unwrap() >= 0.0);
    }

    #[test]
    fn log_linear_scale_lands_in_expected_window() {
        let f = DriftFunction::log_linear(1.0).unwrap();
        let spec = find_r0(&f, 2, &unit_pair()).unwrap();
        assert!(spec.r0 > 8e-4 && spec.r0 < 9e-4, "r0 = {}", spec.r0);
    }

    #[test]
    fn quadratic_growth_is_infeasible() {
        let f = DriftFunction::power(2.0).unwrap();
        let err = find_r0(&f, 2, &unit_pair()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn margin_is_monotone_below_the_found_scale() {
        let pair = unit_pair();
        for f in [DriftFunction::homogeneous(), DriftFunction::log_linear(1.0).unwrap()] {
            let spec = find_r0(&f, 2, &pair).unwrap();
            let mut r = spec.r0;
            while r > 1e-9 {
                assert!(
                    feasibility_margin(&f, 2, &pair, r).unwrap() >= 0.0,
                    "margin flipped at r = {r}"
                );
                r /= 3.0;
            }
        }
    }

    #[test]
    fn verified_homogeneous_barrier_passes() {
        let f = DriftFunction::homogeneous();
        let spec = find_r0(&f, 2, &unit_pair()).unwrap();
        let report = verify_barrier(&spec, &f, 64).unwrap();
        assert!(report.passes);
        assert!(report.min_residual >= -1e-12);
        assert!(report.uniform_margin >= 0.0);
        assert_eq!(report.value_outer, 0.0);
        assert_abs_diff_eq!(report.value_middle, -2.0, epsilon = 1e-12);
        // At alpha = 2 the annulus sup of |B| is scale-free: 2 (2^a - 2^-a) / (1 - 2^-a).
        assert_relative_eq!(report.sup_abs_value, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn doubling_the_scale_breaks_the_uniform_comparison() {
        let f = DriftFunction::homogeneous();
        let found = find_r0(&f, 2, &unit_pair()).unwrap();
        assert!(2.0 / 96.0 > found.r0);
        let doubled = BarrierSpec::for_radius(2, &unit_pair(), 1.0 / 48.0).unwrap();
        let report = verify_barrier(&doubled, &f, 64).unwrap();
        assert!(!report.passes);
        // At r0 = 1/48 the Pucci floor is 1536 while the drift peak is 2048,
        // attained on the matching sphere rho = r0/2.
        assert_relative_eq!(report.min_pucci_minus, 1536.0, epsilon = 1e-9);
        assert_relative_eq!(report.max_phi_of_gradient, 2048.0, epsilon = 1e-9);
        assert!(report.uniform_margin < 0.0);
        assert_relative_eq!(report.worst_node_radius, 0.5 * doubled.r0, epsilon = 1e-12);
        // The pointwise inequality still holds; only the uniform one fails.
        assert!(report.min_residual >= 0.0);
    }

    #[test]
    fn log_linear_barrier_passes_verification() {
        let f = DriftFunction::log_linear(1.0).unwrap();
        let spec = find_r0(&f, 2, &unit_pair()).unwrap();
        let report = verify_barrier(&spec, &f, 64).unwrap();
        assert!(report.passes, "uniform margin {}", report.uniform_margin);
        assert!(report.extension_scale > 0.0);
        assert!(report.bound_constant >= report.sup_abs_value);
        assert!(report.bound_constant >= report.inv_min_gradient);
    }

    #[test]
    fn three_dimensional_barrier_verifies_without_planar_sweep() {
        let pair = EllipticityPair::new(1.0, 2.0).unwrap();
        let f = DriftFunction::homogeneous();
        let spec = find_r0(&f, 3, &pair).unwrap();
        assert_eq!(spec.alpha, 8.0);
        let report = verify_barrier(&spec, &f, 64).unwrap();
        assert!(report.passes);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let f = DriftFunction::homogeneous();
        assert!(BarrierSpec::for_radius(0, &unit_pair(), 0.5).is_err());
        assert!(BarrierSpec::for_radius(2, &unit_pair(), 0.0).is_err());
        assert!(feasibility_margin(&f, 2, &unit_pair(), -1.0).is_err());
        let spec = BarrierSpec::for_radius(2, &unit_pair(), 0.5).unwrap();
        assert!(verify_barrier(&spec, &f, 1).is_err());
        assert!(spec.hessian_2d(0.0, 0.0).is_err());
    }
}
