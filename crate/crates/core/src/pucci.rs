//! Pucci extremal operators and discrete PDE residuals.
//!
//! Conventions follow the elliptic (minus-Laplacian-like) normalization:
//! for a symmetric matrix with eigenvalues `e_i`,
//!
//! ```text
//! pucci_plus  = -lambda * sum(e_i >= 0) - Lambda * sum(e_i < 0)
//! pucci_minus = -Lambda * sum(e_i >= 0) - lambda * sum(e_i < 0)
//! ```
//!
//! so `pucci_minus <= pucci_plus`, both collapse to `-lambda * trace` when
//! `lambda = Lambda`, and `pucci_minus(X) = -pucci_plus(-X)`.
//!
//! A grid function `u` is checked as a supersolution through
//! `pucci_plus(D^2 u) + R phi(|Du|) >= -tol` at interior nodes, and as a
//! subsolution through `pucci_minus(D^2 u) - R phi(|Du|) <= tol`, with
//! derivatives from central differences. For a log-domain grid
//! (`w = ln u`), both operators being positively 1-homogeneous lets the
//! residual be normalized by `u`:
//!
//! ```text
//! D^2 u / u = D^2 w + Dw (x) Dw,      phi(|Du|)/u = eta(u |Dw|) |Dw|,
//! ```
//!
//! which keeps every intermediate O(1) even when `u = exp(-exp(k))`.
//! The per-node tolerance is the central-difference truncation scale
//! `10 h^2 max(s3, 1)` with `s3` the local third-difference magnitude,
//! inflated by `1 + 2|Dw|` in the log domain where first-difference errors
//! enter quadratically.

use crate::drift::DriftFunction;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use serde::{Deserialize, Serialize};

/// Ellipticity constants `0 < lambda_min <= lambda_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticityPair {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl EllipticityPair {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_max >= lambda_min) || !lambda_max.is_finite() {
            return Err(Error::domain(format!(
                "ellipticity pair needs 0 < lambda_min <= lambda_max, got ({lambda_min}, {lambda_max})"
            )));
        }
        Ok(EllipticityPair { lambda_min, lambda_max })
    }

    pub fn unit() -> Self {
        EllipticityPair { lambda_min: 1.0, lambda_max: 1.0 }
    }
}

/// Symmetric 1x1 or 2x2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SymMatrix {
    One(f64),
    Two { xx: f64, xy: f64, yy: f64 },
}

impl SymMatrix {
    /// Validates symmetry of a full 2x2 row layout.
    pub fn from_rows(rows: [[f64; 2]; 2]) -> Result<Self> {
        let skew = (rows[0][1] - rows[1][0]).abs();
        let scale = rows[0][1].abs().max(rows[1][0].abs()).max(1.0);
        if skew > 1e-12 * scale {
            return Err(Error::domain(format!(
                "matrix is not symmetric: off-diagonal entries {} vs {}",
                rows[0][1], rows[1][0]
            )));
        }
        Ok(SymMatrix::Two { xx: rows[0][0], xy: 0.5 * (rows[0][1] + rows[1][0]), yy: rows[1][1] })
    }

    /// Eigenvalues in closed form.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match *self {
            SymMatrix::One(a) => vec![a],
            SymMatrix::Two { xx, xy, yy } => {
                let mean = 0.5 * (xx + yy);
                let disc = (0.25 * (xx - yy) * (xx - yy) + xy * xy).sqrt();
                vec![mean - disc, mean + disc]
            }
        }
    }
}

/// `pucci_plus` from a known eigenvalue list (any dimension).
pub fn pucci_plus_from_eigenvalues(eigs: &[f64], e: &EllipticityPair) -> f64 {
    eigs.iter()
        .map(|&ev| if ev >= 0.0 { -e.lambda_min * ev } else { -e.lambda_max * ev })
        .sum()
}

/// `pucci_minus` from a known eigenvalue list (any dimension).
pub fn pucci_minus_from_eigenvalues(eigs: &[f64], e: &EllipticityPair) -> f64 {
    eigs.iter()
        .map(|&ev| if ev >= 0.0 { -e.lambda_max * ev } else { -e.lambda_min * ev })
        .sum()
}

pub fn pucci_plus(x: &SymMatrix, e: &EllipticityPair) -> f64 {
    pucci_plus_from_eigenvalues(&x.eigenvalues(), e)
}

pub fn pucci_minus(x: &SymMatrix, e: &EllipticityPair) -> f64 {
    pucci_minus_from_eigenvalues(&x.eigenvalues(), e)
}

/// Which one-sided inequality a residual grid was checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualSide {
    /// `pucci_plus(D^2 u) + R phi(|Du|) >= -tol`.
    Supersolution,
    /// `pucci_minus(D^2 u) - R phi(|Du|) <= tol`.
    Subsolution,
}

/// Residuals at the interior nodes, the per-node tolerances, and the
/// worst signed violation (`<= 0` exactly when the verdict holds).
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub side: ResidualSide,
    pub residuals: GridFunction,
    pub tolerance: GridFunction,
    pub holds: bool,
    pub worst_violation: f64,
    /// Index of the worst node in the original grid.
    pub worst_at: [usize; 2],
}

fn residual_grid(
    u: &GridFunction,
    f: &DriftFunction,
    e: &EllipticityPair,
    radius_factor: f64,
    side: ResidualSide,
) -> Result<ResidualReport> {
    if !(radius_factor > 0.0) || !radius_factor.is_finite() {
        return Err(Error::domain(format!(
            "radius factor must be positive, got {radius_factor}"
        )));
    }
    let [nx, ny] = u.shape();
    if nx < 3 || (u.dim() == 2 && ny < 3) {
        return Err(Error::domain("residual check needs at least 3 nodes per axis"));
    }
    let two_d = u.dim() == 2;
    let (jlo, jhi) = if two_d { (1, ny - 1) } else { (0, 1) };
    let h = u.h();
    let mut residuals = Vec::with_capacity((nx - 2) * (jhi - jlo));
    let mut tols = Vec::with_capacity(residuals.capacity());
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = [1usize, jlo];

    for i in 1..nx - 1 {
        for j in jlo..jhi {
            let (hess, grad_mag) = if two_d {
                let (gx, gy) = (u.dx(i, j), u.dy(i, j));
                let (mut xx, mut yy, mut xy) = (u.dxx(i, j), u.dyy(i, j), u.dxy(i, j));
                if u.log_domain() {
                    xx += gx * gx;
                    yy += gy * gy;
                    xy += gx * gy;
                }
                (SymMatrix::Two { xx, xy, yy }, gx.hypot(gy))
            } else {
                let g = u.dx(i, j);
                let mut xx = u.dxx(i, j);
                if u.log_domain() {
                    xx += g * g;
                }
                (SymMatrix::One(xx), g.abs())
            };

            // Drift term R phi(|Du|), normalized by u in the log domain.
            let drift_term = if u.log_domain() {
                if grad_mag == 0.0 {
                    0.0
                } else {
                    radius_factor * f.eta_log(u.get(i, j) + grad_mag.ln()) * grad_mag
                }
            } else {
                radius_factor * f.phi_or_zero(grad_mag)?
            };

            let residual = match side {
                ResidualSide::Supersolution => pucci_plus(&hess, e) + drift_term,
                ResidualSide::Subsolution => pucci_minus(&hess, e) - drift_term,
            };

            let mut s3 = u.third_scale_x(i, j).max(1.0);
            if two_d {
                s3 = s3.max(u.third_scale_y(i, j));
            }
            let mut tol = 10.0 * h * h * s3;
            if u.log_domain() {
                tol *= 1.0 + 2.0 * grad_mag;
            }

            let violation = match side {
                ResidualSide::Supersolution => -residual - tol,
                ResidualSide::Subsolution => residual - tol,
            };
            if violation > worst {
                worst = violation;
                worst_at = [i, j];
            }
            residuals.push(residual);
            tols.push(tol);
        }
    }

    let origin = u.origin();
    let (res_g, tol_g) = if two_d {
        let o = [origin[0] + h, origin[1] + h];
        let shape = [nx - 2, ny - 2];
        (
            GridFunction::new_2d(o, h, shape, residuals, false)?,
            GridFunction::new_2d(o, h, shape, tols, false)?,
        )
    } else {
        (
            GridFunction::new_1d(origin[0] + h, h, residuals, false)?,
            GridFunction::new_1d(origin[0] + h, h, tols, false)?,
        )
    };
    Ok(ResidualReport {
        side,
        residuals: res_g,
        tolerance: tol_g,
        holds: worst <= 0.0,
        worst_violation: worst,
        worst_at,
    })
}

/// Checks `pucci_plus(D^2 u) + R phi(|Du|) >= -tol` at every interior node.
pub fn residual_supersolution(
    u: &GridFunction,
    f: &DriftFunction,
    e: &EllipticityPair,
    radius_factor: f64,
) -> Result<ResidualReport> {
    residual_grid(u, f, e, radius_factor, ResidualSide::Supersolution)
}

/// Checks `pucci_minus(D^2 u) - R phi(|Du|) <= tol` at every interior node.
pub fn residual_subsolution(
    u: &GridFunction,
    f: &DriftFunction,
    e: &EllipticityPair,
    radius_factor: f64,
) -> Result<ResidualReport> {
    residual_grid(u, f, e, radius_factor, ResidualSide::Subsolution)
}

/// Rescaling data for the blow-up step `u~(x) = u(rx)/A`.
#[derive(Clone, Copy, Debug)]
pub struct AdmissibilityParams<'a> {
    pub drift: &'a DriftFunction,
    pub radius_factor: f64,
    /// The universal comparison constant in the admissibility bound.
    pub l2: f64,
}

#[derive(Clone, Debug)]
pub struct RescaleReport {
    pub rescaled: GridFunction,
    /// `(1/L2) A/(R phi(A) + A)`, when admissibility data was supplied.
    pub threshold: Option<f64>,
    /// Whether `r <= threshold`.
    pub admissible: Option<bool>,
}

/// Largest scale `r` for which `u(rx)/A` stays a supersolution at unit
/// radius factor: `(1/L2) * A / (R phi(A) + A) = 1/(L2 (R eta(A) + 1))`.
pub fn rescale_admissible_threshold(
    f: &DriftFunction,
    a: f64,
    radius_factor: f64,
    l2: f64,
) -> Result<f64> {
    if !(a > 0.0) || !(l2 > 0.0) || !(radius_factor > 0.0) {
        return Err(Error::domain("rescale threshold needs positive A, R, L2"));
    }
    Ok(1.0 / (l2 * (radius_factor * f.eta(a)? + 1.0)))
}

/// Resamples `u~(x) = u(rx)/A` onto the given target grid by linear
/// interpolation (geometric interpolation for log-domain grids, where the
/// division becomes `ln u - ln A`). Errors when `r * target` leaves `u`'s
/// domain.
pub fn rescale(
    u: &GridFunction,
    a: f64,
    r: f64,
    target_origin: [f64; 2],
    target_h: f64,
    target_shape: [usize; 2],
    params: Option<&AdmissibilityParams>,
) -> Result<RescaleReport> {
    if !(a > 0.0) || !a.is_finite() || !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("rescale needs positive finite A and r, got ({a}, {r})")));
    }
    let ln_a = a.ln();
    let sample = |x: f64, y: f64| -> Result<f64> {
        if u.dim() == 1 {
            let v = u.interpolate_1d(r * x)?;
            Ok(if u.log_domain() { v - ln_a } else { v / a })
        } else {
            let v = u.interpolate_2d(r * x, r * y)?;
            Ok(if u.log_domain() { v - ln_a } else { v / a })
        }
    };
    let mut values = Vec::with_capacity(target_shape[0] * target_shape[1]);
    for i in 0..target_shape[0] {
        for j in 0..target_shape[1] {
            values.push(sample(
                target_origin[0] + i as f64 * target_h,
                target_origin[1] + j as f64 * target_h,
            )?);
        }
    }
    let rescaled = if u.dim() == 1 {
        if target_shape[1] != 1 {
            return Err(Error::domain("1D rescale target must have ny = 1"));
        }
        GridFunction::new_1d(target_origin[0], target_h, values, u.log_domain())?
    } else {
        GridFunction::new_2d(target_origin, target_h, target_shape, values, u.log_domain())?
    };
    let (threshold, admissible) = match params {
        Some(p) => {
            let thr = rescale_admissible_threshold(p.drift, a, p.radius_factor, p.l2)?;
            (Some(thr), Some(r <= thr))
        }
        None => (None, None),
    };
    Ok(RescaleReport { rescaled, threshold, admissible })
}
