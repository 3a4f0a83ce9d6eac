//! Bracketed root finding by bisection.
//!
//! Bisection is deliberate: every predicate this crate inverts is monotone
//! (feasibility radii, flux constants, explicit Harnack constants), and
//! bisection gives an interval certificate instead of a point estimate.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct BisectOptions {
    /// Stop when the bracket width is below `rel_width * |midpoint|`.
    pub rel_width: f64,
    /// Absolute width floor, for roots near zero.
    pub abs_width: f64,
    pub max_iter: u32,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions {
            rel_width: 1e-12,
            abs_width: 1e-300,
            max_iter: 200,
        }
    }
}

/// Root of `f` on `[lo, hi]`, which must bracket a sign change
/// (`f(lo)` and `f(hi)` of opposite sign; zero endpoints are returned
/// immediately). Returns the bracket midpoint after refinement.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, opts: &BisectOptions) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::RootFinding(format!("bad bracket [{lo}, {hi}]")));
    }
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !flo.is_finite() || !fhi.is_finite() || flo.signum() == fhi.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{lo}, {hi}]: f = {flo:e}, {fhi:e}"
        )));
    }
    let (mut lo, mut hi, mut flo) = (lo, hi, flo);
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= opts.rel_width * mid.abs() + opts.abs_width {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if !fmid.is_finite() {
            return Err(Error::RootFinding(format!("f non-finite at {mid}")));
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expands `hi` geometrically (factor 2) until `f` changes sign relative to
/// `f(lo)`, then refines. `f` must be monotone for the expansion to make
/// sense; `hi_cap` bounds the search.
pub fn bisect_with_expansion<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi0: f64,
    hi_cap: f64,
    opts: &BisectOptions,
) -> Result<f64> {
    let flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut hi = hi0;
    while hi <= hi_cap {
        let fhi = f(hi);
        if fhi == 0.0 {
            return Ok(hi);
        }
        if fhi.is_finite() && fhi.signum() != flo.signum() {
            return bisect(f, lo, hi, opts);
        }
        hi *= 2.0;
    }
    Err(Error::RootFinding(format!(
        "no sign change up to cap {hi_cap:e}"
    )))
}
