//! Adaptive Dormand-Prince 5(4) integration for scalar first-order ODEs.
//!
//! Used for the log-domain extremal equation `d(ln u)/dx = eta(exp(ln u))`,
//! whose right-hand side is continuous but has a kink where `ln u` crosses
//! zero; the embedded error estimate shrinks steps through the kink, and the
//! integral-identity checks in `extremal1d` validate the resulting accuracy.
//!
//! Drifts violating the Osgood condition drive `ln u` to `-inf` at a finite
//! abscissa. The stepper supports a state floor so callers can detect that
//! collapse instead of grinding the step size to zero against it.

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    /// Relative local tolerance per step.
    pub rtol: f64,
    /// Absolute local tolerance per step.
    pub atol: f64,
    /// Stop (with `StopReason::FloorHit`) once the state drops below this.
    pub floor: Option<f64>,
    /// Abort when |h| shrinks below this fraction of the span.
    pub min_step_rel: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            floor: None,
            min_step_rel: 1e-14,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Reached the requested endpoint.
    Reached,
    /// State fell below `opts.floor`.
    FloorHit,
    /// Step size underflowed (stiff blow-up short of the endpoint).
    StepUnderflow,
    /// Right-hand side returned a non-finite value.
    NonFinite,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOutcome {
    pub x: f64,
    pub w: f64,
    pub reason: StopReason,
}

// Dormand-Prince tableau, exact rationals.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `w' = f(x, w)` from `(x0, w0)` to `x1` (either direction).
/// Always returns the furthest state reached together with why it stopped.
pub fn integrate<F: Fn(f64, f64) -> f64>(
    f: F,
    x0: f64,
    w0: f64,
    x1: f64,
    opts: &OdeOptions,
) -> OdeOutcome {
    let span = x1 - x0;
    if span == 0.0 {
        return OdeOutcome {
            x: x0,
            w: w0,
            reason: StopReason::Reached,
        };
    }
    let dir = span.signum();
    let mut x = x0;
    let mut w = w0;
    let mut h = span / 64.0;
    let h_min = span.abs() * opts.min_step_rel;

    loop {
        if (x1 - x) * dir <= 0.0 {
            return OdeOutcome {
                x: x1,
                w,
                reason: StopReason::Reached,
            };
        }
        if h.abs() > (x1 - x).abs() {
            h = x1 - x;
        }
        let mut k = [0.0f64; 7];
        k[0] = f(x, w);
        let mut ok = k[0].is_finite();
        for i in 0..6 {
            if !ok {
                break;
            }
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(i + 1) {
                acc += A[i][j] * kj;
            }
            k[i + 1] = f(x + C[i] * h, w + h * acc);
            ok = k[i + 1].is_finite();
        }
        if !ok {
            // Retry on a shorter step before giving up.
            h *= 0.25;
            if h.abs() < h_min {
                return OdeOutcome {
                    x,
                    w,
                    reason: StopReason::NonFinite,
                };
            }
            continue;
        }
        let mut w5 = 0.0;
        let mut w4 = 0.0;
        for i in 0..7 {
            w5 += B5[i] * k[i];
            w4 += B4[i] * k[i];
        }
        let w5 = w + h * w5;
        let w4 = w + h * w4;
        let err = (w5 - w4).abs();
        let tol = opts.atol + opts.rtol * w.abs().max(w5.abs());

        if err <= tol || h.abs() <= h_min {
            x += h;
            w = w5;
            if let Some(floor) = opts.floor {
                if w <= floor {
                    return OdeOutcome {
                        x,
                        w,
                        reason: StopReason::FloorHit,
                    };
                }
            }
            if err > tol {
                return OdeOutcome {
                    x,
                    w,
                    reason: StopReason::StepUnderflow,
                };
            }
        }
        // Standard controller with safety factor and growth clamps.
        let scale = if err > 0.0 {
            0.9 * (tol / err).powf(0.2)
        } else {
            5.0
        };
        h *= scale.clamp(0.2, 5.0);
        if h.abs() < h_min {
            h = h_min * dir;
        }
    }
}
