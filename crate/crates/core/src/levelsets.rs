//! Level-set measure machinery: scaling sequence, measure decay envelopes,
//! covering radii, and a discrete isoperimetric check.
//!
//! The weak Harnack argument walks the superlevel sets `A_k = {u > L^k m}`
//! and charges each step `k -> k+1` a measure cost proportional to
//! `a_k = (1/L) / (R eta(L^k m) + 1)`. Everything here works with thresholds
//! in log form (`ln(L^k m) = ln m + k ln L`), so threshold ladders like
//! `exp(e^{10})` stay representable.
//!
//! Pixel sets use cell-counting measure (`count * h^n`), with the discrete
//! boundary read off 4-neighbor transitions and exact Euclidean distances
//! from a two-pass lower-envelope transform.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::drift::DriftFunction;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// The sequence `a_k` with its dual-evaluation diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingSequence {
    pub l: f64,
    pub log_m: f64,
    pub radius: f64,
    /// `a_k = (1/L) / (R eta(L^k m) + 1)` for `k = 0..=k_max`.
    pub a: Vec<f64>,
    /// Worst disagreement between the log-argument form above and the
    /// direct `L^{k-1} m / (R phi(L^k m) + L^k m)` form, over the `k` whose
    /// threshold is representable outside log-domain.
    pub max_dual_gap: f64,
}

/// Computes `a_k` for `k = 0..=k_max`, cross-checking two algebraic routes.
pub fn a_sequence(
    f: &DriftFunction,
    log_m: f64,
    l: f64,
    radius: f64,
    k_max: usize,
) -> Result<ScalingSequence> {
    if !(l > 1.0) || !l.is_finite() {
        return Err(Error::domain(format!("scaling factor L must exceed 1, got {l}")));
    }
    if !log_m.is_finite() {
        return Err(Error::domain(format!("ln m must be finite, got {log_m}")));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::domain(format!("radius must lie in (0, 1], got {radius}")));
    }
    if k_max < 1 {
        return Err(Error::domain("need k_max >= 1"));
    }
    let ln_l = l.ln();
    let mut a = Vec::with_capacity(k_max + 1);
    let mut max_gap = 0.0_f64;
    for k in 0..=k_max {
        let s_k = log_m + k as f64 * ln_l;
        let value = (1.0 / l) / (radius * f.eta_log(s_k) + 1.0);
        if s_k.abs() < 700.0 {
            let t_k = s_k.exp();
            let direct = (s_k - ln_l).exp() / (radius * f.phi(t_k)? + t_k);
            max_gap = max_gap.max((value - direct).abs());
        }
        a.push(value);
    }
    Ok(ScalingSequence { l, log_m, radius, a, max_dual_gap: max_gap })
}

/// Superlevel-set measures `|{u > L^k m} ∩ B|` for `k = 0..=k_max`.
///
/// Node-counting measure: nodes whose position lies in the ball of
/// `ball_radius` about the coordinate origin, each weighted `h^dim`.
/// Thresholds are compared in whichever domain the grid stores.
pub fn level_measures(
    u: &GridFunction,
    log_m: f64,
    l: f64,
    k_max: usize,
    ball_radius: f64,
) -> Result<Vec<f64>> {
    if !(l > 1.0) || !l.is_finite() {
        return Err(Error::domain(format!("scaling factor L must exceed 1, got {l}")));
    }
    if !(ball_radius > 0.0) {
        return Err(Error::domain(format!("ball radius must be positive, got {ball_radius}")));
    }
    let ln_l = l.ln();
    let h = u.h();
    let cell = if u.dim() == 1 { h } else { h * h };
    let [nx, ny] = u.shape();
    let mut measures = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let log_threshold = log_m + k as f64 * ln_l;
        let threshold = if u.log_domain() { log_threshold } else { log_threshold.exp() };
        let mut count = 0usize;
        for i in 0..nx {
            for j in 0..ny {
                let x = u.x(i);
                let y = if u.dim() == 1 { 0.0 } else { u.y(j) };
                if x * x + y * y <= ball_radius * ball_radius && u.get(i, j) > threshold {
                    count += 1;
                }
            }
        }
        measures.push(count as f64 * cell);
    }
    Ok(measures)
}

/// Inputs for the decay-envelope comparison.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetDiagnostics {
    pub l: f64,
    pub log_m: f64,
    pub radius: f64,
    pub a: Vec<f64>,
    /// Measured `|A_k|`, aligned with `a`; may be shorter or empty.
    pub measured: Vec<f64>,
    /// Reference measure of the working ball.
    pub ball_measure: f64,
    pub dim: usize,
}

/// Constants the decay argument guarantees to exist without tracing values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeConsts {
    pub delta: f64,
    /// Constant of the initial-decay envelope.
    pub c: f64,
    /// Constant of the tail envelope.
    pub c0: f64,
    /// Scale of the power envelope.
    pub c_eps: f64,
    /// Exponent of the power envelope.
    pub eps: f64,
    /// First index charged by the tail envelope.
    pub k0: usize,
    /// Anchor index of the power envelope.
    pub k1: usize,
}

impl Default for EnvelopeConsts {
    fn default() -> Self {
        EnvelopeConsts { delta: 0.5, c: 1.0, c0: 0.1, c_eps: 1.0, eps: 0.5, k0: 0, k1: 0 }
    }
}

/// One level of the three-envelope comparison.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeRow {
    pub k: usize,
    /// `sum_{j<k} a_j`.
    pub partial_sum: f64,
    /// `|B| - c (sum_{j<k} a_j)^n`.
    pub env_initial: f64,
    /// `(1/n^n) (1 - c0 sum_{j=k0}^{k-1} a_j)^n`, with the base clamped
    /// at zero once the sum overshoots.
    pub env_tail: f64,
    /// `c_eps L^{-eps (k - k1)} a_{k1}^n`, i.e. the power envelope at
    /// threshold ratio `t = L^{k-k1}`; only emitted for `k >= k1`.
    pub env_power: Option<f64>,
    pub measured: Option<f64>,
    pub within_initial: Option<bool>,
    pub within_tail: Option<bool>,
    pub within_power: Option<bool>,
}

/// Evaluates the three predicted decay envelopes against measured values.
///
/// Diagnostic only: the envelopes assert existence of constants, so the
/// flags record whether the supplied constants are consistent with the data.
pub fn decay_envelopes(
    diag: &LevelSetDiagnostics,
    consts: &EnvelopeConsts,
) -> Result<Vec<EnvelopeRow>> {
    if diag.dim == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if diag.a.is_empty() {
        return Err(Error::domain("empty scaling sequence"));
    }
    if !(consts.delta > 0.0 && consts.delta <= 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1], got {}", consts.delta)));
    }
    for (name, v) in [("c", consts.c), ("c0", consts.c0), ("c_eps", consts.c_eps), ("eps", consts.eps)]
    {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("constant {name} must be positive, got {v}")));
        }
    }
    if consts.k1 >= diag.a.len() {
        return Err(Error::domain(format!(
            "power-envelope anchor k1 = {} outside the sequence (len {})",
            consts.k1,
            diag.a.len()
        )));
    }
    let n = diag.dim as f64;
    let a_k1 = diag.a[consts.k1];
    let mut rows = Vec::with_capacity(diag.a.len());
    let mut partial = 0.0_f64;
    let mut tail_sum = 0.0_f64;
    for k in 0..diag.a.len() {
        let env_initial = diag.ball_measure - consts.c * partial.powf(n);
        let env_tail = (1.0 / n.powf(n)) * (1.0 - consts.c0 * tail_sum).max(0.0).powf(n);
        let env_power = (k >= consts.k1)
            .then(|| consts.c_eps * diag.l.powf(-consts.eps * (k - consts.k1) as f64) * a_k1.powf(n));
        let measured = diag.measured.get(k).copied();
        rows.push(EnvelopeRow {
            k,
            partial_sum: partial,
            env_initial,
            env_tail,
            env_power,
            measured,
            within_initial: measured.map(|m| m <= env_initial),
            within_tail: measured.map(|m| m <= env_tail),
            within_power: measured.and_then(|m| env_power.map(|e| m <= e)),
        });
        partial += diag.a[k];
        if k >= consts.k0 {
            tail_sum += diag.a[k];
        }
    }
    Ok(rows)
}

/// Constants of the covering-radii construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoveringConsts {
    /// The factor written `L0`; must exceed 1/2.
    pub l0_scale: f64,
    pub sigma: f64,
    pub eps: f64,
    pub n: usize,
}

impl Default for CoveringConsts {
    fn default() -> Self {
        CoveringConsts { l0_scale: 2.0, sigma: 1.0, eps: 0.5, n: 2 }
    }
}

/// Geometric covering radii with tail cross-check.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringRadii {
    /// `nu = L0 / (L0 - 1/2)`.
    pub nu: f64,
    /// `r_l = sigma nu^{-(l+1) eps/n} (L0/2)^{-eps/n} a_k1`.
    pub radii: Vec<f64>,
    /// Closed-form tails `sum_{j>=l} r_j = r_l / (1 - nu^{-eps/n})`.
    pub tails: Vec<f64>,
    /// Smallest `l` with tail at most 1/3, when reached within `l_max`.
    pub l0: Option<usize>,
    /// Worst relative gap between closed-form tails and partial sums.
    pub max_tail_gap: f64,
}

/// Builds the covering radii sequence for `l = 0..=l_max`.
pub fn caffarelli_radii(a_k1: f64, consts: &CoveringConsts, l_max: usize) -> Result<CoveringRadii> {
    if !(a_k1 > 0.0) || !a_k1.is_finite() {
        return Err(Error::domain(format!("anchor value must be positive, got {a_k1}")));
    }
    if !(consts.l0_scale > 0.5) {
        return Err(Error::domain(format!("L0 must exceed 1/2, got {}", consts.l0_scale)));
    }
    if !(consts.sigma > 0.0) || !(consts.eps > 0.0) || consts.n == 0 {
        return Err(Error::domain("need sigma > 0, eps > 0, n >= 1"));
    }
    let nu = consts.l0_scale / (consts.l0_scale - 0.5);
    let decay = nu.powf(-consts.eps / consts.n as f64);
    let lead = consts.sigma * (consts.l0_scale / 2.0).powf(-consts.eps / consts.n as f64) * a_k1;
    let radii: Vec<f64> = (0..=l_max).map(|l| lead * decay.powi(l as i32 + 1)).collect();
    let tails: Vec<f64> = radii.iter().map(|&r| r / (1.0 - decay)).collect();

    // A geometric tail equals the explicit partial sum plus the closed tail
    // of the remainder (tails[l_max] - radii[l_max]); any drift between the
    // two routes flags a broken closed form.
    let mut max_gap = 0.0_f64;
    for l in 0..=l_max {
        let via_sum: f64 =
            radii[l..=l_max].iter().rev().sum::<f64>() + tails[l_max] - radii[l_max];
        max_gap = max_gap.max(((via_sum - tails[l]) / tails[l]).abs());
    }

    let l0 = tails.iter().position(|&t| t <= 1.0 / 3.0);
    Ok(CoveringRadii { nu, radii, tails, l0, max_tail_gap: max_gap })
}

/// A set of grid cells; measure is `count * h^2`.
///
/// Cells are indexed x-major like [`GridFunction`], with cell centers at
/// `origin + (i + 1/2, j + 1/2) h`.
#[derive(Debug, Clone)]
pub struct PixelSet {
    origin: [f64; 2],
    h: f64,
    shape: [usize; 2],
    mask: Vec<bool>,
}

impl PixelSet {
    pub fn from_fn(
        origin: [f64; 2],
        h: f64,
        shape: [usize; 2],
        inside: impl Fn(f64, f64) -> bool,
    ) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::domain(format!("cell size must be positive, got {h}")));
        }
        if shape[0] == 0 || shape[1] == 0 {
            return Err(Error::domain("pixel window must be nonempty"));
        }
        let mut mask = vec![false; shape[0] * shape[1]];
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                let (x, y) = cell_center(origin, h, i, j);
                mask[i * shape[1] + j] = inside(x, y);
            }
        }
        Ok(PixelSet { origin, h, shape, mask })
    }

    pub fn empty(origin: [f64; 2], h: f64, shape: [usize; 2]) -> Result<Self> {
        Self::from_fn(origin, h, shape, |_, _| false)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.shape[1] + j]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        cell_center(self.origin, self.h, i, j)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.h * self.h
    }

    /// Cells of the set with a 4-neighbor outside it (window edges count as
    /// outside), restricted to centers strictly inside the ball.
    pub fn boundary_in_ball(&self, ball_radius: f64) -> Vec<bool> {
        let [nx, ny] = self.shape;
        let mut out = vec![false; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                if !self.mask[i * ny + j] {
                    continue;
                }
                let (x, y) = self.cell_center(i, j);
                if x * x + y * y >= ball_radius * ball_radius {
                    continue;
                }
                let exposed = (i == 0 || !self.mask[(i - 1) * ny + j])
                    || (i + 1 == nx || !self.mask[(i + 1) * ny + j])
                    || (j == 0 || !self.mask[i * ny + j - 1])
                    || (j + 1 == ny || !self.mask[i * ny + j + 1]);
                if exposed {
                    out[i * ny + j] = true;
                }
            }
        }
        out
    }
}

fn cell_center(origin: [f64; 2], h: f64, i: usize, j: usize) -> (f64, f64) {
    (origin[0] + (i as f64 + 0.5) * h, origin[1] + (j as f64 + 0.5) * h)
}

const DT_INF: f64 = 1e20;

// Lower-envelope distance transform of a sampled 1D function (squared
// distances in index units).
fn dt_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = -DT_INF;
    z[1] = DT_INF;
    let sq = |p: usize| f[p] + (p * p) as f64;
    for q in 1..n {
        let mut s = (sq(q) - sq(v[k])) / (2.0 * (q - v[k]) as f64);
        while s <= z[k] {
            k -= 1;
            s = (sq(q) - sq(v[k])) / (2.0 * (q - v[k]) as f64);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = DT_INF;
    }
    k = 0;
    // `q` is a coordinate, not just an index: it enters the parabola formula.
    #[allow(clippy::needless_range_loop)]
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let diff = q as f64 - v[k] as f64;
        d[q] = diff * diff + f[v[k]];
    }
    d
}

// Exact squared Euclidean distances (in cell units) to the seed cells.
fn edt_squared(seeds: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    let mut g = vec![0.0; nx * ny];
    let mut line = vec![0.0; ny.max(nx)];
    for i in 0..nx {
        for j in 0..ny {
            line[j] = if seeds[i * ny + j] { 0.0 } else { DT_INF };
        }
        let d = dt_1d(&line[..ny]);
        g[i * ny..(i + 1) * ny].copy_from_slice(&d);
    }
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            line[i] = g[i * ny + j];
        }
        let d = dt_1d(&line[..nx]);
        for i in 0..nx {
            out[i * ny + j] = d[i];
        }
    }
    out
}

/// Cells within distance `delta` of the set's in-ball boundary.
///
/// Distances are exact Euclidean distances between cell centers. An empty
/// boundary yields the empty set.
pub fn delta_neighborhood(e: &PixelSet, ball_radius: f64, delta: f64) -> Result<PixelSet> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    if !(ball_radius > 0.0) {
        return Err(Error::domain(format!("ball radius must be positive, got {ball_radius}")));
    }
    let [nx, ny] = e.shape;
    let seeds = e.boundary_in_ball(ball_radius);
    let dist2 = edt_squared(&seeds, nx, ny);
    let limit = (delta / e.h) * (delta / e.h);
    let mut out = PixelSet::empty(e.origin, e.h, e.shape)?;
    for (idx, &d2) in dist2.iter().enumerate() {
        if d2 < limit {
            out.mask[idx] = true;
        }
    }
    Ok(out)
}

/// One `delta` slice of the isoperimetric comparison.
#[derive(Debug, Clone, Serialize)]
pub struct IsoperimetricRow {
    pub delta: f64,
    /// `|I_delta(boundary) ∩ E|`.
    pub lhs: f64,
    /// `min(delta |B \ E|^{(n-1)/n}, delta |E|^{(n-1)/n}, |E|)`.
    pub rhs_min: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoperimetricReport {
    pub rows: Vec<IsoperimetricRow>,
    /// Smallest non-degenerate ratio: the empirical constant.
    pub min_ratio: Option<f64>,
}

/// Compares the measure of the boundary collar inside `E` against the
/// isoperimetric minimum, per `delta`.
///
/// `E` is read within the ball: both measures and the boundary are
/// restricted to cell centers inside `ball_radius`. Slices where the
/// comparison divides by zero (`E` empty, or filling the whole ball) are
/// flagged degenerate instead of contributing a ratio.
pub fn isoperimetric_check(
    e: &PixelSet,
    ball_radius: f64,
    deltas: &[f64],
) -> Result<IsoperimetricReport> {
    if deltas.is_empty() {
        return Err(Error::domain("need at least one delta"));
    }
    for &d in deltas {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::domain(format!("each delta must lie in (0, 1], got {d}")));
        }
    }
    let [nx, ny] = e.shape;
    let cell = e.h * e.h;
    let mut in_e = 0usize;
    let mut in_ball = 0usize;
    let mut ball_mask = vec![false; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let (x, y) = e.cell_center(i, j);
            if x * x + y * y <= ball_radius * ball_radius {
                ball_mask[i * ny + j] = true;
                in_ball += 1;
                if e.mask[i * ny + j] {
                    in_e += 1;
                }
            }
        }
    }
    let measure_e = in_e as f64 * cell;
    let measure_complement = (in_ball - in_e) as f64 * cell;

    let mut rows = Vec::with_capacity(deltas.len());
    let mut min_ratio: Option<f64> = None;
    for &delta in deltas {
        let collar = delta_neighborhood(e, ball_radius, delta)?;
        let lhs_cells = collar
            .mask
            .iter()
            .zip(&e.mask)
            .zip(&ball_mask)
            .filter(|&((&c, &e), &b)| c && e && b)
            .count();
        let lhs = lhs_cells as f64 * cell;
        let exponent = 0.5; // (n-1)/n with n = 2
        let rhs_min = (delta * measure_complement.powf(exponent))
            .min(delta * measure_e.powf(exponent))
            .min(measure_e);
        let degenerate = !(rhs_min > 0.0);
        let ratio = if degenerate { f64::NAN } else { lhs / rhs_min };
        if !degenerate {
            min_ratio = Some(min_ratio.map_or(ratio, |m: f64| m.min(ratio)));
        }
        rows.push(IsoperimetricRow { delta, lhs, rhs_min, ratio, degenerate });
    }
    Ok(IsoperimetricReport { rows, min_ratio })
}

/// Uniformly random 4-connected cell set of about `target` cells inside the
/// ball, grown from a random start by frontier expansion.
pub fn random_connected_set(
    rng: &mut impl Rng,
    origin: [f64; 2],
    h: f64,
    shape: [usize; 2],
    ball_radius: f64,
    target: usize,
) -> Result<PixelSet> {
    let mut set = PixelSet::empty(origin, h, shape)?;
    let [nx, ny] = shape;
    let in_ball = |i: usize, j: usize| {
        let (x, y) = cell_center(origin, h, i, j);
        x * x + y * y <= ball_radius * ball_radius
    };
    let candidates: Vec<(usize, usize)> = (0..nx)
        .flat_map(|i| (0..ny).map(move |j| (i, j)))
        .filter(|&(i, j)| in_ball(i, j))
        .collect();
    if candidates.is_empty() {
        return Err(Error::domain("ball contains no cells at this resolution"));
    }
    let start = candidates[rng.gen_range(0..candidates.len())];
    let mut frontier = vec![start];
    let mut seen = vec![false; nx * ny];
    seen[start.0 * ny + start.1] = true;
    let mut grown = 0usize;
    while grown < target {
        if frontier.is_empty() {
            break;
        }
        let pick = rng.gen_range(0..frontier.len());
        let (i, j) = frontier.swap_remove(pick);
        set.mask[i * ny + j] = true;
        grown += 1;
        let mut push = |ii: usize, jj: usize, frontier: &mut Vec<(usize, usize)>| {
            if !seen[ii * ny + jj] && in_ball(ii, jj) {
                seen[ii * ny + jj] = true;
                frontier.push((ii, jj));
            }
        };
        if i > 0 {
            push(i - 1, j, &mut frontier);
        }
        if i + 1 < nx {
            push(i + 1, j, &mut frontier);
        }
        if j > 0 {
            push(i, j - 1, &mut frontier);
        }
        if j + 1 < ny {
            push(i, j + 1, &mut frontier);
        }
    }
    Ok(set)
}
