//! Uniform-grid samples of a function on an interval or a rectangle.
//!
//! A [`GridFunction`] is the discrete stand-in for a continuous solution:
//! dense values on a uniform grid, optionally stored in the log domain
//! (`values[i] = ln u(x_i)`), which is how positive solutions with doubly
//! exponential decay stay representable. All derivative helpers are
//! second-order central differences on the stored values; whether those are
//! `u` or `ln u` is the caller's concern.
//!
//! 2D storage puts the x index outermost: node `(i, j)` sits at
//! `(origin_x + i h, origin_y + j h)` and lives at `values[i * ny + j]`.
//!
//! The CSV form has two header lines (column names, then the metadata
//! values) followed by one line per x index with `ny` comma-separated
//! stored values. Floats print in Rust's shortest round-trip form, so a
//! parse-write cycle reproduces the file byte for byte.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const CSV_HEADER: &str = "dim,origin_x,origin_y,h,nx,ny,log_domain";

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    dim: usize,
    origin: [f64; 2],
    h: f64,
    /// `[nx, ny]`; `ny = 1` in 1D.
    shape: [usize; 2],
    log_domain: bool,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new_1d(origin: f64, h: f64, values: Vec<f64>, log_domain: bool) -> Result<Self> {
        let nx = values.len();
        Self::build(1, [origin, 0.0], h, [nx, 1], values, log_domain)
    }

    pub fn new_2d(
        origin: [f64; 2],
        h: f64,
        shape: [usize; 2],
        values: Vec<f64>,
        log_domain: bool,
    ) -> Result<Self> {
        Self::build(2, origin, h, shape, values, log_domain)
    }

    fn build(
        dim: usize,
        origin: [f64; 2],
        h: f64,
        shape: [usize; 2],
        values: Vec<f64>,
        log_domain: bool,
    ) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::domain(format!("grid spacing must be positive, got {h}")));
        }
        if shape[0] == 0 || shape[1] == 0 {
            return Err(Error::domain("grid shape must be positive in every axis"));
        }
        if dim == 1 && shape[1] != 1 {
            return Err(Error::domain("1D grid must have ny = 1"));
        }
        if values.len() != shape[0] * shape[1] {
            return Err(Error::domain(format!(
                "value count {} does not match shape {}x{}",
                values.len(),
                shape[0],
                shape[1]
            )));
        }
        if !origin.iter().all(|o| o.is_finite()) {
            return Err(Error::domain("grid origin must be finite"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("grid values must be finite"));
        }
        Ok(GridFunction { dim, origin, h, shape, log_domain, values })
    }

    /// Sample `f` at the 1D nodes `origin + i h`, `i < n`.
    pub fn from_fn_1d(
        origin: f64,
        h: f64,
        n: usize,
        log_domain: bool,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = (0..n).map(|i| f(origin + i as f64 * h)).collect();
        Self::new_1d(origin, h, values, log_domain)
    }

    /// Sample `f` at the 2D nodes.
    pub fn from_fn_2d(
        origin: [f64; 2],
        h: f64,
        shape: [usize; 2],
        log_domain: bool,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(shape[0] * shape[1]);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                values.push(f(origin[0] + i as f64 * h, origin[1] + j as f64 * h));
            }
        }
        Self::new_2d(origin, h, shape, values, log_domain)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn log_domain(&self) -> bool {
        self.log_domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin[1] + j as f64 * self.h
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.shape[1] + j]
    }

    /// Central first difference along x at an interior index.
    pub fn dx(&self, i: usize, j: usize) -> f64 {
        (self.get(i + 1, j) - self.get(i - 1, j)) / (2.0 * self.h)
    }

    pub fn dy(&self, i: usize, j: usize) -> f64 {
        (self.get(i, j + 1) - self.get(i, j - 1)) / (2.0 * self.h)
    }

    /// Central second difference along x.
    pub fn dxx(&self, i: usize, j: usize) -> f64 {
        (self.get(i + 1, j) - 2.0 * self.get(i, j) + self.get(i - 1, j)) / (self.h * self.h)
    }

    pub fn dyy(&self, i: usize, j: usize) -> f64 {
        (self.get(i, j + 1) - 2.0 * self.get(i, j) + self.get(i, j - 1)) / (self.h * self.h)
    }

    /// Standard 4-point centered cross difference.
    pub fn dxy(&self, i: usize, j: usize) -> f64 {
        (self.get(i + 1, j + 1) - self.get(i + 1, j - 1) - self.get(i - 1, j + 1)
            + self.get(i - 1, j - 1))
            / (4.0 * self.h * self.h)
    }

    /// Local third-derivative scale along x, from the widest third
    /// difference stencil available around `i` (clamped near the boundary).
    /// Used to size truncation-error tolerances.
    pub fn third_scale_x(&self, i: usize, j: usize) -> f64 {
        let nx = self.shape[0];
        if nx < 4 {
            return 0.0;
        }
        // Stencil i0..i0+3 with i inside.
        let i0 = i.saturating_sub(1).min(nx - 4);
        let d3 = self.get(i0 + 3, j) - 3.0 * self.get(i0 + 2, j) + 3.0 * self.get(i0 + 1, j)
            - self.get(i0, j);
        (d3 / self.h.powi(3)).abs()
    }

    pub fn third_scale_y(&self, i: usize, j: usize) -> f64 {
        let ny = self.shape[1];
        if ny < 4 {
            return 0.0;
        }
        let j0 = j.saturating_sub(1).min(ny - 4);
        let d3 = self.get(i, j0 + 3) - 3.0 * self.get(i, j0 + 2) + 3.0 * self.get(i, j0 + 1)
            - self.get(i, j0);
        (d3 / self.h.powi(3)).abs()
    }

    /// Linear interpolation of the stored values at `x` (1D only). For a
    /// log-domain grid this interpolates `ln u`, i.e. geometrically in `u`.
    pub fn interpolate_1d(&self, x: f64) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::domain("interpolate_1d needs a 1D grid"));
        }
        let n = self.shape[0];
        let s = (x - self.origin[0]) / self.h;
        if !(s >= -1e-9 && s <= (n - 1) as f64 + 1e-9) {
            return Err(Error::domain(format!("x = {x} outside the grid domain")));
        }
        let s = s.clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let w = s - i as f64;
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    /// Bilinear interpolation of the stored values at `(x, y)` (2D only).
    pub fn interpolate_2d(&self, x: f64, y: f64) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::domain("interpolate_2d needs a 2D grid"));
        }
        let [nx, ny] = self.shape;
        let sx = (x - self.origin[0]) / self.h;
        let sy = (y - self.origin[1]) / self.h;
        if !(sx >= -1e-9 && sx <= (nx - 1) as f64 + 1e-9 && sy >= -1e-9
            && sy <= (ny - 1) as f64 + 1e-9)
        {
            return Err(Error::domain(format!("({x}, {y}) outside the grid domain")));
        }
        let sx = sx.clamp(0.0, (nx - 1) as f64);
        let sy = sy.clamp(0.0, (ny - 1) as f64);
        let i = (sx.floor() as usize).min(nx - 2);
        let j = (sy.floor() as usize).min(ny - 2);
        let (wx, wy) = (sx - i as f64, sy - j as f64);
        Ok(self.get(i, j) * (1.0 - wx) * (1.0 - wy)
            + self.get(i + 1, j) * wx * (1.0 - wy)
            + self.get(i, j + 1) * (1.0 - wx) * wy
            + self.get(i + 1, j + 1) * wx * wy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.dim,
            self.origin[0],
            self.origin[1],
            self.h,
            self.shape[0],
            self.shape[1],
            u8::from(self.log_domain)
        );
        for i in 0..self.shape[0] {
            for j in 0..self.shape[1] {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.get(i, j));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::domain("empty grid CSV"))?;
        if header.trim() != CSV_HEADER {
            return Err(Error::domain(format!("unexpected grid CSV header: {header:?}")));
        }
        let meta_line = lines.next().ok_or_else(|| Error::domain("grid CSV missing metadata row"))?;
        let meta: Vec<&str> = meta_line.trim().split(',').collect();
        if meta.len() != 7 {
            return Err(Error::domain("grid CSV metadata row needs 7 fields"));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::domain(format!("bad {what} in grid CSV: {s:?}")))
        };
        let parse_u = |s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::domain(format!("bad {what} in grid CSV: {s:?}")))
        };
        let dim = parse_u(meta[0], "dim")?;
        if dim != 1 && dim != 2 {
            return Err(Error::domain(format!("grid CSV dim must be 1 or 2, got {dim}")));
        }
        let origin = [parse_f(meta[1], "origin_x")?, parse_f(meta[2], "origin_y")?];
        let h = parse_f(meta[3], "h")?;
        let shape = [parse_u(meta[4], "nx")?, parse_u(meta[5], "ny")?];
        let log_domain = match meta[6] {
            "0" => false,
            "1" => true,
            other => return Err(Error::domain(format!("bad log_domain flag: {other:?}"))),
        };
        let mut values = Vec::with_capacity(shape[0] * shape[1]);
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            for field in line.split(',') {
                values.push(parse_f(field, "value")?);
            }
        }
        Self::build(dim, origin, h, shape, values, log_domain)
    }

    /// Atomic write: the file appears complete or not at all.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_csv()).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e.to_string()))?;
        Self::from_csv(&text)
    }
}
