//! Grid-sampled signals, Jordan decomposition, and time warps.
//!
//! A [`Signal`] is interpreted as the piecewise-linear interpolant of its
//! samples and is zero outside `[grid[0], grid[n-1]]`. All integrals use the
//! trapezoid rule, which is exact for that interpretation as long as the
//! integrand does not change sign inside a cell.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdtError};

/// Parts whose mass falls below this fraction of `total + 1` are treated as zero.
pub const ZERO_PART_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Signal {
    /// Validates and wraps a sampled signal.
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(ScdtError::invalid(format!(
                "grid has {} samples but values has {}",
                grid.len(),
                values.len()
            )));
        }
        validate_grid(&grid)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScdtError::invalid_at("non-finite signal value", i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Vec<f64>) -> Result<Self> {
        let values = vec![0.0; grid.len()];
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.grid, self.values)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Same grid, values multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Signal {
        Signal {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
        }
    }

    pub fn negated(&self) -> Signal {
        self.scaled(-1.0)
    }

    /// Piecewise-linear evaluation; zero outside the grid.
    pub fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&t) {
            return 0.0;
        }
        let j = self.grid.partition_point(|&g| g <= t);
        if j >= self.grid.len() {
            return self.values[self.values.len() - 1];
        }
        let (t0, t1) = (self.grid[j - 1], self.grid[j]);
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Evaluates at an ascending sequence of points in one merge pass.
    pub(crate) fn eval_sorted(&self, points: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.domain();
        let mut out = Vec::with_capacity(points.len());
        let mut j = 1;
        for &t in points {
            if t < lo || t > hi {
                out.push(0.0);
                continue;
            }
            while j < self.grid.len() - 1 && self.grid[j] < t {
                j += 1;
            }
            while j > 1 && self.grid[j - 1] > t {
                j -= 1;
            }
            let (t0, t1) = (self.grid[j - 1], self.grid[j]);
            let (v0, v1) = (self.values[j - 1], self.values[j]);
            out.push(v0 + (v1 - v0) * (t - t0) / (t1 - t0));
        }
        out
    }
}

/// `n` evenly spaced points from `lo` to `hi`, endpoints exact.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "uniform grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    grid[n - 1] = hi;
    grid
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(ScdtError::invalid(format!(
            "grid needs at least 2 samples, got {}",
            grid.len()
        )));
    }
    if let Some(i) = grid.iter().position(|g| !g.is_finite()) {
        return Err(ScdtError::invalid_at("non-finite grid point", i));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(ScdtError::invalid_at(
            "grid is not strictly increasing",
            i + 1,
        ));
    }
    Ok(())
}

/// Trapezoid quadrature weights for `grid`.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

pub(crate) fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// L1 norm by the trapezoid rule applied to `|values|`.
pub fn l1_norm(s: &Signal) -> f64 {
    s.grid
        .windows(2)
        .zip(s.values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].abs() + v[1].abs()))
        .sum()
}

/// `∫ |a − b|` exactly, both signals read as piecewise linear and zero
/// outside their grids.
pub fn l1_distance(a: &Signal, b: &Signal) -> f64 {
    let mut knots: Vec<f64> = a.grid.iter().chain(&b.grid).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let inside = |s: &Signal, x0: f64, x1: f64| {
        let (lo, hi) = s.domain();
        x0 >= lo && x1 <= hi
    };
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let side = |x: f64| {
            let va = if inside(a, x0, x1) { a.eval(x) } else { 0.0 };
            let vb = if inside(b, x0, x1) { b.eval(x) } else { 0.0 };
            va - vb
        };
        let (d0, d1) = (side(x0), side(x1));
        let h = x1 - x0;
        total += if d0 * d1 >= 0.0 {
            0.5 * h * (d0.abs() + d1.abs())
        } else {
            0.5 * h * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
        };
    }
    total
}

/// One sign part of a Jordan decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalPart {
    pub signal: Signal,
    pub mass: f64,
    negligible: bool,
}

impl SignalPart {
    /// True when the part's mass is below the zero-part threshold.
    pub fn is_zero(&self) -> bool {
        self.negligible
    }
}

/// Splits `s` into `(s⁺, s⁻)` on the same grid, both nonnegative.
pub fn jordan_decompose(s: &Signal) -> (SignalPart, SignalPart) {
    let plus: Vec<f64> = s.values.iter().map(|&v| v.max(0.0)).collect();
    let minus: Vec<f64> = s.values.iter().map(|&v| (-v).max(0.0)).collect();
    let total = l1_norm(s);
    let threshold = ZERO_PART_RTOL * (total + 1.0);
    let make = |values: Vec<f64>| {
        let mass = trapezoid(&s.grid, &values);
        SignalPart {
            signal: Signal {
                grid: s.grid.clone(),
                values,
            },
            mass,
            negligible: mass < threshold,
        }
    };
    (make(plus), make(minus))
}

/// Piecewise-linear resampling onto `grid`; zero outside the support of `s`.
pub fn resample(s: &Signal, grid: &[f64]) -> Result<Signal> {
    validate_grid(grid)?;
    let values = s.eval_sorted(grid);
    Signal::new(grid.to_vec(), values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarpKind {
    /// `g(t) = omega * t + tau`
    Affine { omega: f64, tau: f64 },
    /// `g(t) = t^exponent` on `[0, inf)`
    Power { exponent: f64 },
    /// Piecewise-linear through `(grid[i], values[i])`.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// A strictly increasing time deformation `g`, optionally scaled by `λ`.
///
/// With `normalize` set, [`apply_warp`] produces `λ g′ s∘g`, otherwise `λ s∘g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Warp {
    kind: WarpKind,
    scale: f64,
    normalize: bool,
}

impl Warp {
    pub fn affine(omega: f64, tau: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() || !tau.is_finite() {
            return Err(ScdtError::invalid(format!(
                "affine warp needs omega > 0 and finite tau, got omega = {omega}, tau = {tau}"
            )));
        }
        Ok(Self::from_kind(WarpKind::Affine { omega, tau }))
    }

    pub fn identity() -> Self {
        Self::from_kind(WarpKind::Affine {
            omega: 1.0,
            tau: 0.0,
        })
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(ScdtError::invalid(format!(
                "power warp needs exponent > 0, got {exponent}"
            )));
        }
        Ok(Self::from_kind(WarpKind::Power { exponent }))
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(ScdtError::invalid("tabulated warp: length mismatch"));
        }
        validate_grid(&grid)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScdtError::invalid_at("tabulated warp: non-finite value", i));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(ScdtError::invalid_at(
                "tabulated warp is not strictly increasing",
                i + 1,
            ));
        }
        Ok(Self::from_kind(WarpKind::Tabulated { grid, values }))
    }

    fn from_kind(kind: WarpKind) -> Self {
        Self {
            kind,
            scale: 1.0,
            normalize: true,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(ScdtError::invalid(format!(
                "warp scale must be positive, got {scale}"
            )));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn kind(&self) -> &WarpKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    /// `g(t)`.
    pub fn forward(&self, t: f64) -> Result<f64> {
        match &self.kind {
            WarpKind::Affine { omega, tau } => Ok(omega * t + tau),
            WarpKind::Power { exponent } => {
                if t < 0.0 {
                    return Err(ScdtError::OutOfRange {
                        name: "power warp argument",
                        value: t,
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                Ok(t.powf(*exponent))
            }
            WarpKind::Tabulated { grid, values } => interp_checked(grid, values, t, "warp argument"),
        }
    }

    /// `g′(t)`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        match &self.kind {
            WarpKind::Affine { omega, .. } => Ok(*omega),
            WarpKind::Power { exponent } => {
                if t < 0.0 {
                    return Err(ScdtError::OutOfRange {
                        name: "power warp argument",
                        value: t,
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                if t == 0.0 {
                    // 0^(p-1) is 0, 1 or inf for p > 1, = 1, < 1.
                    return Ok(if *exponent > 1.0 {
                        0.0
                    } else if *exponent == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    });
                }
                Ok(exponent * t.powf(exponent - 1.0))
            }
            WarpKind::Tabulated { grid, values } => {
                let slopes = central_differences(grid, values);
                interp_checked(grid, &slopes, t, "warp argument")
            }
        }
    }

    /// `g⁻¹(y)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        match &self.kind {
            WarpKind::Affine { omega, tau } => Ok((y - tau) / omega),
            WarpKind::Power { exponent } => {
                if y < 0.0 {
                    return Err(ScdtError::OutOfRange {
                        name: "power warp value",
                        value: y,
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                Ok(y.powf(1.0 / exponent))
            }
            WarpKind::Tabulated { grid, values } => interp_checked(values, grid, y, "warp value"),
        }
    }
}

fn interp_checked(xs: &[f64], ys: &[f64], x: f64, name: &'static str) -> Result<f64> {
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    // Small slack so that endpoints recomputed in floating point stay inside.
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if x < lo - slack || x > hi + slack {
        return Err(ScdtError::OutOfRange {
            name,
            value: x,
            lo,
            hi,
        });
    }
    let x = x.clamp(lo, hi);
    let j = xs.partition_point(|&g| g <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    Ok(ys[j - 1] + (ys[j] - ys[j - 1]) * (x - x0) / (x1 - x0))
}

/// Derivative estimates at the nodes: central inside, one-sided at the ends.
fn central_differences(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (ys[b] - ys[a]) / (xs[b] - xs[a])
        })
        .collect()
}

/// Deforms `s` by `w`: the output lives on `g⁻¹(Ω_s)` at the input resolution.
pub fn apply_warp(s: &Signal, w: &Warp) -> Result<Signal> {
    let (a, b) = s.domain();
    if matches!(w.kind, WarpKind::Power { .. }) && a < 0.0 {
        return Err(ScdtError::invalid(format!(
            "power warp needs a domain inside [0, inf), signal starts at {a}"
        )));
    }
    let lo = w.inverse(a)?;
    let hi = w.inverse(b)?;
    if !(hi > lo) {
        return Err(ScdtError::invalid(
            "warp is not increasing on the signal domain",
        ));
    }
    let grid = uniform_grid(lo, hi, s.len());
    let mut warped_times = Vec::with_capacity(grid.len());
    for &t in &grid {
        warped_times.push(w.forward(t)?.clamp(a, b));
    }
    if warped_times.windows(2).any(|p| p[1] < p[0]) {
        return Err(ScdtError::invalid(
            "warp is not increasing on the signal domain",
        ));
    }
    let base = s.eval_sorted(&warped_times);
    let mut values = Vec::with_capacity(grid.len());
    for (&t, v) in grid.iter().zip(base) {
        let jac = if w.normalize { w.derivative(t)? } else { 1.0 };
        // An infinite Jacobian at a power-warp endpoint only matters where s vanishes.
        let value = if v == 0.0 { 0.0 } else { w.scale * jac * v };
        if !value.is_finite() {
            return Err(ScdtError::invalid(format!(
                "warp Jacobian is unbounded at t = {t}"
            )));
        }
        values.push(value);
    }
    Signal::new(grid, values)
}
