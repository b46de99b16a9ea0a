//! CDFs, generalized inverses, the CDT, the signed CDT and their inverses.
//!
//! Transport maps are always tabulated on the reference grid `x_i`, i.e. at the
//! quantile levels `u_i = F_{s0}(x_i)`. Pushforwards read a map between samples
//! through a monotone cubic interpolant; validity checks treat it as linear.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdtError};
use crate::signal::{
    jordan_decompose, l1_norm, trapezoid_weights, uniform_grid, Signal, Warp,
};

/// Monotonicity slack for tabulated maps, relative to `max(1, |range|)`.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Default overlap tolerance of [`validate_scdt`], as a fraction of `min(a, b)`.
///
/// Maps tabulated at `N` levels leak roughly one level cell (`1/N` of a part's
/// mass) across every gap between lobes of a part, so the tolerance has to sit
/// well above `k/N` for signals with `k` sign changes.
pub const DEFAULT_OVERLAP_RTOL: f64 = 0.05;

pub const DEFAULT_RESOLUTION: usize = 1000;

/// Cumulative distribution function sampled on a grid.
///
/// Built from a piecewise-linear density, it is piecewise quadratic between
/// samples and both [`Cdf::eval`] and [`Cdf::quantile`] are exact. Without a
/// density it is read as piecewise linear.
#[derive(Clone, Debug, PartialEq)]
pub struct Cdf {
    grid: Vec<f64>,
    values: Vec<f64>,
    /// Unit-mass density at the grid points.
    density: Option<Vec<f64>>,
}

impl Cdf {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `t`; 0 left of the grid and 1 right of it.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.grid.len();
        if t <= self.grid[0] {
            return 0.0;
        }
        if t >= self.grid[n - 1] {
            return 1.0;
        }
        let j = self.grid.partition_point(|&g| g <= t);
        let (t0, t1) = (self.grid[j - 1], self.grid[j]);
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        let x = t - t0;
        let h = t1 - t0;
        match &self.density {
            Some(d) => (v0 + x * (d[j - 1] + 0.5 * (d[j] - d[j - 1]) * x / h)).min(v1),
            None => v0 + (v1 - v0) * x / h,
        }
    }

    /// Generalized inverse `inf { t : F(t) >= u }`.
    ///
    /// Flat stretches resolve to their left end. At `u = 0` the infimum is taken
    /// over the support, i.e. the result is the last grid point where `F = 0`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_level(u)?;
        let n = self.values.len();
        let j = self.values.partition_point(|&v| v < u);
        if j == 0 {
            let k = self.values.partition_point(|&v| v <= 0.0);
            return Ok(self.grid[k.saturating_sub(1).min(n - 1)]);
        }
        if j >= n {
            return Ok(self.grid[n - 1]);
        }
        Ok(self.solve_in_cell(j, u))
    }

    /// Right limit of the quantile, `inf { t : F(t) > u }`: flat stretches
    /// resolve to their right end. Differs from [`Cdf::quantile`] only where
    /// the quantile jumps.
    pub fn quantile_upper(&self, u: f64) -> Result<f64> {
        check_level(u)?;
        let n = self.values.len();
        let j = self.values.partition_point(|&v| v <= u);
        if j == 0 {
            return Ok(self.grid[0]);
        }
        if j >= n {
            return Ok(self.grid[n - 1]);
        }
        Ok(self.solve_in_cell(j, u))
    }

    /// Point of cell `j − 1 .. j` where `F = u`, given `values[j − 1] <= u <= values[j]`.
    fn solve_in_cell(&self, j: usize, u: f64) -> f64 {
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        let (t0, t1) = (self.grid[j - 1], self.grid[j]);
        let h = t1 - t0;
        let need = u - v0;
        let x = match &self.density {
            // Root of v0 + d0 x + (d1 − d0) x² / 2h = u, in cancellation-free form.
            Some(d) => {
                let (d0, d1) = (d[j - 1], d[j]);
                let disc = (d0 * d0 + 2.0 * (d1 - d0) * need / h).max(0.0);
                let denom = d0 + disc.sqrt();
                if denom > 0.0 {
                    2.0 * need / denom
                } else {
                    h * need / (v1 - v0)
                }
            }
            None => h * need / (v1 - v0),
        };
        t0 + x.clamp(0.0, h)
    }
}

fn check_level(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(ScdtError::OutOfRange {
            name: "quantile level",
            value: u,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Normalized cumulative trapezoid integral of a nonnegative signal.
pub fn cdf(s: &Signal) -> Result<Cdf> {
    if let Some(i) = s.values().iter().position(|&v| v < 0.0) {
        return Err(ScdtError::invalid_at("CDF input must be nonnegative", i));
    }
    let grid = s.grid();
    let vals = s.values();
    let mut acc = Vec::with_capacity(grid.len());
    acc.push(0.0);
    let mut total = 0.0;
    for i in 1..grid.len() {
        total += 0.5 * (grid[i] - grid[i - 1]) * (vals[i] + vals[i - 1]);
        acc.push(total);
    }
    if !(total > 0.0) {
        return Err(ScdtError::EmptyDistribution);
    }
    for v in acc.iter_mut() {
        *v = (*v / total).min(1.0);
    }
    let last = acc.len() - 1;
    acc[last] = 1.0;
    Ok(Cdf {
        grid: grid.to_vec(),
        values: acc,
        density: Some(vals.iter().map(|v| v / total).collect()),
    })
}

/// Quantile lookup; see [`Cdf::quantile`].
pub fn quantile(f: &Cdf, u: f64) -> Result<f64> {
    f.quantile(u)
}

/// Identity of a uniform reference, enough to rebuild it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

impl ReferenceSpec {
    pub fn label(&self) -> String {
        format!("uniform[{},{}]", self.lo, self.hi)
    }

    /// Parses labels produced by [`ReferenceSpec::label`].
    pub fn parse(label: &str, resolution: usize) -> Result<Self> {
        let inner = label
            .strip_prefix("uniform[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| ScdtError::Unknown {
                kind: "reference",
                name: label.to_string(),
            })?;
        let (lo, hi) = inner.split_once(',').ok_or_else(|| ScdtError::Unknown {
            kind: "reference",
            name: label.to_string(),
        })?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| ScdtError::Unknown {
                kind: "reference",
                name: label.to_string(),
            })
        };
        Ok(Self {
            lo: parse(lo)?,
            hi: parse(hi)?,
            resolution,
        })
    }

    pub fn build(&self) -> Result<Reference> {
        Reference::uniform(self.lo, self.hi, self.resolution)
    }
}

/// A strictly positive, unit-mass reference density with its CDF.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    signal: Signal,
    cdf: Cdf,
    label: String,
    spec: Option<ReferenceSpec>,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
}

impl Default for Reference {
    fn default() -> Self {
        ReferenceSpec::default()
            .build()
            .expect("default reference is valid")
    }
}

impl Reference {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(ScdtError::invalid(format!(
                "reference domain [{lo}, {hi}] is empty or unbounded"
            )));
        }
        if n < 2 {
            return Err(ScdtError::invalid("reference needs at least 2 samples"));
        }
        let grid = uniform_grid(lo, hi, n);
        let density = 1.0 / (hi - lo);
        let signal = Signal::new(grid, vec![density; n])?;
        let spec = ReferenceSpec {
            lo,
            hi,
            resolution: n,
        };
        let mut r = Self::from_density(signal, spec.label())?;
        r.spec = Some(spec);
        Ok(r)
    }

    /// Any strictly positive density; it is rescaled to unit mass.
    pub fn from_density(signal: Signal, label: impl Into<String>) -> Result<Self> {
        if let Some(i) = signal.values().iter().position(|&v| !(v > 0.0)) {
            return Err(ScdtError::invalid_at(
                "reference density must be strictly positive",
                i,
            ));
        }
        let mass = l1_norm(&signal);
        let signal = signal.scaled(1.0 / mass);
        let cdf = cdf(&signal)?;
        let weights: Vec<f64> = trapezoid_weights(signal.grid())
            .into_iter()
            .zip(signal.values())
            .map(|(w, d)| w * d)
            .collect();
        let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();
        Ok(Self {
            signal,
            cdf,
            label: label.into(),
            spec: None,
            weights,
            sqrt_weights,
        })
    }

    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    pub fn cdf(&self) -> &Cdf {
        &self.cdf
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn spec(&self) -> Option<ReferenceSpec> {
        self.spec
    }

    pub fn grid(&self) -> &[f64] {
        self.signal.grid()
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    /// Quantile levels `F_{s0}(x_i)` at which maps are tabulated.
    pub fn levels(&self) -> &[f64] {
        self.cdf.values()
    }

    /// Quadrature weights `s0(x_i) Δx_i` of the `L²(s0)` inner product.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_weights
    }

    /// Width of one reference cell, used for narrow fallbacks.
    pub fn cell_width(&self) -> f64 {
        let (lo, hi) = self.signal.domain();
        (hi - lo) / (self.len() - 1) as f64
    }

    pub(crate) fn identity(&self) -> String {
        format!("{}/{}", self.label, self.len())
    }

    pub(crate) fn check_tuple(&self, reference: &str, grid_length: usize) -> Result<()> {
        if reference != self.label || grid_length != self.len() {
            return Err(ScdtError::ReferenceMismatch {
                expected: self.identity(),
                found: format!("{reference}/{grid_length}"),
            });
        }
        Ok(())
    }

    /// `L²(s0)` norm of a tabulated function.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// A nondecreasing map tabulated on the reference grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransportMap {
    values: Vec<f64>,
}

impl TransportMap {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScdtError::invalid_at("non-finite transport map value", i));
        }
        let margin = monotone_margin(&values);
        if margin < -MONOTONE_TOL * value_scale(&values) {
            let i = values.windows(2).position(|w| w[1] < w[0]).unwrap_or(0);
            return Err(ScdtError::invalid_at(
                format!("transport map decreases by {}", -margin),
                i + 1,
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `min_i (T[i+1] - T[i])`; negative when the map decreases somewhere.
    pub fn monotone_margin(&self) -> f64 {
        monotone_margin(&self.values)
    }
}

pub(crate) fn monotone_margin(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn value_scale(values: &[f64]) -> f64 {
    let (lo, hi) = min_max(values);
    (hi - lo).abs().max(1.0)
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// CDT of a nonnegative signal: `s* = F†_s ∘ F_{s0}` on the reference grid.
///
/// The input is normalized internally.
pub fn cdt_forward(s: &Signal, reference: &Reference) -> Result<TransportMap> {
    let f = cdf(s)?;
    let values = reference
        .levels()
        .iter()
        .map(|&u| f.quantile(u))
        .collect::<Result<Vec<_>>>()?;
    TransportMap::new(values)
}

/// Monotone piecewise-cubic interpolant of a map tabulated on increasing levels.
///
/// Node slopes follow Fritsch and Carlson, so a cell that jumps across a
/// support gap keeps its mass near its two ends instead of spreading it
/// uniformly over the gap. Affine maps are reproduced exactly.
struct MonotoneMap<'a> {
    levels: &'a [f64],
    map: &'a [f64],
    slopes: Option<Vec<f64>>,
}

impl<'a> MonotoneMap<'a> {
    fn new(levels: &'a [f64], map: &'a [f64]) -> Self {
        let n = map.len();
        let h: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
        if n < 3 || h.iter().any(|&h| !(h > 0.0)) {
            return Self { levels, map, slopes: None };
        }
        let delta: Vec<f64> = map.windows(2).zip(&h).map(|(w, h)| (w[1] - w[0]) / h).collect();
        let edge = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if d * d0 <= 0.0 {
                0.0
            } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                d
            }
        };
        let mut slopes = vec![0.0; n];
        slopes[0] = edge(h[0], h[1], delta[0], delta[1]);
        slopes[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        for k in 1..n - 1 {
            let (d0, d1) = (delta[k - 1], delta[k]);
            if d0 > 0.0 && d1 > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        Self { levels, map, slopes: Some(slopes) }
    }

    /// `T` at fraction `t` of cell `j − 1 .. j`.
    fn eval_cell(&self, j: usize, t: f64, slopes: &[f64]) -> f64 {
        let h = self.levels[j] - self.levels[j - 1];
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.map[j - 1]
            + (t3 - 2.0 * t2 + t) * h * slopes[j - 1]
            + (-2.0 * t3 + 3.0 * t2) * self.map[j]
            + (t3 - t2) * h * slopes[j]
    }

    /// Pushed CDF `level(T†(y))`, left-continuous in `y`.
    fn cdf(&self, y: f64) -> f64 {
        let (levels, map) = (self.levels, self.map);
        let j = map.partition_point(|&t| t < y);
        if j == 0 {
            return 0.0;
        }
        if j >= map.len() {
            return 1.0;
        }
        let (t0, t1) = (map[j - 1], map[j]);
        let frac = match &self.slopes {
            None => (y - t0) / (t1 - t0),
            Some(slopes) => {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval_cell(j, mid, slopes) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        levels[j - 1] + (levels[j] - levels[j - 1]) * frac
    }
}

/// Unit-mass density `T♯ s0` on a uniform grid over `[min T, max T]`.
pub fn pushforward(map: &TransportMap, reference: &Reference, out_resolution: usize) -> Result<Signal> {
    pushforward_values(map.values(), reference, out_resolution)
}

fn is_degenerate(lo: f64, hi: f64) -> bool {
    !(hi - lo > 1e-12 * lo.abs().max(hi.abs()).max(1.0))
}

pub(crate) fn pushforward_values(
    map: &[f64],
    reference: &Reference,
    out_resolution: usize,
) -> Result<Signal> {
    if map.len() != reference.len() {
        return Err(ScdtError::ReferenceMismatch {
            expected: reference.identity(),
            found: format!("map of length {}", map.len()),
        });
    }
    let n = out_resolution.max(2);
    let (lo, hi) = min_max(map);
    if is_degenerate(lo, hi) {
        return Err(ScdtError::AtomicPushforward);
    }
    let grid = uniform_grid(lo, hi, n);
    let interp = MonotoneMap::new(reference.levels(), map);
    let mut cum: Vec<f64> = grid.iter().map(|&y| interp.cdf(y)).collect();
    cum[0] = 0.0;
    cum[n - 1] = 1.0;
    let mut density = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b) = match k {
            0 => (0, 1),
            k if k == n - 1 => (n - 2, n - 1),
            k => (k - 1, k + 1),
        };
        density.push((cum[b] - cum[a]) / (grid[b] - grid[a]));
    }
    Signal::new(grid, density)
}

/// Like [`pushforward_values`], but a (near) constant map becomes a unit-mass
/// triangle one reference cell wide instead of an error.
pub(crate) fn pushforward_or_bump(
    map: &[f64],
    reference: &Reference,
    out_resolution: usize,
) -> Result<Signal> {
    match pushforward_values(map, reference, out_resolution) {
        Err(ScdtError::AtomicPushforward) => {
            let (lo, hi) = min_max(map);
            let c = 0.5 * (lo + hi);
            let h = reference.cell_width();
            Signal::new(vec![c - h, c, c + h], vec![0.0, 1.0 / h, 0.0])
        }
        other => other,
    }
}

/// Signed CDT `((s⁺)*, ‖s⁺‖, (s⁻)*, ‖s⁻‖)`; zero parts map to `(None, 0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScdtFile", into = "RawScdtFile")]
pub struct Scdt {
    reference: String,
    grid_length: usize,
    f_plus: Option<TransportMap>,
    a: f64,
    f_minus: Option<TransportMap>,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawScdtFile {
    reference: String,
    grid_length: usize,
    f_plus: Option<Vec<f64>>,
    a: f64,
    f_minus: Option<Vec<f64>>,
    b: f64,
}

impl TryFrom<RawScdtFile> for Scdt {
    type Error = ScdtError;

    fn try_from(raw: RawScdtFile) -> Result<Self> {
        let plus = raw.f_plus.map(TransportMap::new).transpose()?;
        let minus = raw.f_minus.map(TransportMap::new).transpose()?;
        Scdt::from_parts(raw.reference, raw.grid_length, plus, raw.a, minus, raw.b)
    }
}

impl From<Scdt> for RawScdtFile {
    fn from(t: Scdt) -> Self {
        RawScdtFile {
            reference: t.reference,
            grid_length: t.grid_length,
            f_plus: t.f_plus.map(TransportMap::into_values),
            a: t.a,
            f_minus: t.f_minus.map(TransportMap::into_values),
            b: t.b,
        }
    }
}

impl Scdt {
    pub fn new(
        reference: &Reference,
        f_plus: Option<TransportMap>,
        a: f64,
        f_minus: Option<TransportMap>,
        b: f64,
    ) -> Result<Self> {
        Self::from_parts(
            reference.label().to_string(),
            reference.len(),
            f_plus,
            a,
            f_minus,
            b,
        )
    }

    fn from_parts(
        reference: String,
        grid_length: usize,
        f_plus: Option<TransportMap>,
        a: f64,
        f_minus: Option<TransportMap>,
        b: f64,
    ) -> Result<Self> {
        for (name, map, mass) in [("plus", &f_plus, a), ("minus", &f_minus, b)] {
            if !(mass >= 0.0) || !mass.is_finite() {
                return Err(ScdtError::invalid(format!(
                    "{name} mass must be finite and nonnegative, got {mass}"
                )));
            }
            match map {
                Some(m) if mass == 0.0 => {
                    let _ = m;
                    return Err(ScdtError::invalid(format!(
                        "{name} map present but its mass is 0"
                    )));
                }
                None if mass > 0.0 => {
                    return Err(ScdtError::invalid(format!(
                        "{name} mass is {mass} but its map is zero"
                    )));
                }
                Some(m) if m.len() != grid_length => {
                    return Err(ScdtError::invalid(format!(
                        "{name} map has {} samples, expected {grid_length}",
                        m.len()
                    )));
                }
                _ => {}
            }
        }
        Ok(Self {
            reference,
            grid_length,
            f_plus,
            a,
            f_minus,
            b,
        })
    }

    pub fn zero(reference: &Reference) -> Self {
        Self {
            reference: reference.label().to_string(),
            grid_length: reference.len(),
            f_plus: None,
            a: 0.0,
            f_minus: None,
            b: 0.0,
        }
    }

    pub fn reference(&self) -> &str {
        &self.reference
    }

    pub fn grid_length(&self) -> usize {
        self.grid_length
    }

    pub fn f_plus(&self) -> Option<&TransportMap> {
        self.f_plus.as_ref()
    }

    pub fn f_minus(&self) -> Option<&TransportMap> {
        self.f_minus.as_ref()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn is_zero(&self) -> bool {
        self.f_plus.is_none() && self.f_minus.is_none()
    }

    pub fn to_raw(&self) -> RawScdt {
        RawScdt {
            reference: self.reference.clone(),
            grid_length: self.grid_length,
            f_plus: self.f_plus.as_ref().map(|m| m.values().to_vec()),
            a: self.a,
            f_minus: self.f_minus.as_ref().map(|m| m.values().to_vec()),
            b: self.b,
        }
    }
}

/// A tuple in the ambient space `(L²(s0) × ℝ)²` that need not be a valid SCDT.
///
/// Produced by convex combinations and subspace projections. `None` blocks are
/// the zero function.
#[derive(Clone, Debug, PartialEq)]
pub struct RawScdt {
    pub reference: String,
    pub grid_length: usize,
    pub f_plus: Option<Vec<f64>>,
    pub a: f64,
    pub f_minus: Option<Vec<f64>>,
    pub b: f64,
}

fn lerp_block(x: &Option<Vec<f64>>, y: &Option<Vec<f64>>, alpha: f64, n: usize) -> Option<Vec<f64>> {
    match (x, y) {
        (None, None) => None,
        _ => {
            let zero = vec![0.0; n];
            let xv = x.as_ref().unwrap_or(&zero);
            let yv = y.as_ref().unwrap_or(&zero);
            Some(
                xv.iter()
                    .zip(yv)
                    .map(|(p, q)| (1.0 - alpha) * p + alpha * q)
                    .collect(),
            )
        }
    }
}

impl RawScdt {
    /// `(1 - α) self + α other`, componentwise.
    pub fn lerp(&self, other: &RawScdt, alpha: f64) -> Result<RawScdt> {
        if self.reference != other.reference || self.grid_length != other.grid_length {
            return Err(ScdtError::ReferenceMismatch {
                expected: format!("{}/{}", self.reference, self.grid_length),
                found: format!("{}/{}", other.reference, other.grid_length),
            });
        }
        let n = self.grid_length;
        Ok(RawScdt {
            reference: self.reference.clone(),
            grid_length: n,
            f_plus: lerp_block(&self.f_plus, &other.f_plus, alpha, n),
            a: (1.0 - alpha) * self.a + alpha * other.a,
            f_minus: lerp_block(&self.f_minus, &other.f_minus, alpha, n),
            b: (1.0 - alpha) * self.b + alpha * other.b,
        })
    }

    /// Repairs the tuple into a valid [`Scdt`]: maps are sorted (monotone
    /// rearrangement), negative masses clipped to 0, zero-mass parts dropped.
    pub fn rearranged(&self, reference: &Reference) -> Result<(Scdt, Rearrangement)> {
        reference.check_tuple(&self.reference, self.grid_length)?;
        let mut report = Rearrangement::default();
        let fix = |map: &Option<Vec<f64>>, mass: f64, dist: &mut f64, clipped: &mut bool| {
            if mass < 0.0 {
                *clipped = true;
            }
            let mass = mass.max(0.0);
            match map {
                Some(m) if mass > 0.0 => {
                    let mut sorted = m.clone();
                    sorted.sort_by(f64::total_cmp);
                    let diff: Vec<f64> = sorted.iter().zip(m).map(|(s, v)| s - v).collect();
                    *dist = reference.l2_norm(&diff);
                    Ok((Some(TransportMap::new(sorted)?), mass))
                }
                _ => Ok::<_, ScdtError>((None, 0.0)),
            }
        };
        let (plus, a) = fix(&self.f_plus, self.a, &mut report.plus_distance, &mut report.clipped_plus_mass)?;
        let (minus, b) = fix(&self.f_minus, self.b, &mut report.minus_distance, &mut report.clipped_minus_mass)?;
        let t = Scdt::from_parts(self.reference.clone(), self.grid_length, plus, a, minus, b)?;
        Ok((t, report))
    }
}

/// What [`RawScdt::rearranged`] had to change.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rearrangement {
    /// `L²(s0)` distance between each map and its sorted version.
    pub plus_distance: f64,
    pub minus_distance: f64,
    pub clipped_plus_mass: bool,
    pub clipped_minus_mass: bool,
}

/// Signed CDT of an arbitrary signal.
pub fn scdt_forward(s: &Signal, reference: &Reference) -> Scdt {
    let (plus, minus) = jordan_decompose(s);
    let part = |p: &crate::signal::SignalPart| {
        if p.is_zero() {
            (None, 0.0)
        } else {
            let map = cdt_forward(&p.signal, reference).expect("nonzero Jordan part has a CDT");
            (Some(map), p.mass)
        }
    };
    let (f_plus, a) = part(&plus);
    let (f_minus, b) = part(&minus);
    Scdt {
        reference: reference.label().to_string(),
        grid_length: reference.len(),
        f_plus,
        a,
        f_minus,
        b,
    }
}

/// `a·plus − b·minus` on one uniform grid spanning both supports.
///
/// With `singular` set the parts are known to live on disjoint sets, so where
/// both discretized pushforwards are positive the smaller one is leakage from
/// interpolating a map across a gap; the dominant part is kept unchanged
/// instead of being eroded by the subtraction.
pub(crate) fn combine_parts(
    plus: Option<(Signal, f64)>,
    minus: Option<(Signal, f64)>,
    n: usize,
    reference: &Reference,
    singular: bool,
) -> Result<Signal> {
    let parts: Vec<(Signal, f64)> = [plus, minus.map(|(s, m)| (s, -m))]
        .into_iter()
        .flatten()
        .collect();
    if parts.is_empty() {
        return Signal::zeros(reference.grid().to_vec());
    }
    let lo = parts.iter().map(|(s, _)| s.domain().0).fold(f64::INFINITY, f64::min);
    let hi = parts.iter().map(|(s, _)| s.domain().1).fold(f64::NEG_INFINITY, f64::max);
    let grid = uniform_grid(lo, hi, n.max(2));
    let sampled: Vec<Vec<f64>> = parts
        .iter()
        .map(|(s, mass)| s.eval_sorted(&grid).into_iter().map(|d| mass * d).collect())
        .collect();
    let values = match sampled.as_slice() {
        [only] => only.clone(),
        [p, m] if singular => p
            .iter()
            .zip(m)
            .map(|(&p, &m)| if p >= -m { p } else { m })
            .collect(),
        [p, m] => p.iter().zip(m).map(|(p, m)| p + m).collect(),
        _ => unreachable!(),
    };
    Signal::new(grid, values)
}

/// Inverse SCDT: `a (f⁺)♯s0 − b (f⁻)♯s0` on a common uniform grid.
pub fn scdt_inverse(t: &Scdt, reference: &Reference, out_resolution: usize) -> Result<Signal> {
    reference.check_tuple(&t.reference, t.grid_length)?;
    let part = |map: Option<&TransportMap>, mass: f64| -> Result<Option<(Signal, f64)>> {
        match map {
            Some(m) => Ok(Some((
                pushforward_or_bump(m.values(), reference, out_resolution)?,
                mass,
            ))),
            None => Ok(None),
        }
    };
    let singular = validate_scdt(t, reference, DEFAULT_OVERLAP_RTOL)?.in_embedding_space;
    combine_parts(
        part(t.f_plus(), t.a)?,
        part(t.f_minus(), t.b)?,
        out_resolution,
        reference,
        singular,
    )
}

/// Transform of `λ g′ s∘g` from the transform of `s`: maps become `g⁻¹ ∘ f`.
pub fn compose_warp(t: &Scdt, w: &Warp) -> Result<Scdt> {
    let apply = |m: &Option<TransportMap>| -> Result<Option<TransportMap>> {
        match m {
            None => Ok(None),
            Some(m) => {
                let values = m
                    .values()
                    .iter()
                    .map(|&v| w.inverse(v))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(TransportMap::new(values)?))
            }
        }
    };
    Scdt::from_parts(
        t.reference.clone(),
        t.grid_length,
        apply(&t.f_plus)?,
        t.a * w.scale(),
        apply(&t.f_minus)?,
        t.b * w.scale(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// `min_i (f[i+1] - f[i])` for each present map.
    pub plus_margin: Option<f64>,
    pub minus_margin: Option<f64>,
    pub monotone: bool,
    pub masses_nonnegative: bool,
    /// `∫ min(a f⁺♯s0, b f⁻♯s0)`; `None` when a part is zero.
    pub overlap: Option<f64>,
    /// Overlap allowed, already multiplied by `min(a, b)`.
    pub overlap_allowed: f64,
    pub in_embedding_space: bool,
}

/// Right-continuous CDF of the pushforward of the level measure by a sorted map.
fn pushed_cdf_right(levels: &[f64], map: &[f64], y: f64) -> f64 {
    let j = map.partition_point(|&t| t <= y);
    if j == 0 {
        return 0.0;
    }
    if j >= map.len() {
        return 1.0;
    }
    let (t0, t1) = (map[j - 1], map[j]);
    levels[j - 1] + (levels[j] - levels[j - 1]) * (y - t0) / (t1 - t0)
}

/// `∫ min(a f♯s0, b g♯s0)` for sorted maps, exact for maps linear between levels.
pub(crate) fn overlap_mass(levels: &[f64], f: &[f64], a: f64, g: &[f64], b: f64) -> f64 {
    let mut knots: Vec<f64> = f.iter().chain(g).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut prev_f = 0.0;
    let mut prev_g = 0.0;
    let mut total = 0.0;
    for &y in &knots {
        let cf = pushed_cdf_right(levels, f, y);
        let cg = pushed_cdf_right(levels, g, y);
        total += (a * (cf - prev_f)).min(b * (cg - prev_g)).max(0.0);
        prev_f = cf;
        prev_g = cg;
    }
    total
}

/// Membership test for the SCDT image: monotone maps, nonnegative masses and
/// mutually singular pushforwards (overlap at most `tol · min(a, b)`).
pub fn validate_scdt(t: &Scdt, reference: &Reference, tol: f64) -> Result<ValidityReport> {
    validate_raw(&t.to_raw(), reference, tol)
}

pub fn validate_raw(t: &RawScdt, reference: &Reference, tol: f64) -> Result<ValidityReport> {
    reference.check_tuple(&t.reference, t.grid_length)?;
    let margin = |m: &Option<Vec<f64>>| m.as_ref().map(|v| monotone_margin(v));
    let plus_margin = margin(&t.f_plus);
    let minus_margin = margin(&t.f_minus);
    let ok = |m: Option<f64>, v: &Option<Vec<f64>>| match (m, v) {
        (Some(m), Some(v)) => m >= -MONOTONE_TOL * value_scale(v),
        _ => true,
    };
    let monotone = ok(plus_margin, &t.f_plus) && ok(minus_margin, &t.f_minus);
    let masses_nonnegative = t.a >= 0.0 && t.b >= 0.0;
    let (overlap, overlap_allowed) = match (&t.f_plus, &t.f_minus) {
        (Some(f), Some(g)) if t.a > 0.0 && t.b > 0.0 => {
            let mut fs = f.clone();
            let mut gs = g.clone();
            fs.sort_by(f64::total_cmp);
            gs.sort_by(f64::total_cmp);
            let ov = overlap_mass(reference.levels(), &fs, t.a, &gs, t.b);
            (Some(ov), tol * t.a.min(t.b))
        }
        _ => (None, 0.0),
    };
    let singular = overlap.is_none_or(|ov| ov <= overlap_allowed);
    Ok(ValidityReport {
        plus_margin,
        minus_margin,
        monotone,
        masses_nonnegative,
        overlap,
        overlap_allowed,
        in_embedding_space: monotone && masses_nonnegative && singular,
    })
}

/// Flat coordinates whose Euclidean geometry is that of `(L²(s0) × ℝ)²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub coords: Vec<f64>,
    pub reference: String,
    pub grid_length: usize,
}

impl EmbeddingVector {
    pub fn distance(&self, other: &EmbeddingVector) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Inverse of [`flatten_raw`].
    pub fn to_raw(&self, reference: &Reference) -> Result<RawScdt> {
        reference.check_tuple(&self.reference, self.grid_length)?;
        let n = self.grid_length;
        if self.coords.len() != 2 * n + 2 {
            return Err(ScdtError::invalid(format!(
                "embedding vector has {} coordinates, expected {}",
                self.coords.len(),
                2 * n + 2
            )));
        }
        let sw = reference.sqrt_weights();
        let block = |range: std::ops::Range<usize>, mass: f64| {
            let c = &self.coords[range];
            if mass == 0.0 && c.iter().all(|&v| v == 0.0) {
                None
            } else {
                Some(c.iter().zip(sw).map(|(v, w)| v / w).collect())
            }
        };
        let a = self.coords[n];
        let b = self.coords[2 * n + 1];
        Ok(RawScdt {
            reference: self.reference.clone(),
            grid_length: n,
            f_plus: block(0..n, a),
            a,
            f_minus: block(n + 1..2 * n + 1, b),
            b,
        })
    }
}

/// `[f⁺ √w, a, f⁻ √w, b]` with `w_i = s0(x_i) Δx_i`; zero maps give zero blocks.
pub fn flatten(t: &Scdt, reference: &Reference) -> Result<EmbeddingVector> {
    flatten_raw(&t.to_raw(), reference)
}

pub fn flatten_raw(t: &RawScdt, reference: &Reference) -> Result<EmbeddingVector> {
    reference.check_tuple(&t.reference, t.grid_length)?;
    let n = t.grid_length;
    let sw = reference.sqrt_weights();
    let mut coords = Vec::with_capacity(2 * n + 2);
    for (map, mass) in [(&t.f_plus, t.a), (&t.f_minus, t.b)] {
        match map {
            Some(m) => coords.extend(m.iter().zip(sw).map(|(v, w)| v * w)),
            None => coords.extend(std::iter::repeat_n(0.0, n)),
        }
        coords.push(mass);
    }
    Ok(EmbeddingVector {
        coords,
        reference: t.reference.clone(),
        grid_length: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Warp;
    use std::f64::consts::PI;

    fn unit_ref() -> Reference {
        Reference::default()
    }

    fn step(grid: Vec<f64>, f: impl Fn(f64) -> bool) -> Signal {
        Signal::from_fn(grid, |t| if f(t) { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn upper_quantile_jumps_over_gaps() {
        let s = Signal::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let f = cdf(&s).unwrap();
        assert_eq!(f.quantile(0.5).unwrap(), 1.0);
        assert_eq!(f.quantile_upper(0.5).unwrap(), 2.0);
        assert_eq!(f.quantile_upper(0.0).unwrap(), 0.0);
        let u = 0.3;
        assert!((f.quantile(u).unwrap() - f.quantile_upper(u).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn cdf_of_uniforms() {
        let f = cdf(&Signal::from_fn(uniform_grid(0.0, 1.0, 101), |_| 1.0).unwrap()).unwrap();
        for (&t, &v) in f.grid().iter().zip(f.values()) {
            assert!((t - v).abs() < 1e-12);
        }
        let f = cdf(&Signal::from_fn(uniform_grid(2.0, 3.0, 101), |_| 1.0).unwrap()).unwrap();
        assert!((f.eval(2.3) - 0.3).abs() < 1e-12);
        let tri = Signal::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(cdf(&tri).unwrap().values()[1], 0.5);
        assert!(matches!(
            cdf(&Signal::zeros(vec![0.0, 1.0]).unwrap()),
            Err(ScdtError::EmptyDistribution)
        ));
    }

    #[test]
    fn quantile_examples() {
        let f = cdf(&Signal::from_fn(uniform_grid(0.0, 1.0, 101), |_| 1.0).unwrap()).unwrap();
        assert!((f.quantile(0.25).unwrap() - 0.25).abs() < 1e-12);
        let g = cdf(&Signal::from_fn(uniform_grid(2.0, 3.0, 11), |_| 1.0).unwrap()).unwrap();
        assert_eq!(g.quantile(1.0).unwrap(), 3.0);
        let flat = Cdf {
            grid: vec![0.0, 0.4, 0.6, 1.0],
            values: vec![0.0, 0.5, 0.5, 1.0],
            density: None,
        };
        assert_eq!(flat.quantile(0.5).unwrap(), 0.4);
        assert!(flat.quantile(1.5).is_err());
        assert!(flat.quantile(-0.1).is_err());
    }

    #[test]
    fn quantile_at_zero_is_support_start() {
        let s = step(uniform_grid(0.0, 1.0, 11), |t| t > 0.45);
        let f = cdf(&s).unwrap();
        assert!((f.quantile(0.0).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn cdt_of_uniforms_is_affine() {
        let r = unit_ref();
        let id = cdt_forward(&Signal::from_fn(uniform_grid(0.0, 1.0, 1000), |_| 1.0).unwrap(), &r).unwrap();
        for (x, v) in r.grid().iter().zip(id.values()) {
            assert!((x - v).abs() < 1e-12);
        }
        let ab = cdt_forward(&Signal::from_fn(uniform_grid(-1.0, 2.0, 500), |_| 4.0).unwrap(), &r).unwrap();
        for (x, v) in r.grid().iter().zip(ab.values()) {
            assert!((-1.0 + 3.0 * x - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cdt_of_upper_half_step() {
        let r = unit_ref();
        let s = step(uniform_grid(0.0, 1.0, 1000), |t| t > 0.5);
        let m = cdt_forward(&s, &r).unwrap();
        let err: Vec<f64> = r
            .grid()
            .iter()
            .zip(m.values())
            .map(|(x, v)| v - (0.5 + 0.5 * x))
            .collect();
        assert!(r.l2_norm(&err) < 2e-3);
    }

    #[test]
    fn cdt_rejects_negative_and_empty() {
        let r = unit_ref();
        assert!(cdt_forward(&Signal::new(vec![0.0, 1.0], vec![1.0, -1.0]).unwrap(), &r).is_err());
        assert!(matches!(
            cdt_forward(&Signal::zeros(vec![0.0, 1.0]).unwrap(), &r),
            Err(ScdtError::EmptyDistribution)
        ));
    }

    #[test]
    fn pushforward_examples() {
        let r = unit_ref();
        let doubled = TransportMap::new(r.grid().iter().map(|x| 2.0 * x).collect()).unwrap();
        let p = pushforward(&doubled, &r, 500).unwrap();
        assert_eq!(p.domain(), (0.0, 2.0));
        assert!(p.values().iter().all(|v| (v - 0.5).abs() < 1e-9));

        let half = TransportMap::new(r.grid().iter().map(|x| 0.5 + 0.5 * x).collect()).unwrap();
        let p = pushforward(&half, &r, 500).unwrap();
        assert!(p.values().iter().all(|v| (v - 2.0).abs() < 1e-9));
        assert!((l1_norm(&p) - 1.0).abs() < 1e-12);

        let id = TransportMap::new(r.grid().to_vec()).unwrap();
        let p = pushforward(&id, &r, 1000).unwrap();
        let diff = p
            .values()
            .iter()
            .zip(r.signal().values())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 1000.0;
        assert!(diff < 1e-6);

        let constant = TransportMap::new(vec![0.3; r.len()]).unwrap();
        assert!(matches!(
            pushforward(&constant, &r, 100),
            Err(ScdtError::AtomicPushforward)
        ));
    }

    #[test]
    fn scdt_of_zero_and_nonnegative() {
        let r = unit_ref();
        let z = scdt_forward(&Signal::zeros(uniform_grid(0.0, 1.0, 50)).unwrap(), &r);
        assert!(z.is_zero() && z.a() == 0.0 && z.b() == 0.0);
        let pos = scdt_forward(&Signal::from_fn(uniform_grid(0.0, 1.0, 50), |t| 1.0 + t).unwrap(), &r);
        assert!(pos.f_minus().is_none() && pos.b() == 0.0);
        assert!((pos.a() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn scdt_of_half_steps() {
        let r = unit_ref();
        let grid = uniform_grid(0.0, 1.0, 1000);
        let s = Signal::from_fn(grid, |t| if t > 0.5 { 1.0 } else { -1.0 }).unwrap();
        let t = scdt_forward(&s, &r);
        assert!((t.a() - 0.5).abs() < 1e-3 && (t.b() - 0.5).abs() < 1e-3);
        let ep: Vec<f64> = r.grid().iter().zip(t.f_plus().unwrap().values()).map(|(x, v)| v - 0.5 - 0.5 * x).collect();
        let em: Vec<f64> = r.grid().iter().zip(t.f_minus().unwrap().values()).map(|(x, v)| v - 0.5 * x).collect();
        assert!(r.l2_norm(&ep) < 2e-3 && r.l2_norm(&em) < 2e-3);
    }

    #[test]
    fn inverse_examples() {
        let r = unit_ref();
        let id = Scdt::new(&r, Some(TransportMap::new(r.grid().to_vec()).unwrap()), 1.0, None, 0.0).unwrap();
        let s = scdt_inverse(&id, &r, 1000).unwrap();
        assert!(s.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
        let z = scdt_inverse(&Scdt::zero(&r), &r, 1000).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn malformed_pairing_is_rejected() {
        let r = unit_ref();
        assert!(Scdt::new(&r, None, 0.5, None, 0.0).is_err());
        let m = TransportMap::new(r.grid().to_vec()).unwrap();
        assert!(Scdt::new(&r, Some(m), 0.0, None, 0.0).is_err());
        let json = r#"{"reference":"uniform[0,1]","grid_length":1000,"f_plus":null,"a":1.0,"f_minus":null,"b":0.0}"#;
        assert!(serde_json::from_str::<Scdt>(json).is_err());
    }

    #[test]
    fn round_trip_sine() {
        let r = unit_ref();
        let s = Signal::from_fn(uniform_grid(0.0, 1.0, 1000), |t| (2.0 * PI * t).sin()).unwrap();
        let back = scdt_inverse(&scdt_forward(&s, &r), &r, 1000).unwrap();
        let err = back
            .grid()
            .iter()
            .zip(back.values())
            .map(|(&t, v)| (v - s.eval(t)).abs())
            .sum::<f64>()
            / 999.0;
        assert!(err / l1_norm(&s) < 1e-2, "relative error {}", err / l1_norm(&s));
    }

    #[test]
    fn compose_warp_affine_and_identity() {
        let r = unit_ref();
        let s = Signal::from_fn(uniform_grid(0.0, 1.0, 1000), |t| (2.0 * PI * t).sin()).unwrap();
        let t = scdt_forward(&s, &r);
        assert_eq!(compose_warp(&t, &Warp::identity()).unwrap(), t);
        let g = Warp::affine(2.0, 0.5).unwrap();
        let c = compose_warp(&t, &g).unwrap();
        for (v, w) in t.f_plus().unwrap().values().iter().zip(c.f_plus().unwrap().values()) {
            assert!(((v - 0.5) / 2.0 - w).abs() < 1e-15);
        }
        assert_eq!(c.a(), t.a());
    }

    #[test]
    fn validity_examples() {
        let r = unit_ref();
        let id = Scdt::new(&r, Some(TransportMap::new(r.grid().to_vec()).unwrap()), 1.0, None, 0.0).unwrap();
        let rep = validate_scdt(&id, &r, DEFAULT_OVERLAP_RTOL).unwrap();
        assert!(rep.in_embedding_space && rep.overlap.is_none());

        let s = Signal::from_fn(uniform_grid(0.0, 1.0, 1000), |t| (2.0 * PI * t).sin()).unwrap();
        let rep = validate_scdt(&scdt_forward(&s, &r), &r, DEFAULT_OVERLAP_RTOL).unwrap();
        assert!(rep.in_embedding_space, "{rep:?}");

        // Identical maps overlap completely.
        let m = TransportMap::new(r.grid().to_vec()).unwrap();
        let both = Scdt::new(&r, Some(m.clone()), 1.0, Some(m), 1.0).unwrap();
        let rep = validate_scdt(&both, &r, DEFAULT_OVERLAP_RTOL).unwrap();
        assert!((rep.overlap.unwrap() - 1.0).abs() < 1e-9);
        assert!(!rep.in_embedding_space);
    }

    #[test]
    fn overlap_of_disjoint_uniforms_is_zero() {
        let r = unit_ref();
        let lower: Vec<f64> = r.grid().iter().map(|x| 0.5 * x).collect();
        let upper: Vec<f64> = r.grid().iter().map(|x| 0.5 + 0.5 * x).collect();
        let ov = overlap_mass(r.levels(), &upper, 1.0, &lower, 2.0);
        assert!(ov.abs() < 1e-12);
        let shifted: Vec<f64> = r.grid().iter().map(|x| 0.25 + 0.5 * x).collect();
        let ov = overlap_mass(r.levels(), &upper, 1.0, &shifted, 1.0);
        assert!((ov - 0.5).abs() < 1e-9);
    }

    #[test]
    fn flatten_matches_weighted_norm() {
        let r = unit_ref();
        let s1 = Signal::from_fn(uniform_grid(0.0, 1.0, 700), |t| (2.0 * PI * t).sin()).unwrap();
        let s2 = Signal::from_fn(uniform_grid(-0.5, 1.0, 900), |t| (5.0 * t).cos() + 0.2).unwrap();
        let (t1, t2) = (scdt_forward(&s1, &r), scdt_forward(&s2, &r));
        let (v1, v2) = (flatten(&t1, &r).unwrap(), flatten(&t2, &r).unwrap());
        assert_eq!(v1.distance(&v1), 0.0);
        let zero = flatten(&Scdt::zero(&r), &r).unwrap();
        assert!(zero.coords.iter().all(|&c| c == 0.0));
        let back = v1.to_raw(&r).unwrap();
        for (x, y) in back.f_plus.unwrap().iter().zip(t1.f_plus().unwrap().values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let other = Reference::uniform(0.0, 2.0, 1000).unwrap();
        assert!(flatten(&t1, &other).is_err());
        assert!(v2.distance(&v1) > 0.0);
    }
}
