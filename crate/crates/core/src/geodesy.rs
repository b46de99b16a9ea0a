//! Distances in the generalized Wasserstein-2 metric, the interpolation path
//! between two signals in transform space, and diagnostics for whether that
//! path is a geodesic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdtError};
use crate::signal::{jordan_decompose, Signal};
use crate::transform::{
    cdf, cdt_forward, combine_parts, flatten, flatten_raw, pushforward_or_bump, scdt_forward, validate_raw,
    EmbeddingVector, RawScdt, Reference, Scdt, ValidityReport, DEFAULT_OVERLAP_RTOL,
};

/// Path points are sampled at `α = i/4`, `i = 0..=4`, unless told otherwise.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Distances below this are treated as exact zeros by the ratio diagnostics.
pub const DEGENERATE_DISTANCE: f64 = 1e-14;

/// Classic 1-D Wasserstein-2 distance between two nonnegative signals,
/// each normalized to unit mass.
///
/// `‖s1* − s2*‖_{L²(s0)}` after the substitution `u = F_{s0}(x)`, integrated
/// over the reference levels refined by every CDF knot of both signals. The
/// quantiles are smooth between consecutive levels, so a jump across a
/// support gap costs nothing; Simpson's rule handles each piece. Unlike
/// [`ds_distance`] the value does not carry the reference discretization.
pub fn w2(s1: &Signal, s2: &Signal, reference: &Reference) -> Result<f64> {
    let (c1, c2) = (cdf(s1)?, cdf(s2)?);
    let mut levels: Vec<f64> = reference
        .levels()
        .iter()
        .chain(c1.values())
        .chain(c2.values())
        .copied()
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut sq = 0.0;
    for w in levels.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        let d0 = c1.quantile_upper(u0)? - c2.quantile_upper(u0)?;
        let dm = c1.quantile(0.5 * (u0 + u1))? - c2.quantile(0.5 * (u0 + u1))?;
        let d1 = c1.quantile(u1)? - c2.quantile(u1)?;
        sq += (u1 - u0) * (d0 * d0 + 4.0 * dm * dm + d1 * d1) / 6.0;
    }
    Ok(sq.sqrt())
}

/// `W2` from the maps tabulated on the reference grid, the discretization
/// that [`ds_distance`] sees.
fn w2_on_grid(s1: &Signal, s2: &Signal, reference: &Reference) -> Result<f64> {
    let f1 = cdt_forward(s1, reference)?;
    let f2 = cdt_forward(s2, reference)?;
    Ok(weighted_diff(reference, Some(f1.values()), Some(f2.values())).sqrt())
}

/// `‖f − g‖²_{L²(s0)}` with `None` standing for the zero function.
fn weighted_diff(reference: &Reference, f: Option<&[f64]>, g: Option<&[f64]>) -> f64 {
    let w = reference.weights();
    match (f, g) {
        (None, None) => 0.0,
        (Some(f), None) | (None, Some(f)) => w.iter().zip(f).map(|(w, v)| w * v * v).sum(),
        (Some(f), Some(g)) => w
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * (a - b) * (a - b))
            .sum(),
    }
}

/// Norm of the difference of two transforms in `(L²(s0) × ℝ)²`.
pub fn scdt_distance(t1: &Scdt, t2: &Scdt, reference: &Reference) -> Result<f64> {
    for t in [t1, t2] {
        if t.reference() != reference.label() || t.grid_length() != reference.len() {
            return Err(ScdtError::ReferenceMismatch {
                expected: format!("{}/{}", reference.label(), reference.len()),
                found: format!("{}/{}", t.reference(), t.grid_length()),
            });
        }
    }
    let vals = |t: &Scdt| {
        (
            t.f_plus().map(|m| m.values().to_vec()),
            t.f_minus().map(|m| m.values().to_vec()),
        )
    };
    let (p1, m1) = vals(t1);
    let (p2, m2) = vals(t2);
    let sq = weighted_diff(reference, p1.as_deref(), p2.as_deref())
        + weighted_diff(reference, m1.as_deref(), m2.as_deref())
        + (t1.a() - t2.a()).powi(2)
        + (t1.b() - t2.b()).powi(2);
    Ok(sq.sqrt())
}

/// Generalized Wasserstein-2 distance `D_S`, computed as the Euclidean
/// distance between embedding vectors. Defined for zero parts as well.
pub fn ds_distance(s1: &Signal, s2: &Signal, reference: &Reference) -> Result<f64> {
    let v1 = flatten(&scdt_forward(s1, reference), reference)?;
    let v2 = flatten(&scdt_forward(s2, reference), reference)?;
    Ok(v1.distance(&v2))
}

/// The four terms of `D_S²`, computed part by part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBreakdown {
    /// `W2` between the normalized positive parts, when both are nonzero.
    pub plus_w2: Option<f64>,
    pub minus_w2: Option<f64>,
    pub plus_mass_diff: f64,
    pub minus_mass_diff: f64,
    /// Root-sum-square of the four terms; `None` unless every part is nonzero.
    pub partwise: Option<f64>,
    /// `D_S` via the embedding.
    pub total: f64,
}

/// `D_S` plus its part-wise `W2`/mass decomposition where that is defined.
pub fn distance_breakdown(s1: &Signal, s2: &Signal, reference: &Reference) -> Result<DistanceBreakdown> {
    let (p1, m1) = jordan_decompose(s1);
    let (p2, m2) = jordan_decompose(s2);
    let pair_w2 = |x: &crate::signal::SignalPart, y: &crate::signal::SignalPart| {
        if x.is_zero() || y.is_zero() {
            Ok(None)
        } else {
            w2_on_grid(&x.signal, &y.signal, reference).map(Some)
        }
    };
    let plus_w2 = pair_w2(&p1, &p2)?;
    let minus_w2 = pair_w2(&m1, &m2)?;
    let mass = |p: &crate::signal::SignalPart| if p.is_zero() { 0.0 } else { p.mass };
    let plus_mass_diff = mass(&p1) - mass(&p2);
    let minus_mass_diff = mass(&m1) - mass(&m2);
    let partwise = match (plus_w2, minus_w2) {
        (Some(p), Some(m)) => Some((p * p + m * m + plus_mass_diff.powi(2) + minus_mass_diff.powi(2)).sqrt()),
        _ => None,
    };
    Ok(DistanceBreakdown {
        plus_w2,
        minus_w2,
        plus_mass_diff,
        minus_mass_diff,
        partwise,
        total: ds_distance(s1, s2, reference)?,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ScdtError::OutOfRange {
            name: "alpha",
            value: alpha,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Signal whose transform is `(1 − α) t0 + α t1`, each sign part pushed
/// forward separately and subtracted on a common grid.
pub fn path_point_from_tuples(
    t0: &RawScdt,
    t1: &RawScdt,
    alpha: f64,
    reference: &Reference,
    out_resolution: usize,
) -> Result<Signal> {
    Ok(realize(t0, t1, alpha, reference, out_resolution)?.signal)
}

struct Realized {
    signal: Signal,
    /// Transform coordinates of `signal`.
    vector: EmbeddingVector,
    in_image: bool,
}

/// Builds the path point and its transform coordinates. When the mixed tuple
/// lies in the transform image it is the transform of the point, so it is
/// used as is; otherwise the parts cancel where they overlap and the point is
/// transformed again.
fn realize(t0: &RawScdt, t1: &RawScdt, alpha: f64, reference: &Reference, out_resolution: usize) -> Result<Realized> {
    check_alpha(alpha)?;
    let mix = t0.lerp(t1, alpha)?;
    let part = |map: &Option<Vec<f64>>, mass: f64| -> Result<Option<(Signal, f64)>> {
        match map {
            Some(m) if mass > 0.0 => Ok(Some((
                pushforward_or_bump(m, reference, out_resolution)?,
                mass,
            ))),
            _ => Ok(None),
        }
    };
    let in_image = validate_raw(&mix, reference, DEFAULT_OVERLAP_RTOL)?.in_embedding_space;
    let signal = combine_parts(
        part(&mix.f_plus, mix.a)?,
        part(&mix.f_minus, mix.b)?,
        out_resolution,
        reference,
        in_image,
    )?;
    let vector = if in_image {
        flatten_raw(&mix, reference)?
    } else {
        flatten(&scdt_forward(&signal, reference), reference)?
    };
    Ok(Realized {
        signal,
        vector,
        in_image,
    })
}

/// Point `p_α` of the interpolation path between `s` and `s_tilde`.
pub fn path_point(s: &Signal, s_tilde: &Signal, alpha: f64, reference: &Reference) -> Result<Signal> {
    check_alpha(alpha)?;
    let t0 = scdt_forward(s, reference).to_raw();
    let t1 = scdt_forward(s_tilde, reference).to_raw();
    path_point_from_tuples(&t0, &t1, alpha, reference, reference.len())
}

/// Sampled path with its segment and end-to-end distances.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPointSet {
    pub alphas: Vec<f64>,
    pub points: Vec<Signal>,
    /// `D_i = D_S(p_{α_{i−1}}, p_{α_i})`.
    pub segment_distances: Vec<f64>,
    /// `D = D_S(p_0, p_1)`.
    pub endpoint_distance: f64,
    /// Whether the mixed tuple at each `α` lies in the transform image.
    pub in_image: Vec<bool>,
}

impl PathPointSet {
    pub fn total_length(&self) -> f64 {
        self.segment_distances.iter().sum()
    }

    /// `ΣD_i / D`: 1 on a geodesic, larger otherwise. Infinite when `D = 0`
    /// but the path moves, 1 when nothing moves at all.
    pub fn gap_ratio(&self) -> f64 {
        gap_ratio(self.total_length(), self.endpoint_distance)
    }
}

pub fn gap_ratio(length: f64, distance: f64) -> f64 {
    if distance <= DEGENERATE_DISTANCE {
        if length <= DEGENERATE_DISTANCE {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        length / distance
    }
}

/// Checks `alphas` starts at 0, ends at 1 and strictly increases.
pub fn validate_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.len() < 2 {
        return Err(ScdtError::invalid("alpha grid needs at least 2 points"));
    }
    if alphas[0] != 0.0 || alphas[alphas.len() - 1] != 1.0 {
        return Err(ScdtError::invalid("alpha grid must start at 0 and end at 1"));
    }
    if let Some(i) = alphas.windows(2).position(|w| w[1] <= w[0]) {
        return Err(ScdtError::invalid_at("alpha grid is not strictly increasing", i + 1));
    }
    Ok(())
}

/// `n + 1` evenly spaced alphas from 0 to 1.
pub fn alpha_grid(segments: usize) -> Vec<f64> {
    let segments = segments.max(1);
    (0..=segments).map(|i| i as f64 / segments as f64).collect()
}

/// Samples the interpolation path at `alphas` and measures it.
pub fn geodesic_path(
    s: &Signal,
    s_tilde: &Signal,
    alphas: &[f64],
    reference: &Reference,
) -> Result<PathPointSet> {
    validate_alphas(alphas)?;
    let t0 = scdt_forward(s, reference).to_raw();
    let t1 = scdt_forward(s_tilde, reference).to_raw();
    path_from_tuples(&t0, &t1, alphas, reference)
}

pub(crate) fn path_from_tuples(
    t0: &RawScdt,
    t1: &RawScdt,
    alphas: &[f64],
    reference: &Reference,
) -> Result<PathPointSet> {
    validate_alphas(alphas)?;
    let realized = alphas
        .par_iter()
        .map(|&a| realize(t0, t1, a, reference, reference.len()))
        .collect::<Result<Vec<_>>>()?;
    let segment_distances = realized
        .windows(2)
        .map(|w| w[0].vector.distance(&w[1].vector))
        .collect();
    let endpoint_distance = realized[0].vector.distance(&realized[realized.len() - 1].vector);
    let in_image = realized.iter().map(|r| r.in_image).collect();
    Ok(PathPointSet {
        alphas: alphas.to_vec(),
        points: realized.into_iter().map(|r| r.signal).collect(),
        segment_distances,
        endpoint_distance,
        in_image,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    /// `max |D_S(p_α, p_β) − |α − β| D| / D` over the checked pairs.
    pub max_deviation: f64,
    /// `D = D_S(s, s̃)`.
    pub distance: f64,
    /// Set when `D = 0`; the deviation is then reported as 0.
    pub degenerate: bool,
}

/// Measures how far the interpolation path is from constant speed.
pub fn constant_speed_check(
    s: &Signal,
    s_tilde: &Signal,
    reference: &Reference,
    pairs: &[(f64, f64)],
) -> Result<SpeedReport> {
    let t0 = scdt_forward(s, reference);
    let t1 = scdt_forward(s_tilde, reference);
    let distance = flatten(&t0, reference)?.distance(&flatten(&t1, reference)?);
    if distance <= DEGENERATE_DISTANCE {
        return Ok(SpeedReport {
            max_deviation: 0.0,
            distance,
            degenerate: true,
        });
    }
    let (r0, r1) = (t0.to_raw(), t1.to_raw());
    let mut alphas: Vec<f64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    for &a in &alphas {
        check_alpha(a)?;
    }
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let vectors = alphas
        .par_iter()
        .map(|&a| Ok(realize(&r0, &r1, a, reference, reference.len())?.vector))
        .collect::<Result<Vec<_>>>()?;
    let lookup = |a: f64| &vectors[alphas.partition_point(|&x| x < a)];
    let max_deviation = pairs
        .iter()
        .map(|&(a, b)| {
            let d = lookup(a).distance(lookup(b));
            (d - (a - b).abs() * distance).abs() / distance
        })
        .fold(0.0, f64::max);
    Ok(SpeedReport {
        max_deviation,
        distance,
        degenerate: false,
    })
}

/// All `(α, β)` pairs from a grid, including `α = β`.
pub fn pair_grid(alphas: &[f64]) -> Vec<(f64, f64)> {
    alphas
        .iter()
        .flat_map(|&a| alphas.iter().map(move |&b| (a, b)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MidpointVerdict {
    /// The only possible geodesic leaves the transform image: none exists.
    NoGeodesic,
    /// The candidate midpoint is a valid transform. Not a proof of existence.
    CandidateValid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointReport {
    pub verdict: MidpointVerdict,
    pub validity: ValidityReport,
}

/// Tests whether the straight-line midpoint `(ŝ + s̃̂)/2` is itself a transform.
///
/// Any geodesic has to pass through it, so a failure proves that no geodesic
/// joins the two signals.
pub fn geodesic_midpoint_diagnostic(
    s: &Signal,
    s_tilde: &Signal,
    reference: &Reference,
) -> Result<MidpointReport> {
    midpoint_diagnostic_with_tolerance(s, s_tilde, reference, DEFAULT_OVERLAP_RTOL)
}

/// [`geodesic_midpoint_diagnostic`] with an explicit overlap tolerance.
pub fn midpoint_diagnostic_with_tolerance(
    s: &Signal,
    s_tilde: &Signal,
    reference: &Reference,
    overlap_rtol: f64,
) -> Result<MidpointReport> {
    let t0 = scdt_forward(s, reference).to_raw();
    let t1 = scdt_forward(s_tilde, reference).to_raw();
    let mid = t0.lerp(&t1, 0.5)?;
    let validity = validate_raw(&mid, reference, overlap_rtol)?;
    let verdict = if validity.in_embedding_space {
        MidpointVerdict::CandidateValid
    } else {
        MidpointVerdict::NoGeodesic
    };
    Ok(MidpointReport { verdict, validity })
}
