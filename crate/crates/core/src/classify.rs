//! Nearest-subspace (NS) and nearest-local-subspace (NLS) classifiers on
//! flattened signed-CDT vectors, with projections mapped back to signals.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdtError};
use crate::geodesy::{geodesic_path, PathPointSet};
use crate::io::LabeledDataset;
use crate::signal::Signal;
use crate::transform::{
    flatten, scdt_forward, scdt_inverse, validate_raw, EmbeddingVector, RawScdt, Rearrangement,
    Reference, Scdt, ValidityReport, DEFAULT_OVERLAP_RTOL,
};

pub const DEFAULT_NLS_K: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ns,
    Nls,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ns => "ns",
            Method::Nls => "nls",
        })
    }
}

impl FromStr for Method {
    type Err = ScdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ns" => Ok(Method::Ns),
            "nls" => Ok(Method::Nls),
            other => Err(ScdtError::Unknown {
                kind: "method",
                name: other.to_string(),
            }),
        }
    }
}

/// Singular values at or below `rel_tol × σ_max` are dropped from a basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub rel_tol: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        Self { rel_tol: 1e-8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub method: Method,
    pub rank_policy: RankPolicy,
    pub nls_k: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            method: Method::Ns,
            rank_policy: RankPolicy::default(),
            nls_k: DEFAULT_NLS_K,
        }
    }
}

/// One class of a fitted model.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassSubspace {
    pub label: u32,
    pub name: Option<String>,
    /// Orthonormal columns spanning the class (NS only).
    pub basis: DMatrix<f64>,
    /// Flattened training vectors (NLS only).
    pub train: Vec<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceModel {
    pub reference: Reference,
    pub options: FitOptions,
    /// Sorted by label; the position is the class index used for tie-breaks.
    pub classes: Vec<ClassSubspace>,
}

/// Orthonormal basis of the column span, via a thin SVD with a relative cutoff.
pub fn orthonormal_basis(columns: &[DVector<f64>], rank_policy: RankPolicy) -> DMatrix<f64> {
    let dim = columns.first().map_or(0, |c| c.len());
    if columns.is_empty() {
        return DMatrix::zeros(dim, 0);
    }
    let x = DMatrix::from_columns(columns);
    let svd = x.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.max();
    if !(sigma_max > 0.0) {
        return DMatrix::zeros(dim, 0);
    }
    let cutoff = rank_policy.rel_tol * sigma_max;
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cutoff)
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(dim, keep.len(), |r, c| u[(r, keep[c])])
}

fn to_dvector(v: &EmbeddingVector) -> DVector<f64> {
    DVector::from_column_slice(&v.coords)
}

fn embed(s: &Signal, reference: &Reference) -> Result<DVector<f64>> {
    Ok(to_dvector(&flatten(&scdt_forward(s, reference), reference)?))
}

/// Fits one subspace (NS) or stores the local training vectors (NLS) per class.
pub fn fit(train: &LabeledDataset, reference: &Reference, options: FitOptions) -> Result<SubspaceModel> {
    if train.signals.is_empty() {
        return Err(ScdtError::Model("training set is empty".into()));
    }
    if !(options.rank_policy.rel_tol >= 0.0) {
        return Err(ScdtError::invalid("rank cutoff must be nonnegative"));
    }
    let vectors = train
        .signals
        .par_iter()
        .map(|s| embed(s, reference))
        .collect::<Result<Vec<_>>>()?;
    let mut grouped: BTreeMap<u32, Vec<DVector<f64>>> = BTreeMap::new();
    for (v, &label) in vectors.into_iter().zip(&train.labels) {
        grouped.entry(label).or_default().push(v);
    }
    let mut classes = Vec::with_capacity(grouped.len());
    for (label, vecs) in grouped {
        let name = train.class_name(label);
        let class = match options.method {
            Method::Ns => ClassSubspace {
                label,
                name,
                basis: orthonormal_basis(&vecs, options.rank_policy),
                train: Vec::new(),
            },
            Method::Nls => {
                if options.nls_k == 0 || options.nls_k > vecs.len() {
                    return Err(ScdtError::Model(format!(
                        "nls_k = {} but class {label} has {} training samples",
                        options.nls_k,
                        vecs.len()
                    )));
                }
                ClassSubspace {
                    label,
                    name,
                    basis: DMatrix::zeros(vecs[0].len(), 0),
                    train: vecs,
                }
            }
        };
        classes.push(class);
    }
    Ok(SubspaceModel {
        reference: reference.clone(),
        options,
        classes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u32,
    pub class_index: usize,
    /// Class labels in model order.
    pub labels: Vec<u32>,
    /// Per-class score (subspace distance, or path length), in model order.
    pub distances: Vec<f64>,
}

fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &d) in scores.iter().enumerate() {
        if d < scores[best] {
            best = i;
        }
    }
    best
}

fn residual(basis: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    if basis.ncols() == 0 {
        return x.clone();
    }
    let coeffs = basis.transpose() * x;
    x - basis * coeffs
}

impl SubspaceModel {
    pub fn labels(&self) -> Vec<u32> {
        self.classes.iter().map(|c| c.label).collect()
    }

    pub fn class_index(&self, label: u32) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| ScdtError::Unknown {
                kind: "class",
                name: label.to_string(),
            })
    }

    /// Basis of the subspace that class `idx` uses for `x`.
    fn basis_for(&self, idx: usize, x: &DVector<f64>) -> DMatrix<f64> {
        let class = &self.classes[idx];
        match self.options.method {
            Method::Ns => class.basis.clone(),
            Method::Nls => {
                let mut order: Vec<(f64, usize)> = class
                    .train
                    .iter()
                    .enumerate()
                    .map(|(i, v)| ((v - x).norm(), i))
                    .collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let local: Vec<DVector<f64>> = order
                    .iter()
                    .take(self.options.nls_k)
                    .map(|&(_, i)| class.train[i].clone())
                    .collect();
                orthonormal_basis(&local, self.options.rank_policy)
            }
        }
    }

    fn check_ready(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(ScdtError::Model("model has no classes".into()));
        }
        Ok(())
    }

    /// Distance from an embedded sample to each class subspace.
    pub fn distances(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..self.classes.len())
            .map(|i| residual(&self.basis_for(i, x), x).norm())
            .collect()
    }

    pub fn predict(&self, s: &Signal) -> Result<Prediction> {
        self.check_ready()?;
        let x = embed(s, &self.reference)?;
        let distances = self.distances(&x);
        let class_index = argmin(&distances);
        Ok(Prediction {
            label: self.classes[class_index].label,
            class_index,
            labels: self.labels(),
            distances,
        })
    }

    /// Batch prediction; output order matches input order.
    pub fn predict_all(&self, signals: &[Signal]) -> Result<Vec<Prediction>> {
        signals.par_iter().map(|s| self.predict(s)).collect()
    }

    /// Orthogonal projection of `ŝ` onto a class subspace, mapped back to a signal.
    pub fn project(&self, class_label: u32, s: &Signal) -> Result<Projection> {
        self.check_ready()?;
        let idx = self.class_index(class_label)?;
        let x = embed(s, &self.reference)?;
        let basis = self.basis_for(idx, &x);
        let r = residual(&basis, &x);
        let projected = &x - &r;
        let vector = EmbeddingVector {
            coords: projected.as_slice().to_vec(),
            reference: self.reference.label().to_string(),
            grid_length: self.reference.len(),
        };
        let raw = vector.to_raw(&self.reference)?;
        let validity = validate_raw(&raw, &self.reference, DEFAULT_OVERLAP_RTOL)?;
        let (scdt, rearrangement) = raw.rearranged(&self.reference)?;
        let signal = scdt_inverse(&scdt, &self.reference, self.reference.len())?;
        Ok(Projection {
            class_label,
            raw,
            validity,
            rearrangement,
            scdt,
            signal,
            residual: r.norm(),
        })
    }

    /// Path from `s` to its projection onto every class, in model order.
    pub fn class_paths(&self, s: &Signal, alphas: &[f64]) -> Result<Vec<ClassPath>> {
        self.classes
            .iter()
            .map(|c| {
                let projection = self.project(c.label, s)?;
                let path = projection_path_report(s, &projection.signal, &self.reference, alphas)?;
                Ok(ClassPath { projection, path })
            })
            .collect()
    }

    /// Experimental: label by the shortest sampled path to a class projection.
    pub fn predict_by_path_length(&self, s: &Signal, alphas: &[f64]) -> Result<Prediction> {
        self.check_ready()?;
        let paths = self.class_paths(s, alphas)?;
        let distances: Vec<f64> = paths.iter().map(|p| p.path.path.total_length()).collect();
        let class_index = argmin(&distances);
        Ok(Prediction {
            label: self.classes[class_index].label,
            class_index,
            labels: self.labels(),
            distances,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub class_label: u32,
    /// Projected tuple before repair; may be non-monotone or overlapping.
    pub raw: RawScdt,
    pub validity: ValidityReport,
    pub rearrangement: Rearrangement,
    /// Repaired tuple that was inverted.
    pub scdt: Scdt,
    pub signal: Signal,
    /// Embedding distance from the sample to the subspace.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionPath {
    pub path: PathPointSet,
    pub gap_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassPath {
    pub projection: Projection,
    pub path: ProjectionPath,
}

/// Interpolation path between a sample and one of its projections.
pub fn projection_path_report(
    s: &Signal,
    s_tilde: &Signal,
    reference: &Reference,
    alphas: &[f64],
) -> Result<ProjectionPath> {
    let path = geodesic_path(s, s_tilde, alphas, reference)?;
    let gap_ratio = path.gap_ratio();
    Ok(ProjectionPath { path, gap_ratio })
}
