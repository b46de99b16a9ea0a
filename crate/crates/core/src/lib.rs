//! Signed cumulative distribution transform for signed 1-D signals, with
//! geodesic path diagnostics, subspace classifiers and synthetic data.
//!
//! Signals are piecewise linear on their sample grid and zero outside it.
//! A signal is split into positive and negative parts, each part is
//! normalized and mapped through its transport map onto a fixed reference
//! density, and the masses are kept alongside the maps.

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod datagen;
pub mod error;
pub mod geodesy;
pub mod io;
pub mod signal;
pub mod transform;

pub use classify::{fit, FitOptions, Method, Prediction, Projection, RankPolicy, SubspaceModel};
pub use datagen::{make_experiment1, DatasetSpec, Experiment1, FigureId, TemplateId};
pub use error::{Result, ScdtError};
pub use geodesy::{ds_distance, geodesic_path, scdt_distance, w2, PathPointSet, DEFAULT_ALPHAS};
pub use io::{FigureFormat, LabeledDataset};
pub use signal::{apply_warp, jordan_decompose, uniform_grid, Signal, SignalPart, Warp, WarpKind};
pub use transform::{
    cdt_forward, flatten, pushforward, scdt_forward, scdt_inverse, validate_scdt, EmbeddingVector, Reference,
    ReferenceSpec, Scdt, TransportMap, ValidityReport,
};
