//! File formats: signal CSV, UCR archive rows, dataset manifests, transform
//! and model JSON, and path figures (CSV tables and SVG).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classify::{ClassSubspace, FitOptions, Method, RankPolicy, SubspaceModel};
use crate::error::{Result, ScdtError};
use crate::geodesy::PathPointSet;
use crate::signal::{uniform_grid, Signal};
use crate::transform::{ReferenceSpec, Scdt};

pub const MODEL_FORMAT_VERSION: u64 = 1;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| ScdtError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| ScdtError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| ScdtError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> ScdtError {
    ScdtError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Signals with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub signals: Vec<Signal>,
    pub labels: Vec<u32>,
    /// Indexed by label when present.
    pub class_names: Option<Vec<String>>,
    pub source: String,
}

impl LabeledDataset {
    pub fn from_pairs(items: Vec<(Signal, u32)>, class_names: Option<Vec<String>>, source: String) -> Result<Self> {
        let (signals, labels) = items.into_iter().unzip();
        Ok(Self {
            signals,
            labels,
            class_names,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn class_name(&self, label: u32) -> Option<String> {
        self.class_names.as_ref()?.get(label as usize).cloned()
    }

    pub fn distinct_labels(&self) -> Vec<u32> {
        self.labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// True when every signal is sampled on the same grid.
    pub fn shares_grid(&self) -> bool {
        self.signals.windows(2).all(|w| w[0].grid() == w[1].grid())
    }

    /// Keeps only the listed classes; every listed class must occur.
    pub fn filter_classes(&self, keep: &[u32]) -> Result<Self> {
        let present: BTreeSet<u32> = self.labels.iter().copied().collect();
        if let Some(missing) = keep.iter().find(|l| !present.contains(l)) {
            return Err(ScdtError::Unknown {
                kind: "class label",
                name: missing.to_string(),
            });
        }
        let (signals, labels) = self
            .signals
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| keep.contains(l))
            .map(|(s, &l)| (s.clone(), l))
            .unzip();
        Ok(Self {
            signals,
            labels,
            class_names: self.class_names.clone(),
            source: self.source.clone(),
        })
    }

    /// First `per_class` samples of every class, original order preserved.
    pub fn take_per_class(&self, per_class: usize) -> Self {
        let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
        let (signals, labels) = self
            .signals
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| {
                let c = seen.entry(l).or_default();
                *c += 1;
                *c <= per_class
            })
            .map(|(s, &l)| (s.clone(), l))
            .unzip();
        Self {
            signals,
            labels,
            class_names: self.class_names.clone(),
            source: self.source.clone(),
        }
    }
}

/// Reads a two-column `t,value` file; a header line is allowed.
pub fn read_signal_csv(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if i == 0 && cells[0].parse::<f64>().is_err() {
            continue;
        }
        if cells.len() != 2 {
            return Err(parse_err(path, i + 1, format!("expected 2 columns, found {}", cells.len())));
        }
        let num = |c: &str| {
            c.parse::<f64>()
                .map_err(|_| parse_err(path, i + 1, format!("not a number: `{c}`")))
        };
        grid.push(num(cells[0])?);
        values.push(num(cells[1])?);
    }
    Signal::new(grid, values)
}

pub fn signal_csv_string(s: &Signal) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in s.grid().iter().zip(s.values()) {
        let _ = writeln!(out, "{},{}", fmt_f64(*t), fmt_f64(*v));
    }
    out
}

pub fn write_signal_csv(path: impl AsRef<Path>, s: &Signal) -> Result<()> {
    write_text(path.as_ref(), &signal_csv_string(s))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Delimiter {
    #[default]
    Auto,
    Tab,
    Comma,
    Whitespace,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UcrOptions {
    pub delimiter: Delimiter,
    /// Keep only these labels; each must occur in the file.
    pub classes: Option<Vec<u32>>,
    /// Subtract each series' minimum so that all values are nonnegative.
    pub shift_min_zero: bool,
}

fn detect_delimiter(line: &str) -> Delimiter {
    if line.contains('\t') {
        Delimiter::Tab
    } else if line.contains(',') {
        Delimiter::Comma
    } else {
        Delimiter::Whitespace
    }
}

fn split_row(line: &str, delim: Delimiter) -> Vec<&str> {
    match delim {
        Delimiter::Tab => line.split('\t').map(str::trim).collect(),
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
    }
}

/// Reads UCR archive rows `label, v1, …, vL`, mapped onto a uniform grid on `[0, 1]`.
pub fn read_ucr(path: impl AsRef<Path>, options: &UcrOptions) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut delim = options.delimiter;
    let mut length = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if delim == Delimiter::Auto {
            delim = detect_delimiter(line);
        }
        let cells = split_row(line, delim);
        let label_f: f64 = cells[0]
            .parse()
            .map_err(|_| parse_err(path, i + 1, format!("bad label `{}`", cells[0])))?;
        if label_f < 0.0 || label_f.fract() != 0.0 || label_f > u32::MAX as f64 {
            return Err(parse_err(path, i + 1, format!("label must be a nonnegative integer, got {label_f}")));
        }
        let mut series = Vec::with_capacity(cells.len() - 1);
        for c in &cells[1..] {
            let v: f64 = c
                .parse()
                .map_err(|_| parse_err(path, i + 1, format!("not a number: `{c}`")))?;
            if !v.is_finite() {
                return Err(parse_err(path, i + 1, "missing or non-finite value"));
            }
            series.push(v);
        }
        match length {
            None => length = Some(series.len()),
            Some(l) if l != series.len() => {
                return Err(parse_err(path, i + 1, format!("ragged row: {} values, expected {l}", series.len())));
            }
            _ => {}
        }
        rows.push((label_f as u32, series));
    }
    let length = length.ok_or_else(|| parse_err(path, 0, "file has no rows"))?;
    if length < 2 {
        return Err(parse_err(path, 1, "series need at least 2 values"));
    }
    let grid = uniform_grid(0.0, 1.0, length);
    let mut items = Vec::with_capacity(rows.len());
    for (label, mut series) in rows {
        if options.shift_min_zero {
            let min = series.iter().copied().fold(f64::INFINITY, f64::min);
            series.iter_mut().for_each(|v| *v -= min);
        }
        items.push((Signal::new(grid.clone(), series)?, label));
    }
    let data = LabeledDataset::from_pairs(items, None, path.display().to_string())?;
    match &options.classes {
        Some(keep) => data.filter_classes(keep),
        None => Ok(data),
    }
}

pub fn write_ucr(path: impl AsRef<Path>, data: &LabeledDataset, delimiter: char) -> Result<()> {
    if !data.shares_grid() {
        return Err(ScdtError::invalid("UCR rows need a common grid"));
    }
    let mut out = String::new();
    for (s, l) in data.signals.iter().zip(&data.labels) {
        out.push_str(&l.to_string());
        for v in s.values() {
            out.push(delimiter);
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    write_text(path.as_ref(), &out)
}

/// Writes one signal CSV per sample plus `index.csv` (`file,label`).
pub fn write_manifest(dir: impl AsRef<Path>, data: &LabeledDataset) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut index = String::from("file,label\n");
    for (i, (s, l)) in data.signals.iter().zip(&data.labels).enumerate() {
        let name = format!("sample_{i:05}.csv");
        write_signal_csv(dir.join(&name), s)?;
        let _ = writeln!(index, "{name},{l}");
    }
    let path = dir.join("index.csv");
    write_text(&path, &index)?;
    Ok(path)
}

/// Reads a dataset written by [`write_manifest`]; paths are relative to the index.
pub fn read_manifest(index: impl AsRef<Path>) -> Result<LabeledDataset> {
    let index = index.as_ref();
    let dir = index.parent().unwrap_or(Path::new("."));
    let text = read_text(index)?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (file, label) = line
            .split_once(',')
            .ok_or_else(|| parse_err(index, i + 1, "expected `file,label`"))?;
        let label: u32 = label
            .trim()
            .parse()
            .map_err(|_| parse_err(index, i + 1, format!("bad label `{label}`")))?;
        items.push((read_signal_csv(dir.join(file.trim()))?, label));
    }
    LabeledDataset::from_pairs(items, None, index.display().to_string())
}

pub fn write_scdt(path: impl AsRef<Path>, t: &Scdt) -> Result<()> {
    write_text(path.as_ref(), &serde_json::to_string_pretty(t)?)
}

pub fn read_scdt(path: impl AsRef<Path>) -> Result<Scdt> {
    Ok(serde_json::from_str(&read_text(path.as_ref())?)?)
}

#[derive(Serialize, Deserialize)]
struct ClassFile {
    label: u32,
    name: Option<String>,
    basis_rows: usize,
    basis_cols: usize,
    /// Row-major.
    basis: Vec<f64>,
    train: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    reference: ReferenceSpec,
    method: String,
    nls_k: usize,
    rank_policy: RankPolicy,
    classes: Vec<ClassFile>,
}

pub fn model_to_string(model: &SubspaceModel) -> Result<String> {
    let reference = model.reference.spec().ok_or_else(|| {
        ScdtError::Model("only uniform references can be persisted".into())
    })?;
    let classes = model
        .classes
        .iter()
        .map(|c| ClassFile {
            label: c.label,
            name: c.name.clone(),
            basis_rows: c.basis.nrows(),
            basis_cols: c.basis.ncols(),
            basis: (0..c.basis.nrows())
                .flat_map(|r| (0..c.basis.ncols()).map(move |k| (r, k)))
                .map(|(r, k)| c.basis[(r, k)])
                .collect(),
            train: c.train.iter().map(|v| v.as_slice().to_vec()).collect(),
        })
        .collect();
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        reference,
        method: model.options.method.to_string(),
        nls_k: model.options.nls_k,
        rank_policy: model.options.rank_policy,
        classes,
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn model_from_str(text: &str) -> Result<SubspaceModel> {
    let probe: serde_json::Value = serde_json::from_str(text)?;
    let version = probe.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version != MODEL_FORMAT_VERSION {
        return Err(ScdtError::FormatVersion {
            found: version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(probe)?;
    let method: Method = file.method.parse()?;
    let reference = file.reference.build()?;
    let dim = 2 * reference.len() + 2;
    let mut classes = Vec::with_capacity(file.classes.len());
    for c in file.classes {
        if c.basis.len() != c.basis_rows * c.basis_cols || (c.basis_cols > 0 && c.basis_rows != dim) {
            return Err(ScdtError::Model(format!("class {}: basis has the wrong shape", c.label)));
        }
        if c.train.iter().any(|v| v.len() != dim) {
            return Err(ScdtError::Model(format!("class {}: training vector has the wrong length", c.label)));
        }
        classes.push(ClassSubspace {
            label: c.label,
            name: c.name,
            basis: DMatrix::from_row_slice(c.basis_rows.max(if c.basis_cols == 0 { dim } else { 0 }), c.basis_cols, &c.basis),
            train: c.train.into_iter().map(DVector::from_vec).collect(),
        });
    }
    if classes.windows(2).any(|w| w[0].label >= w[1].label) {
        return Err(ScdtError::Model("class labels must be sorted and unique".into()));
    }
    Ok(SubspaceModel {
        reference,
        options: FitOptions {
            method,
            rank_policy: file.rank_policy,
            nls_k: file.nls_k,
        },
        classes,
    })
}

pub fn save_model(path: impl AsRef<Path>, model: &SubspaceModel) -> Result<()> {
    write_text(path.as_ref(), &model_to_string(model)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SubspaceModel> {
    model_from_str(&read_text(path.as_ref())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureFormat {
    Csv,
    Svg,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

/// One row per segment: its α range, `D_i`, and the path totals.
pub fn path_summary_csv(path: &PathPointSet) -> String {
    let mut out = String::from("segment,alpha_from,alpha_to,d_i,d,sum_d_i,gap_ratio\n");
    let total = path.total_length();
    for (i, d) in path.segment_distances.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i + 1,
            fmt_f64(path.alphas[i]),
            fmt_f64(path.alphas[i + 1]),
            fmt_f64(*d),
            fmt_f64(path.endpoint_distance),
            fmt_f64(total),
            fmt_f64(path.gap_ratio())
        );
    }
    out
}

/// Writes a path as CSV tables (one per α plus a summary) or as one SVG.
pub fn emit_path_figure(prefix: impl AsRef<Path>, path: &PathPointSet, format: FigureFormat) -> Result<Vec<PathBuf>> {
    let prefix = prefix.as_ref();
    match format {
        FigureFormat::Csv => {
            let mut files = Vec::with_capacity(path.points.len() + 1);
            for (i, p) in path.points.iter().enumerate() {
                let f = with_suffix(prefix, &format!("_alpha{i}.csv"));
                write_signal_csv(&f, p)?;
                files.push(f);
            }
            let f = with_suffix(prefix, "_summary.csv");
            write_text(&f, &path_summary_csv(path))?;
            files.push(f);
            Ok(files)
        }
        FigureFormat::Svg => {
            let f = with_suffix(prefix, ".svg");
            write_text(&f, &path_svg(path))?;
            Ok(vec![f])
        }
    }
}

/// Row of panels, one per α, with `D_i` written between neighbours.
pub fn path_svg(path: &PathPointSet) -> String {
    const PANEL_W: f64 = 180.0;
    const PANEL_H: f64 = 120.0;
    const GAP: f64 = 50.0;
    const TOP: f64 = 40.0;
    let n = path.points.len();
    let width = n as f64 * PANEL_W + (n.saturating_sub(1)) as f64 * GAP + 20.0;
    let height = TOP + PANEL_H + 40.0;
    let (t_lo, t_hi) = path
        .points
        .iter()
        .map(Signal::domain)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| (a.min(lo), b.max(hi)));
    let v_max = path
        .points
        .iter()
        .flat_map(|p| p.values().iter().map(|v| v.abs()))
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="10" y="18">D = {:.4}   sum D_i = {:.4}   ratio = {:.4}</text>"#,
        path.endpoint_distance,
        path.total_length(),
        path.gap_ratio()
    );
    for (i, p) in path.points.iter().enumerate() {
        let x0 = 10.0 + i as f64 * (PANEL_W + GAP);
        let mid = TOP + PANEL_H / 2.0;
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.1}" y="{TOP:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="#999"/>"##
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{x0:.1}" y1="{mid:.1}" x2="{:.1}" y2="{mid:.1}" stroke="#ccc"/>"##,
            x0 + PANEL_W
        );
        let span = (t_hi - t_lo).max(1e-12);
        let pts: Vec<String> = p
            .grid()
            .iter()
            .zip(p.values())
            .map(|(&t, &v)| {
                let x = x0 + (t - t_lo) / span * PANEL_W;
                let y = mid - v / v_max * (PANEL_H / 2.0 - 4.0);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.2" points="{}"/>"##,
            pts.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">alpha = {}</text>"#,
            x0 + PANEL_W / 2.0,
            TOP + PANEL_H + 18.0,
            path.alphas[i]
        );
        if let Some(d) = path.segment_distances.get(i) {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">D{} = {:.3}</text>"#,
                x0 + PANEL_W + GAP / 2.0,
                mid,
                i + 1,
                d
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
