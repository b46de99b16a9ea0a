use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use scdt_core::classify::{fit, FitOptions, Method, RankPolicy, SubspaceModel};
use scdt_core::datagen::{counterexample_pair, figure_signals, make_experiment1, DatasetSpec, FigureId};
use scdt_core::geodesy::{
    constant_speed_check, distance_breakdown, geodesic_path, midpoint_diagnostic_with_tolerance,
    pair_grid, validate_alphas, MidpointVerdict, PathPointSet, DEFAULT_ALPHAS,
};
use scdt_core::io::{
    emit_path_figure, load_model, read_manifest, read_scdt, read_signal_csv, read_ucr, save_model,
    write_manifest, write_scdt, write_signal_csv, FigureFormat, LabeledDataset, UcrOptions,
};
use scdt_core::signal::{l1_distance, l1_norm, Signal};
use scdt_core::transform::{scdt_forward, scdt_inverse, Reference, ReferenceSpec, DEFAULT_OVERLAP_RTOL};
use serde_json::{json, Map, Value};

use crate::report::{num, nums, opt_num, render};
use crate::{
    ClassifyAction, Cli, Command, DataArgs, DatagenAction, Demo, GlobalArgs, MethodArg, ModelArgs,
    PairArgs, PathArgs, PlotFormat,
};

const MIN_RESOLUTION: usize = 64;

pub fn run(cli: &Cli) -> Result<String> {
    let g = &cli.global;
    if g.resolution < MIN_RESOLUTION {
        bail!("--resolution must be at least {MIN_RESOLUTION}, got {}", g.resolution);
    }
    if let Some(tol) = g.overlap_tol {
        if tol.is_nan() || tol < 0.0 {
            bail!("--overlap-tol must be nonnegative, got {tol}");
        }
    }
    let reference = Reference::uniform(g.ref_lo, g.ref_hi, g.resolution)?;
    let mut report = Map::new();
    report.insert("command".into(), json!(command_name(&cli.command)));
    report.insert("seed".into(), json!(g.seed));
    let body = match &cli.command {
        Command::Transform { input, out } => transform(g, &reference, input, out.as_deref())?,
        Command::Invert {
            input,
            out,
            points,
            original,
        } => invert(g, input, out.as_deref(), *points, original.as_deref())?,
        Command::Distance(pair) => distance(g, &reference, pair)?,
        Command::Geodesic { pair, path } => geodesic(g, &reference, pair, path)?,
        Command::Diagnose { pair, alphas } => diagnose(g, &reference, pair, alphas.as_deref())?,
        Command::Classify { action } => classify(g, &reference, action)?,
        Command::Datagen { what } => datagen(g, what)?,
    };
    report.extend(body);
    Ok(render(&Value::Object(report), g.json))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Transform { .. } => "transform",
        Command::Invert { .. } => "invert",
        Command::Distance(_) => "distance",
        Command::Geodesic { .. } => "geodesic",
        Command::Diagnose { .. } => "diagnose",
        Command::Classify { action } => match action {
            ClassifyAction::Fit { .. } => "classify fit",
            ClassifyAction::Predict { .. } => "classify predict",
            ClassifyAction::Paths { .. } => "classify paths",
        },
        Command::Datagen { .. } => "datagen",
    }
}

fn output_path(g: &GlobalArgs, explicit: Option<&Path>, default_name: &str) -> Result<PathBuf> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => g.out_dir.join(default_name),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(path)
}

fn path_str(p: &Path) -> Value {
    json!(p.display().to_string())
}

fn demo_name(d: Demo) -> &'static str {
    match d {
        Demo::Fig2Top => "fig2_top",
        Demo::Fig2Bottom => "fig2_bottom",
        Demo::Fig3Top => "fig3_top",
        Demo::Fig3Bottom => "fig3_bottom",
        Demo::Counterexample => "counterexample",
    }
}

fn demo_pair(d: Demo, points: usize) -> Result<(Signal, Signal)> {
    Ok(match d {
        Demo::Counterexample => counterexample_pair(points)?,
        other => figure_signals(demo_name(other).parse::<FigureId>()?, points)?,
    })
}

/// The two signals and a short name for the pair.
fn load_pair(g: &GlobalArgs, pair: &PairArgs) -> Result<(Signal, Signal, String)> {
    if let Some(d) = pair.demo {
        let (a, b) = demo_pair(d, g.resolution.max(100))?;
        return Ok((a, b, demo_name(d).to_string()));
    }
    let (Some(pa), Some(pb)) = (&pair.a, &pair.b) else {
        bail!("two signal files or --demo are required");
    };
    let a = read_signal_csv(pa)?;
    let b = read_signal_csv(pb)?;
    Ok((a, b, format!("{} vs {}", pa.display(), pb.display())))
}

fn alphas_or_default(alphas: Option<&[f64]>) -> Result<Vec<f64>> {
    let a = alphas.map_or_else(|| DEFAULT_ALPHAS.to_vec(), <[f64]>::to_vec);
    validate_alphas(&a)?;
    Ok(a)
}

fn transform(g: &GlobalArgs, reference: &Reference, input: &Path, out: Option<&Path>) -> Result<Map<String, Value>> {
    let s = read_signal_csv(input)?;
    let t = scdt_forward(&s, reference);
    let stem = input.file_stem().map_or("signal".into(), |s| s.to_string_lossy().into_owned());
    let path = output_path(g, out, &format!("{stem}.scdt.json"))?;
    write_scdt(&path, &t)?;
    let mut m = Map::new();
    m.insert("input".into(), path_str(input));
    m.insert("output".into(), path_str(&path));
    m.insert("reference".into(), json!(t.reference()));
    m.insert("grid_length".into(), json!(t.grid_length()));
    m.insert("positive_mass".into(), num(t.a()));
    m.insert("negative_mass".into(), num(t.b()));
    m.insert("zero_signal".into(), json!(t.is_zero()));
    Ok(m)
}

fn invert(
    g: &GlobalArgs,
    input: &Path,
    out: Option<&Path>,
    points: Option<usize>,
    original: Option<&Path>,
) -> Result<Map<String, Value>> {
    let t = read_scdt(input)?;
    // The file names its own reference.
    let reference = ReferenceSpec::parse(t.reference(), t.grid_length())?.build()?;
    let n = points.unwrap_or(reference.len());
    if n < 2 {
        bail!("--points must be at least 2");
    }
    let s = scdt_inverse(&t, &reference, n)?;
    let stem = input
        .file_name()
        .map_or("signal".into(), |s| s.to_string_lossy().trim_end_matches(".json").trim_end_matches(".scdt").to_string());
    let path = output_path(g, out, &format!("{stem}.inverse.csv"))?;
    write_signal_csv(&path, &s)?;
    let mut m = Map::new();
    m.insert("input".into(), path_str(input));
    m.insert("output".into(), path_str(&path));
    m.insert("points".into(), json!(s.len()));
    m.insert("mass".into(), num(l1_norm(&s)));
    if let Some(o) = original {
        let orig = read_signal_csv(o)?;
        let err = l1_distance(&s, &orig);
        let norm = l1_norm(&orig);
        m.insert("l1_error".into(), num(err));
        m.insert("relative_l1_error".into(), if norm > 0.0 { num(err / norm) } else { Value::Null });
    }
    Ok(m)
}

fn distance(g: &GlobalArgs, reference: &Reference, pair: &PairArgs) -> Result<Map<String, Value>> {
    let (a, b, name) = load_pair(g, pair)?;
    let d = distance_breakdown(&a, &b, reference)?;
    let mut m = Map::new();
    m.insert("pair".into(), json!(name));
    m.insert("distance".into(), num(d.total));
    m.insert("positive_part_w2".into(), opt_num(d.plus_w2));
    m.insert("negative_part_w2".into(), opt_num(d.minus_w2));
    m.insert("positive_mass_difference".into(), num(d.plus_mass_diff));
    m.insert("negative_mass_difference".into(), num(d.minus_mass_diff));
    m.insert("partwise_distance".into(), opt_num(d.partwise));
    Ok(m)
}

fn write_figures(g: &GlobalArgs, path: &PathPointSet, plot: PlotFormat, prefix: &str) -> Result<Vec<Value>> {
    let formats: &[FigureFormat] = match plot {
        PlotFormat::Svg => &[FigureFormat::Svg],
        PlotFormat::Csv => &[FigureFormat::Csv],
        PlotFormat::Both => &[FigureFormat::Svg, FigureFormat::Csv],
        PlotFormat::None => &[],
    };
    if formats.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(&g.out_dir).with_context(|| format!("creating {}", g.out_dir.display()))?;
    let mut files = Vec::new();
    for &f in formats {
        for p in emit_path_figure(g.out_dir.join(prefix), path, f)? {
            files.push(path_str(&p));
        }
    }
    Ok(files)
}

fn path_report(path: &PathPointSet) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("alphas".into(), nums(&path.alphas));
    m.insert("segment_distances".into(), nums(&path.segment_distances));
    m.insert("path_length".into(), num(path.total_length()));
    m.insert("endpoint_distance".into(), num(path.endpoint_distance));
    m.insert("gap_ratio".into(), num(path.gap_ratio()));
    m.insert("points_in_image".into(), json!(path.in_image));
    m
}

fn geodesic(g: &GlobalArgs, reference: &Reference, pair: &PairArgs, args: &PathArgs) -> Result<Map<String, Value>> {
    let (a, b, name) = load_pair(g, pair)?;
    let alphas = alphas_or_default(args.alphas.as_deref())?;
    let path = geodesic_path(&a, &b, &alphas, reference)?;
    let prefix = args
        .prefix
        .clone()
        .unwrap_or_else(|| pair.demo.map_or("geodesic".into(), |d| format!("geodesic_{}", demo_name(d))));
    let files = write_figures(g, &path, args.plot, &prefix)?;
    let mut m = Map::new();
    m.insert("pair".into(), json!(name));
    m.extend(path_report(&path));
    m.insert("files".into(), Value::Array(files));
    Ok(m)
}

fn diagnose(g: &GlobalArgs, reference: &Reference, pair: &PairArgs, alphas: Option<&[f64]>) -> Result<Map<String, Value>> {
    let (a, b, name) = load_pair(g, pair)?;
    let alphas = alphas_or_default(alphas)?;
    let tol = g.overlap_tol.unwrap_or(DEFAULT_OVERLAP_RTOL);
    let mid = midpoint_diagnostic_with_tolerance(&a, &b, reference, tol)?;
    let speed = constant_speed_check(&a, &b, reference, &pair_grid(&alphas))?;
    let conclusion = if speed.degenerate {
        "degenerate: the signals coincide (D = 0)".to_string()
    } else if mid.verdict == MidpointVerdict::NoGeodesic {
        "no geodesic: midpoint leaves embedding space".to_string()
    } else {
        format!(
            "candidate geodesic: midpoint is a valid transform, constant-speed deviation {} 0.01",
            if speed.max_deviation < 0.01 { "<" } else { ">=" }
        )
    };
    let v = &mid.validity;
    let mut m = Map::new();
    m.insert("pair".into(), json!(name));
    m.insert("conclusion".into(), json!(conclusion));
    m.insert("midpoint_in_embedding_space".into(), json!(v.in_embedding_space));
    m.insert("midpoint_monotone".into(), json!(v.monotone));
    m.insert("midpoint_overlap".into(), opt_num(v.overlap));
    m.insert("overlap_allowed".into(), num(v.overlap_allowed));
    m.insert("distance".into(), num(speed.distance));
    m.insert("constant_speed_deviation".into(), num(speed.max_deviation));
    m.insert("checked_pairs".into(), json!(alphas.len() * alphas.len()));
    m.insert("degenerate".into(), json!(speed.degenerate));
    Ok(m)
}

fn load_dataset(path: &Path, data: &DataArgs) -> Result<LabeledDataset> {
    let mut d = if path.file_name().is_some_and(|n| n == "index.csv") {
        let d = read_manifest(path)?;
        match &data.classes {
            Some(keep) => d.filter_classes(keep)?,
            None => d,
        }
    } else {
        let options = UcrOptions {
            classes: data.classes.clone(),
            shift_min_zero: data.shift_min_zero,
            ..UcrOptions::default()
        };
        read_ucr(path, &options)?
    };
    if let Some(k) = data.per_class {
        d = d.take_per_class(k);
    }
    Ok(d)
}

fn experiment1(g: &GlobalArgs) -> Result<(LabeledDataset, LabeledDataset)> {
    let spec = DatasetSpec {
        seed: g.seed,
        ..DatasetSpec::default()
    };
    let e = make_experiment1(&spec)?;
    Ok((e.train, e.test))
}

fn fit_options(args: &ModelArgs) -> Result<FitOptions> {
    if !(args.rank_tol > 0.0 && args.rank_tol < 1.0) {
        bail!("--rank-tol must lie in (0, 1), got {}", args.rank_tol);
    }
    Ok(FitOptions {
        method: match args.method {
            MethodArg::Ns => Method::Ns,
            MethodArg::Nls => Method::Nls,
        },
        rank_policy: RankPolicy { rel_tol: args.rank_tol },
        nls_k: args.k,
    })
}

fn model_summary(model: &SubspaceModel) -> Map<String, Value> {
    let classes = model
        .classes
        .iter()
        .map(|c| match model.options.method {
            Method::Ns => json!({"label": c.label, "name": c.name, "rank": c.basis.ncols()}),
            Method::Nls => json!({"label": c.label, "name": c.name, "train_samples": c.train.len()}),
        })
        .collect();
    let mut m = Map::new();
    m.insert("method".into(), json!(model.options.method.to_string()));
    if model.options.method == Method::Nls {
        m.insert("k".into(), json!(model.options.nls_k));
    }
    m.insert("reference".into(), json!(model.reference.label()));
    m.insert("resolution".into(), json!(model.reference.len()));
    m.insert("classes".into(), Value::Array(classes));
    m
}

/// A saved model, or one fitted from `--train` / the demo training split.
fn obtain_model(
    g: &GlobalArgs,
    reference: &Reference,
    model: Option<&Path>,
    train: Option<&Path>,
    data: &DataArgs,
    args: &ModelArgs,
) -> Result<SubspaceModel> {
    if let Some(p) = model {
        return Ok(load_model(p)?);
    }
    let train = match (train, data.demo) {
        (Some(t), _) => load_dataset(t, data)?,
        (None, Some(_)) => experiment1(g)?.0,
        (None, None) => bail!("a --model, --train or --demo is required"),
    };
    Ok(fit(&train, reference, fit_options(args)?)?)
}

fn test_set(g: &GlobalArgs, test: Option<&Path>, data: &DataArgs) -> Result<LabeledDataset> {
    match (test, data.demo) {
        (Some(t), _) => load_dataset(t, data),
        (None, Some(_)) => Ok(experiment1(g)?.1),
        (None, None) => bail!("--test or --demo is required"),
    }
}

fn classify(g: &GlobalArgs, reference: &Reference, action: &ClassifyAction) -> Result<Map<String, Value>> {
    match action {
        ClassifyAction::Fit {
            train,
            data,
            model_args,
            model,
        } => {
            let train = match (train, data.demo) {
                (Some(t), _) => load_dataset(t, data)?,
                (None, _) => experiment1(g)?.0,
            };
            let fitted = fit(&train, reference, fit_options(model_args)?)?;
            let path = output_path(g, model.as_deref(), "model.json")?;
            save_model(&path, &fitted)?;
            let mut m = Map::new();
            m.insert("train_samples".into(), json!(train.len()));
            m.extend(model_summary(&fitted));
            m.insert("model".into(), path_str(&path));
            Ok(m)
        }
        ClassifyAction::Predict {
            model,
            test,
            train,
            data,
            model_args,
            out,
        } => {
            let fitted = obtain_model(g, reference, model.as_deref(), train.as_deref(), data, model_args)?;
            let test = test_set(g, test.as_deref(), data)?;
            let preds = fitted.predict_all(&test.signals)?;
            let correct = preds.iter().zip(&test.labels).filter(|(p, &l)| p.label == l).count();
            let mut m = Map::new();
            m.extend(model_summary(&fitted));
            m.insert("test_samples".into(), json!(test.len()));
            m.insert("correct".into(), json!(correct));
            m.insert("accuracy".into(), num(correct as f64 / test.len().max(1) as f64));
            if g.verbose > 0 {
                let rows = preds
                    .iter()
                    .zip(&test.labels)
                    .enumerate()
                    .map(|(i, (p, &l))| json!({"sample": i, "true": l, "predicted": p.label, "distances": nums(&p.distances)}))
                    .collect();
                m.insert("predictions".into(), Value::Array(rows));
            }
            if let Some(out) = out {
                let path = output_path(g, Some(out), "")?;
                let mut csv = String::from("sample,true,predicted");
                for l in fitted.labels() {
                    csv.push_str(&format!(",distance_{l}"));
                }
                csv.push('\n');
                for (i, (p, &l)) in preds.iter().zip(&test.labels).enumerate() {
                    csv.push_str(&format!("{i},{l},{}", p.label));
                    for d in &p.distances {
                        csv.push_str(&format!(",{d:?}"));
                    }
                    csv.push('\n');
                }
                fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
                m.insert("output".into(), path_str(&path));
            }
            Ok(m)
        }
        ClassifyAction::Paths {
            model,
            test,
            train,
            data,
            model_args,
            sample,
            path,
        } => {
            let fitted = obtain_model(g, reference, model.as_deref(), train.as_deref(), data, model_args)?;
            let test = test_set(g, test.as_deref(), data)?;
            let Some(s) = test.signals.get(*sample) else {
                bail!("--sample {sample} is out of range for {} test signals", test.len());
            };
            let alphas = alphas_or_default(path.alphas.as_deref())?;
            let prediction = fitted.predict(s)?;
            let paths = fitted.class_paths(s, &alphas)?;
            let prefix = path.prefix.clone().unwrap_or_else(|| format!("paths_sample{sample}"));
            let mut classes = Vec::new();
            let mut best: Option<(f64, u32)> = None;
            for (cp, d) in paths.iter().zip(&prediction.distances) {
                let label = cp.projection.class_label;
                let files = write_figures(g, &cp.path.path, path.plot, &format!("{prefix}_class{label}"))?;
                let mut c = Map::new();
                c.insert("label".into(), json!(label));
                c.insert("subspace_distance".into(), num(*d));
                c.insert("projection_in_image".into(), json!(cp.projection.validity.in_embedding_space));
                c.extend(path_report(&cp.path.path));
                c.insert("files".into(), Value::Array(files));
                classes.push(Value::Object(c));
                if best.is_none_or(|(r, _)| cp.path.gap_ratio < r) {
                    best = Some((cp.path.gap_ratio, label));
                }
            }
            let mut m = Map::new();
            m.insert("sample".into(), json!(sample));
            m.insert("true_label".into(), json!(test.labels[*sample]));
            m.insert("predicted_label".into(), json!(prediction.label));
            m.insert("smallest_gap_ratio_class".into(), json!(best.map(|b| b.1)));
            m.insert("classes".into(), Value::Array(classes));
            Ok(m)
        }
    }
}

fn datagen(g: &GlobalArgs, what: &DatagenAction) -> Result<Map<String, Value>> {
    let mut m = Map::new();
    match what {
        DatagenAction::Experiment1 {
            train_per_class,
            test_per_class,
            points,
        } => {
            let spec = DatasetSpec {
                train_per_class: *train_per_class,
                test_per_class: *test_per_class,
                resolution: *points,
                seed: g.seed,
                ..DatasetSpec::default()
            };
            let e = make_experiment1(&spec)?;
            let root = g.out_dir.join("experiment1");
            let train = write_manifest(root.join("train"), &e.train)?;
            let test = write_manifest(root.join("test"), &e.test)?;
            let spec_path = root.join("dataset.json");
            fs::write(&spec_path, serde_json::to_string_pretty(&spec)?)
                .with_context(|| format!("writing {}", spec_path.display()))?;
            m.insert("dataset".into(), json!("experiment1"));
            m.insert("classes".into(), json!(spec.templates.iter().map(|t| t.name()).collect::<Vec<_>>()));
            m.insert("train_samples".into(), json!(e.train.len()));
            m.insert("test_samples".into(), json!(e.test.len()));
            m.insert("train_index".into(), path_str(&train));
            m.insert("test_index".into(), path_str(&test));
            m.insert("spec".into(), path_str(&spec_path));
        }
        DatagenAction::Pair { which, points } => {
            let (a, b) = demo_pair(*which, *points)?;
            let name = demo_name(*which);
            let pa = output_path(g, None, &format!("{name}_a.csv"))?;
            let pb = output_path(g, None, &format!("{name}_b.csv"))?;
            write_signal_csv(&pa, &a)?;
            write_signal_csv(&pb, &b)?;
            m.insert("pair".into(), json!(name));
            m.insert("files".into(), json!([pa.display().to_string(), pb.display().to_string()]));
        }
    }
    Ok(m)
}
