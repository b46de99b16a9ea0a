use scdt_core::classify::{fit, FitOptions, Method};
use scdt_core::datagen::{figure_signals, make_experiment1, DatasetSpec, FigureId};
use scdt_core::geodesy::{geodesic_path, DEFAULT_ALPHAS};
use scdt_core::io::{
    emit_path_figure, load_model, read_scdt, save_model, write_scdt, FigureFormat,
};
use scdt_core::transform::{scdt_forward, Reference};
use scdt_core::ScdtError;

fn small_spec() -> DatasetSpec {
    DatasetSpec {
        train_per_class: 6,
        test_per_class: 5,
        resolution: 400,
        ..DatasetSpec::default()
    }
}

#[test]
fn reloaded_model_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let exp = make_experiment1(&small_spec()).unwrap();
    let r = Reference::uniform(0.0, 1.0, 300).unwrap();
    for method in [Method::Ns, Method::Nls] {
        let options = FitOptions {
            method,
            nls_k: 3,
            ..FitOptions::default()
        };
        let model = fit(&exp.train, &r, options).unwrap();
        let path = dir.path().join(format!("{method}.json"));
        save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        let a = model.predict_all(&exp.test.signals).unwrap();
        let b = back.predict_all(&exp.test.signals).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn damaged_model_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let exp = make_experiment1(&small_spec()).unwrap();
    let r = Reference::uniform(0.0, 1.0, 100).unwrap();
    let model = fit(&exp.train, &r, FitOptions::default()).unwrap();
    let path = dir.path().join("m.json");
    save_model(&path, &model).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();

    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(load_model(&path).is_err());

    std::fs::write(&path, text.replacen("\"format_version\":1", "\"format_version\":9", 1)).unwrap();
    assert!(matches!(load_model(&path), Err(ScdtError::FormatVersion { found: 9, .. })));

    std::fs::write(&path, text.replacen("\"method\":\"ns\"", "\"method\":\"svm\"", 1)).unwrap();
    assert!(load_model(&path).is_err());
}

#[test]
fn transform_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let r = Reference::default();
    let (s, _) = figure_signals(FigureId::Fig2Bottom, 500).unwrap();
    let t = scdt_forward(&s, &r);
    let path = dir.path().join("t.json");
    write_scdt(&path, &t).unwrap();
    assert_eq!(read_scdt(&path).unwrap(), t);
}

#[test]
fn path_figures_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let r = Reference::default();
    let (s, st) = figure_signals(FigureId::Fig3Top, 1000).unwrap();
    let path = geodesic_path(&s, &st, &DEFAULT_ALPHAS, &r).unwrap();
    let a = emit_path_figure(dir.path().join("a"), &path, FigureFormat::Csv).unwrap();
    let b = emit_path_figure(dir.path().join("b"), &path, FigureFormat::Csv).unwrap();
    assert_eq!(a.len(), DEFAULT_ALPHAS.len() + 1);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    let summary = std::fs::read_to_string(a.last().unwrap()).unwrap();
    assert_eq!(summary.lines().count(), 1 + DEFAULT_ALPHAS.len() - 1);

    let svg = emit_path_figure(dir.path().join("fig"), &path, FigureFormat::Svg).unwrap();
    let text = std::fs::read_to_string(&svg[0]).unwrap();
    assert!(text.starts_with("<?xml") && text.trim_end().ends_with("</svg>"));
    assert_eq!(text.matches("<polyline").count(), DEFAULT_ALPHAS.len());
}
