//! Acceptance checks. Prints one line per criterion and exits non-zero if any fail.
//!
//! Criterion 9 needs the StarLightCurves UCR file; point `SCDT_STARLIGHT_PATH`
//! at it (the `_TRAIN` or `_TEST` file, tab or comma separated). It is
//! skipped when the variable is unset.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scdt_core::classify::{fit, FitOptions, Method};
use scdt_core::datagen::{counterexample_pair, figure_signals, make_experiment1, DatasetSpec, FigureId};
use scdt_core::geodesy::{
    constant_speed_check, distance_breakdown, ds_distance, geodesic_midpoint_diagnostic, geodesic_path,
    pair_grid, path_point, w2, DEFAULT_ALPHAS,
};
use scdt_core::io::{emit_path_figure, read_ucr, FigureFormat, UcrOptions};
use scdt_core::signal::{apply_warp, jordan_decompose, uniform_grid, Signal, Warp};
use scdt_core::transform::{compose_warp, flatten, scdt_forward, scdt_inverse, Reference};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

/// `∫|a − b|` on a fine grid covering both supports.
fn l1_diff(a: &Signal, b: &Signal) -> f64 {
    let lo = a.domain().0.min(b.domain().0);
    let hi = a.domain().1.max(b.domain().1);
    let n = 200_001;
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let t = lo + i as f64 * h;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * (a.eval(t) - b.eval(t)).abs()
        })
        .sum::<f64>()
        * h
}

fn l1(a: &Signal) -> f64 {
    l1_diff(a, &Signal::zeros(a.grid().to_vec()).unwrap())
}

/// Random smooth signed signal: a few seeded sinusoids under a bump.
fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Signal {
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|k| {
            (
                rng.gen_range(0.3..1.0),
                (k + 1) as f64 + rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    Signal::from_fn(uniform_grid(0.0, 1.0, n), |t| {
        let env = (PI * t).sin().powf(0.5);
        env * terms.iter().map(|(a, f, p)| a * (2.0 * PI * f * t + p).sin()).sum::<f64>()
    })
    .unwrap()
}

/// Exact quantile of a nonnegative piecewise-linear density (normalized),
/// solving the quadratic cumulative integral inside each cell.
struct QuantileOracle {
    grid: Vec<f64>,
    values: Vec<f64>,
    cum: Vec<f64>,
    total: f64,
}

impl QuantileOracle {
    fn new(s: &Signal) -> Self {
        let grid = s.grid().to_vec();
        let values = s.values().to_vec();
        let mut cum = vec![0.0];
        for i in 1..grid.len() {
            let c = cum[i - 1] + 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
            cum.push(c);
        }
        let total = *cum.last().unwrap();
        Self { grid, values, cum, total }
    }

    fn quantile(&self, u: f64) -> f64 {
        let target = u * self.total;
        let i = self.cum.partition_point(|&c| c < target).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let h = x1 - x0;
        let need = target - self.cum[i - 1];
        // v0 x + (v1 − v0) x² / (2h) = need
        let a = (v1 - v0) / (2.0 * h);
        let x = if a.abs() < 1e-14 {
            need / v0
        } else {
            (-v0 + (v0 * v0 + 4.0 * a * need).max(0.0).sqrt()) / (2.0 * a)
        };
        x0 + x.clamp(0.0, h)
    }
}

fn w2_oracle(s1: &Signal, s2: &Signal) -> f64 {
    let (q1, q2) = (QuantileOracle::new(s1), QuantileOracle::new(s2));
    let m = 200_000;
    let sum: f64 = (0..m)
        .map(|k| {
            let u = (k as f64 + 0.5) / m as f64;
            (q1.quantile(u) - q2.quantile(u)).powi(2)
        })
        .sum();
    (sum / m as f64).sqrt()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let r = Reference::default();
    let (s, st) = figure_signals(FigureId::Fig3Top, 1000).unwrap();
    let p = geodesic_path(&s, &st, &DEFAULT_ALPHAS, &r).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (d, sum) = (p.endpoint_distance, p.total_length());
    verdict(
        (d - 0.71).abs() <= 0.02 && (sum - 2.48).abs() <= 0.05 && secs < 5.0,
        format!("fig3 top: D = {d:.4}, sum D_i = {sum:.4}, {secs:.2}s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let r = Reference::default();
    let (s, st) = figure_signals(FigureId::Fig3Bottom, 1000).unwrap();
    let p = geodesic_path(&s, &st, &DEFAULT_ALPHAS, &r).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (d, sum) = (p.endpoint_distance, p.total_length());
    verdict(
        (d - 0.27).abs() <= 0.03 && (sum - 0.49).abs() <= 0.05 && secs < 5.0,
        format!("fig3 bottom: D = {d:.4}, sum D_i = {sum:.4}, {secs:.2}s"),
    )
}

fn criterion_3() -> Outcome {
    let r = Reference::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for fig in [FigureId::Fig2Top, FigureId::Fig2Bottom] {
        let (s, st) = figure_signals(fig, 1000).unwrap();
        let p = geodesic_path(&s, &st, &DEFAULT_ALPHAS, &r).unwrap();
        let rel = (p.total_length() - p.endpoint_distance).abs() / p.endpoint_distance;
        ok &= rel < 0.02;
        detail.push(format!("{}: |sum - D|/D = {rel:.2e}", fig.name()));
    }
    let (s, st) = figure_signals(FigureId::Fig2Bottom, 1000).unwrap();
    let speed = constant_speed_check(&s, &st, &r, &pair_grid(&DEFAULT_ALPHAS)).unwrap();
    ok &= !speed.degenerate && speed.max_deviation < 0.01;
    detail.push(format!("speed deviation = {:.2e}", speed.max_deviation));
    verdict(ok, detail.join(", "))
}

fn criterion_4() -> Outcome {
    let r = Reference::default();
    let grid = uniform_grid(0.0, 1.0, 1000);
    let zero = Signal::zeros(grid.clone()).unwrap();
    let s = Signal::from_fn(grid, |t| (2.0 * PI * t).sin()).unwrap();
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let p = path_point(&zero, &s, alpha, &r).unwrap();
        let expect = Signal::from_fn(uniform_grid(0.0, alpha, 4001), |t| (2.0 * PI * t / alpha).sin()).unwrap();
        worst = worst.max(l1_diff(&p, &expect));
    }
    verdict(worst < 1e-2, format!("zero-signal path: max L1 error = {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let r = Reference::default();
    let (s1, s2) = counterexample_pair(1000).unwrap();
    let d = ds_distance(&s1, &s2, &r).unwrap();
    let mid = geodesic_midpoint_diagnostic(&s1, &s2, &r).unwrap();
    let p = geodesic_path(&s1, &s2, &DEFAULT_ALPHAS, &r).unwrap();
    let gap = p.total_length() - p.endpoint_distance;
    verdict(
        (d - 2f64.sqrt()).abs() <= 0.02 && !mid.validity.in_embedding_space && gap > 1.5,
        format!(
            "counterexample: D = {d:.4}, midpoint in space = {}, sum D_i - D = {gap:.3}",
            mid.validity.in_embedding_space
        ),
    )
}

fn criterion_6() -> Outcome {
    let r = Reference::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_route: f64 = 0.0;
    let mut worst_w2: f64 = 0.0;
    for _ in 0..50 {
        let a = random_signal(&mut rng, 800);
        let b = random_signal(&mut rng, 800);
        let eq7 = ds_distance(&a, &b, &r).unwrap();
        let eq5 = distance_breakdown(&a, &b, &r).unwrap();
        let partwise = eq5.partwise.expect("both parts nonzero");
        worst_route = worst_route.max((partwise - eq7).abs() / eq7);

        // Same-sign Jordan parts; their supports have gaps, so the quantile
        // functions jump.
        let (pa, ma) = jordan_decompose(&a);
        let (pb, mb) = jordan_decompose(&b);
        for (x, y) in [(&pa.signal, &pb.signal), (&ma.signal, &mb.signal)] {
            let oracle = w2_oracle(x, y);
            worst_w2 = worst_w2.max((w2(x, y, &r).unwrap() - oracle).abs() / oracle);
        }
    }
    verdict(
        worst_route < 1e-6 && worst_w2 < 1e-4,
        format!("isometry: max rel route gap = {worst_route:.2e}, max rel W2 oracle gap = {worst_w2:.2e}"),
    )
}

fn round_trip_error(n: usize) -> f64 {
    let r = Reference::uniform(0.0, 1.0, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let errs: Vec<f64> = (0..20)
        .map(|_| {
            let s = random_signal(&mut rng, n);
            let back = scdt_inverse(&scdt_forward(&s, &r), &r, n).unwrap();
            l1_diff(&back, &s) / l1(&s)
        })
        .collect();
    errs.iter().copied().fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let e1 = round_trip_error(1000);
    let e2 = round_trip_error(2000);
    let ratio = e1 / e2;
    let r = Reference::default();
    let s = Signal::from_fn(uniform_grid(0.0, 1.0, 1000), |t| -(3.0 * PI * t).sin()).unwrap();
    let mut worst_compose: f64 = 0.0;
    for w in [Warp::affine(1.3, -0.1).unwrap(), Warp::power(2.0).unwrap()] {
        let direct = flatten(&scdt_forward(&apply_warp(&s, &w).unwrap(), &r), &r).unwrap();
        let composed = flatten(&compose_warp(&scdt_forward(&s, &r), &w).unwrap(), &r).unwrap();
        worst_compose = worst_compose.max(direct.distance(&composed));
    }
    verdict(
        e1 < 1e-2 && (2.0 / 1.5..=2.0 * 1.5).contains(&ratio) && worst_compose < 1e-3,
        format!(
            "round trip: max rel L1 = {e1:.2e} (N=1000), {e2:.2e} (N=2000), ratio {ratio:.2}; composition error = {worst_compose:.2e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let r = Reference::default();
    let exp = make_experiment1(&DatasetSpec::default()).unwrap();
    let model = fit(&exp.train, &r, FitOptions::default()).unwrap();
    let preds = model.predict_all(&exp.test.signals).unwrap();
    let correct = preds.iter().zip(&exp.test.labels).filter(|(p, &l)| p.label == l).count();
    let mut own_ok = 0;
    let mut worst_own: f64 = 0.0;
    for (s, &label) in exp.test.signals.iter().zip(&exp.test.labels) {
        let paths = model.class_paths(s, &DEFAULT_ALPHAS).unwrap();
        let own = paths.iter().find(|p| p.projection.class_label == label).unwrap().path.gap_ratio;
        let others_larger = paths
            .iter()
            .filter(|p| p.projection.class_label != label)
            .all(|p| p.path.gap_ratio > own);
        worst_own = worst_own.max(own);
        if own < 1.1 && others_larger {
            own_ok += 1;
        }
    }
    let n = exp.test.len();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        n >= 100 && correct == n && own_ok == n && secs < 60.0,
        format!(
            "experiment 1: accuracy {correct}/{n}, gap-ratio property {own_ok}/{n} (worst own ratio {worst_own:.3}), {secs:.1}s"
        ),
    )
}

fn criterion_9() -> Outcome {
    let Ok(path) = std::env::var("SCDT_STARLIGHT_PATH") else {
        return Outcome::Skip("StarLightCurves: SCDT_STARLIGHT_PATH not set".into());
    };
    if !std::path::Path::new(&path).exists() {
        return Outcome::Skip(format!("StarLightCurves: {path} not found"));
    }
    let opts = UcrOptions { classes: Some(vec![1, 2]), ..UcrOptions::default() };
    let data = match read_ucr(&path, &opts) {
        Ok(d) => d.take_per_class(100),
        Err(e) => return Outcome::Fail(format!("StarLightCurves: {e}")),
    };
    // Even positions within each class train, odd positions test.
    let mut seen = std::collections::BTreeMap::<u32, usize>::new();
    let mut train = data.clone();
    let mut test = data.clone();
    train.signals.clear();
    train.labels.clear();
    test.signals.clear();
    test.labels.clear();
    for (s, &l) in data.signals.iter().zip(&data.labels) {
        let k = seen.entry(l).or_default();
        let target = if k.is_multiple_of(2) { &mut train } else { &mut test };
        target.signals.push(s.clone());
        target.labels.push(l);
        *k += 1;
    }
    let r = Reference::default();
    let options = FitOptions { method: Method::Nls, ..FitOptions::default() };
    let model = fit(&train, &r, options).unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut correct = 0;
    let mut property = 0;
    for (i, (s, &label)) in test.signals.iter().zip(&test.labels).enumerate() {
        let pred = model.predict(s).unwrap();
        let paths = model.class_paths(s, &DEFAULT_ALPHAS).unwrap();
        if i < 4 {
            for p in &paths {
                let prefix = out.path().join(format!("sample{i}_class{}", p.projection.class_label));
                emit_path_figure(&prefix, &p.path.path, FigureFormat::Svg).unwrap();
            }
        }
        if pred.label != label {
            continue;
        }
        correct += 1;
        let own = paths.iter().find(|p| p.projection.class_label == label).unwrap().path.gap_ratio;
        if paths.iter().filter(|p| p.projection.class_label != label).all(|p| p.path.gap_ratio > own) {
            property += 1;
        }
    }
    let frac = property as f64 / correct.max(1) as f64;
    let figures = std::fs::read_dir(out.path()).map(|d| d.count()).unwrap_or(0);
    verdict(
        correct > 0 && frac >= 0.8 && figures > 0,
        format!(
            "StarLightCurves: {correct}/{} correct, own path shorter-gap in {property}/{correct} ({:.0}%), {figures} figures",
            test.len(),
            100.0 * frac
        ),
    )
}

fn criterion_10() -> Outcome {
    let r = Reference::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_sym: f64 = 0.0;
    let mut worst_id: f64 = 0.0;
    let mut worst_tri = f64::NEG_INFINITY;
    let mut worst_margin = f64::INFINITY;
    for _ in 0..200 {
        let a = random_signal(&mut rng, 300);
        let b = random_signal(&mut rng, 300);
        let c = random_signal(&mut rng, 300);
        let (ta, tb, tc) = (scdt_forward(&a, &r), scdt_forward(&b, &r), scdt_forward(&c, &r));
        for t in [&ta, &tb, &tc] {
            for m in [t.f_plus(), t.f_minus()].into_iter().flatten() {
                worst_margin = worst_margin.min(m.monotone_margin());
            }
        }
        let (va, vb, vc) = (flatten(&ta, &r).unwrap(), flatten(&tb, &r).unwrap(), flatten(&tc, &r).unwrap());
        worst_sym = worst_sym.max((va.distance(&vb) - vb.distance(&va)).abs());
        worst_id = worst_id.max(va.distance(&va));
        worst_tri = worst_tri.max(va.distance(&vc) - va.distance(&vb) - vb.distance(&vc));
        if va.distance(&vb) == 0.0 {
            worst_id = f64::INFINITY;
        }
    }
    verdict(
        worst_sym == 0.0 && worst_id == 0.0 && worst_tri <= 1e-9 && worst_margin >= -1e-9,
        format!(
            "metric axioms: symmetry gap {worst_sym:.1e}, self distance {worst_id:.1e}, triangle excess {worst_tri:.2e}, min map margin {worst_margin:.2e}"
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        match check() {
            Outcome::Pass(d) => println!("criterion {n:>2}: PASS  {d}"),
            Outcome::Skip(d) => println!("criterion {n:>2}: SKIP  {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
