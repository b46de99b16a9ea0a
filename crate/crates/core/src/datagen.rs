//! Synthetic signals: the class templates, seeded affine-warp datasets, the
//! non-geodesic step pair, and the worked path examples.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScdtError};
use crate::io::LabeledDataset;
use crate::signal::{apply_warp, uniform_grid, Signal, Warp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Gabor,
    SawtoothApodized,
    SquareApodized,
}

impl TemplateId {
    pub const ALL: [TemplateId; 3] = [
        TemplateId::Gabor,
        TemplateId::SawtoothApodized,
        TemplateId::SquareApodized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::Gabor => "gabor",
            TemplateId::SawtoothApodized => "sawtooth_apodized",
            TemplateId::SquareApodized => "square_apodized",
        }
    }
}

impl FromStr for TemplateId {
    type Err = ScdtError;

    fn from_str(s: &str) -> Result<Self> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| ScdtError::Unknown {
                kind: "template",
                name: s.to_string(),
            })
    }
}

/// Shape parameters shared by all templates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateParams {
    pub frequency: f64,
    pub center: f64,
    /// Standard deviation of the Gaussian envelope.
    pub width: f64,
    /// Envelope support half-width in units of `width`; the Gaussian is
    /// lowered by its value there and clipped, so it reaches zero continuously.
    pub cutoff: f64,
}

impl Default for TemplateParams {
    fn default() -> Self {
        Self {
            frequency: 5.0,
            center: 0.5,
            width: 0.1,
            cutoff: 3.0,
        }
    }
}

pub fn template(id: TemplateId, grid: Vec<f64>) -> Result<Signal> {
    template_with(id, grid, TemplateParams::default())
}

pub fn template_with(id: TemplateId, grid: Vec<f64>, p: TemplateParams) -> Result<Signal> {
    let gauss = move |z: f64| (-0.5 * z * z).exp();
    let floor = gauss(p.cutoff);
    let envelope = move |t: f64| ((gauss((t - p.center) / p.width) - floor) / (1.0 - floor)).max(0.0);
    let phase = move |t: f64| p.frequency * (t - p.center);
    Signal::from_fn(grid, |t| {
        let x = phase(t);
        let carrier = match id {
            TemplateId::Gabor => (2.0 * PI * x).cos(),
            // Zero-mean sawtooth in [-1, 1), rising through 0 at the center.
            TemplateId::SawtoothApodized => 2.0 * (x - (x + 0.5).floor()),
            TemplateId::SquareApodized => {
                if (2.0 * PI * x).sin() >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        carrier * envelope(t)
    })
}

/// Everything needed to regenerate a synthetic classification dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub templates: Vec<TemplateId>,
    pub template_params: TemplateParams,
    /// Range of the affine slope `ω` in `g(t) = ωt + τ`.
    pub omega_range: (f64, f64),
    pub tau_range: (f64, f64),
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub resolution: usize,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            templates: TemplateId::ALL.to_vec(),
            template_params: TemplateParams::default(),
            omega_range: (0.7, 1.4),
            tau_range: (-0.2, 0.2),
            train_per_class: 20,
            test_per_class: 40,
            resolution: 1000,
            seed: 0x5CD7,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty() {
            return Err(ScdtError::invalid("dataset needs at least one template"));
        }
        let (w0, w1) = self.omega_range;
        if !(w0 > 0.0 && w1 >= w0) {
            return Err(ScdtError::invalid(format!(
                "omega range must be positive and ordered, got ({w0}, {w1})"
            )));
        }
        if !(self.tau_range.1 >= self.tau_range.0) {
            return Err(ScdtError::invalid("tau range is not ordered"));
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(ScdtError::invalid("counts per class must be at least 1"));
        }
        if self.resolution < 2 {
            return Err(ScdtError::invalid("resolution must be at least 2"));
        }
        let p = self.template_params;
        if !(p.width > 0.0 && p.cutoff > 0.0 && p.frequency.is_finite() && p.center.is_finite()) {
            return Err(ScdtError::invalid("template width and cutoff must be positive"));
        }
        Ok(())
    }
}

/// Seeded train/test split drawn from the affine generative model of each template.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment1 {
    pub spec: DatasetSpec,
    pub templates: Vec<Signal>,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// `(ω, τ)` of every test sample, in order.
    pub test_warps: Vec<(f64, f64)>,
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Per-class generator so each class can be produced independently.
fn class_rng(seed: u64, class: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class as u64 + 1);
    rng
}

pub fn make_experiment1(spec: &DatasetSpec) -> Result<Experiment1> {
    spec.validate()?;
    let grid = uniform_grid(0.0, 1.0, spec.resolution);
    let templates = spec
        .templates
        .iter()
        .map(|&id| template_with(id, grid.clone(), spec.template_params))
        .collect::<Result<Vec<_>>>()?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut test_warps = Vec::new();
    for (class, tpl) in templates.iter().enumerate() {
        let mut rng = class_rng(spec.seed, class);
        for i in 0..spec.train_per_class + spec.test_per_class {
            let omega = draw(&mut rng, spec.omega_range);
            let tau = draw(&mut rng, spec.tau_range);
            let sample = apply_warp(tpl, &Warp::affine(omega, tau)?)?;
            if i < spec.train_per_class {
                train.push((sample, class as u32));
            } else {
                test.push((sample, class as u32));
                test_warps.push((omega, tau));
            }
        }
    }
    let names: Vec<String> = spec.templates.iter().map(|t| t.name().to_string()).collect();
    let source = format!("experiment1 seed={}", spec.seed);
    Ok(Experiment1 {
        spec: spec.clone(),
        templates,
        train: LabeledDataset::from_pairs(train, Some(names.clone()), source.clone())?,
        test: LabeledDataset::from_pairs(test, Some(names), source)?,
        test_warps,
    })
}

/// `s₁ = 𝟙[−1,0) − 𝟙[0,1]` and `s₂ = −s₁` on `[−1, 1]`.
pub fn counterexample_pair(resolution: usize) -> Result<(Signal, Signal)> {
    if resolution < 4 {
        return Err(ScdtError::invalid("counterexample needs resolution >= 4"));
    }
    let s1 = Signal::from_fn(uniform_grid(-1.0, 1.0, resolution), |t| {
        if t < 0.0 {
            1.0
        } else {
            -1.0
        }
    })?;
    let s2 = s1.negated();
    Ok((s1, s2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    /// Zero signal to `sin(2πt)` on `[0, 1]`.
    Fig2Top,
    /// `−sin(3πt)` to its normalized `t²` warp.
    Fig2Bottom,
    /// Opposite half-interval steps.
    Fig3Top,
    /// `−sin(3πt)` to its unnormalized `t²` warp.
    Fig3Bottom,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [
        FigureId::Fig2Top,
        FigureId::Fig2Bottom,
        FigureId::Fig3Top,
        FigureId::Fig3Bottom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2Top => "fig2_top",
            FigureId::Fig2Bottom => "fig2_bottom",
            FigureId::Fig3Top => "fig3_top",
            FigureId::Fig3Bottom => "fig3_bottom",
        }
    }
}

impl FromStr for FigureId {
    type Err = ScdtError;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| ScdtError::Unknown {
                kind: "figure",
                name: s.to_string(),
            })
    }
}

/// Endpoint pair of one worked path example, sampled on `[0, 1]`.
pub fn figure_signals(which: FigureId, resolution: usize) -> Result<(Signal, Signal)> {
    if resolution < 100 {
        return Err(ScdtError::invalid("figure signals need resolution >= 100"));
    }
    let grid = uniform_grid(0.0, 1.0, resolution);
    let sine3 = |grid: Vec<f64>| Signal::from_fn(grid, |t| -(3.0 * PI * t).sin());
    match which {
        FigureId::Fig2Top => Ok((
            Signal::zeros(grid.clone())?,
            Signal::from_fn(grid, |t| (2.0 * PI * t).sin())?,
        )),
        FigureId::Fig2Bottom => {
            let s = sine3(grid)?;
            let st = apply_warp(&s, &Warp::power(2.0)?)?;
            Ok((s, st))
        }
        FigureId::Fig3Top => {
            let s = Signal::from_fn(grid, |t| if t <= 0.5 { -1.0 } else { 1.0 })?;
            let st = s.negated();
            Ok((s, st))
        }
        FigureId::Fig3Bottom => {
            let s = sine3(grid)?;
            let st = apply_warp(&s, &Warp::power(2.0)?.with_normalize(false))?;
            Ok((s, st))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{jordan_decompose, l1_norm};

    #[test]
    fn template_shapes() {
        let grid = uniform_grid(0.0, 1.0, 1001);
        let g = template(TemplateId::Gabor, grid.clone()).unwrap();
        assert!((g.eval(0.5) - 1.0).abs() < 1e-12);
        for id in TemplateId::ALL {
            let s = template(id, grid.clone()).unwrap();
            let (p, m) = jordan_decompose(&s);
            assert!(!p.is_zero() && !m.is_zero(), "{id:?}");
        }
        let sq = template(TemplateId::SquareApodized, grid).unwrap();
        assert!(sq.values().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!("triangle".parse::<TemplateId>().is_err());
    }

    #[test]
    fn experiment1_is_deterministic() {
        let spec = DatasetSpec {
            train_per_class: 3,
            test_per_class: 2,
            resolution: 200,
            ..DatasetSpec::default()
        };
        let a = make_experiment1(&spec).unwrap();
        let b = make_experiment1(&spec).unwrap();
        assert_eq!(a, b);
        let c = make_experiment1(&DatasetSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn unit_warp_draw_reproduces_template() {
        let spec = DatasetSpec {
            omega_range: (1.0, 1.0),
            tau_range: (0.0, 0.0),
            train_per_class: 1,
            test_per_class: 1,
            resolution: 300,
            ..DatasetSpec::default()
        };
        let e = make_experiment1(&spec).unwrap();
        for (i, tpl) in e.templates.iter().enumerate() {
            let s = &e.train.signals[i];
            for (a, b) in s.values().iter().zip(tpl.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn experiment1_preserves_mass() {
        let spec = DatasetSpec {
            train_per_class: 4,
            test_per_class: 4,
            ..DatasetSpec::default()
        };
        let e = make_experiment1(&spec).unwrap();
        for (s, &label) in e.train.signals.iter().zip(&e.train.labels) {
            let m0 = l1_norm(&e.templates[label as usize]);
            assert!((l1_norm(s) - m0).abs() <= 1e-6 * m0);
        }
    }

    #[test]
    fn counterexample_is_antisymmetric() {
        let (s1, s2) = counterexample_pair(101).unwrap();
        for (a, b) in s1.values().iter().zip(s2.values()) {
            assert_eq!(*a, -*b);
        }
        assert!(counterexample_pair(3).is_err());
    }

    #[test]
    fn figure_pairs() {
        let (z, _) = figure_signals(FigureId::Fig2Top, 1000).unwrap();
        assert!(z.is_zero());
        let (s, _) = figure_signals(FigureId::Fig3Top, 1000).unwrap();
        let (p, m) = jordan_decompose(&s);
        assert!((p.mass - 0.5).abs() < 1e-3 && (m.mass - 0.5).abs() < 1e-3);
        let (s, st) = figure_signals(FigureId::Fig2Bottom, 1000).unwrap();
        assert_eq!(st, apply_warp(&s, &Warp::power(2.0).unwrap()).unwrap());
        assert!(figure_signals(FigureId::Fig3Top, 50).is_err());
        assert!("fig9".parse::<FigureId>().is_err());
    }
}
