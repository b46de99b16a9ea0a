use proptest::prelude::*;
use scdt_core::signal::{jordan_decompose, l1_norm, uniform_grid, Signal};
use scdt_core::transform::{
    cdt_forward, flatten, pushforward, scdt_forward, validate_scdt, Reference, DEFAULT_OVERLAP_RTOL,
};

fn reference() -> Reference {
    Reference::uniform(0.0, 1.0, 200).unwrap()
}

/// Signed signals as sums of a few sinusoids, sampled on `[lo, lo + len]`.
fn signed_signal() -> impl Strategy<Value = Signal> {
    (
        prop::collection::vec((0.1f64..1.0, 0.5f64..4.0, 0.0f64..6.3), 1..4),
        -1.0f64..1.0,
        0.5f64..2.0,
        50usize..300,
    )
        .prop_map(|(terms, lo, len, n)| {
            Signal::from_fn(uniform_grid(lo, lo + len, n), |t| {
                let x = (t - lo) / len;
                terms
                    .iter()
                    .map(|(a, f, p)| a * (2.0 * std::f64::consts::PI * f * x + p).sin())
                    .sum::<f64>()
            })
            .unwrap()
        })
}

fn nonnegative_signal() -> impl Strategy<Value = Signal> {
    signed_signal().prop_map(|s| {
        let v = s.values().iter().map(|v| v.abs() + 0.01).collect();
        Signal::new(s.grid().to_vec(), v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jordan_parts_recombine(s in signed_signal()) {
        let (p, m) = jordan_decompose(&s);
        prop_assert!(p.signal.is_nonnegative() && m.signal.is_nonnegative());
        for (i, &v) in s.values().iter().enumerate() {
            prop_assert!((p.signal.values()[i] - m.signal.values()[i] - v).abs() < 1e-12);
        }
        prop_assert!((p.mass - l1_norm(&p.signal)).abs() < 1e-12);
    }

    #[test]
    fn cdt_maps_are_monotone(s in nonnegative_signal()) {
        let map = cdt_forward(&s, &reference()).unwrap();
        prop_assert!(map.monotone_margin() >= -1e-9);
        let (lo, hi) = s.domain();
        prop_assert!(map.values().iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }

    #[test]
    fn pushforward_has_unit_mass(s in nonnegative_signal()) {
        let r = reference();
        let p = pushforward(&cdt_forward(&s, &r).unwrap(), &r, 400).unwrap();
        prop_assert!(p.is_nonnegative());
        prop_assert!((l1_norm(&p) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_transforms_lie_in_the_image(s in signed_signal()) {
        let r = reference();
        let report = validate_scdt(&scdt_forward(&s, &r), &r, DEFAULT_OVERLAP_RTOL).unwrap();
        prop_assert!(report.monotone && report.masses_nonnegative);
        prop_assert!(report.in_embedding_space, "{report:?}");
    }

    #[test]
    fn distance_is_a_metric(a in signed_signal(), b in signed_signal(), c in signed_signal()) {
        let r = reference();
        let [va, vb, vc] = [&a, &b, &c].map(|s| flatten(&scdt_forward(s, &r), &r).unwrap());
        prop_assert_eq!(va.distance(&va), 0.0);
        prop_assert_eq!(va.distance(&vb), vb.distance(&va));
        prop_assert!(va.distance(&vc) <= va.distance(&vb) + vb.distance(&vc) + 1e-9);
    }

    #[test]
    fn scaling_moves_only_masses(s in signed_signal(), k in 0.1f64..5.0) {
        let r = reference();
        let t = scdt_forward(&s, &r);
        let u = scdt_forward(&s.scaled(k), &r);
        prop_assert!((u.a() - k * t.a()).abs() <= 1e-9 * (1.0 + u.a()));
        prop_assert!((u.b() - k * t.b()).abs() <= 1e-9 * (1.0 + u.b()));
        prop_assert_eq!(t.f_plus().is_some(), u.f_plus().is_some());
        // Where a part's density falls linearly to zero the quantile is a square
        // root of the level, so rounding in the level shows up at sqrt(eps).
        if let (Some(f), Some(g)) = (t.f_plus(), u.f_plus()) {
            for (x, y) in f.values().iter().zip(g.values()) {
                prop_assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
        }
    }
}
