use proptest::prelude::*;

use super::*;
use crate::manifold::TrigFunction;
use crate::report::Status;
use crate::rng::seeded;
use crate::stats::Moments;

fn t2(beta: f64) -> Manifold {
    Manifold::flat_torus(2, beta).unwrap()
}

#[test]
fn sticks_edge_cases() {
    let mut rng = seeded(1);
    assert!(sample_sticks(1.0, 0, &mut rng).unwrap().is_empty());
    assert!(sample_sticks(0.0, 3, &mut rng).is_err());
    assert!(sample_sticks(-1.0, 3, &mut rng).is_err());
    for r in sample_sticks(0.3, 10_000, &mut rng).unwrap() {
        assert!(r > 0.0 && r <= 1.0);
    }
}

#[test]
fn stick_means_match_beta_mean() {
    for (beta, target) in [(1.0, 0.5), (2.0, 1.0 / 3.0)] {
        let mut rng = seeded(2);
        let m: Moments = sample_sticks(beta, 100_000, &mut rng).unwrap().into_iter().collect();
        assert!((m.mean - target).abs() < 3.0 * m.stderr(), "beta={beta}: {} vs {target}", m.mean);
    }
}

#[test]
fn stick_break_examples() {
    let wv = stick_break(&[1.0]).unwrap();
    assert_eq!(wv.weights(), &[1.0]);
    assert_eq!(wv.tail(), 0.0);
    let wv = stick_break(&[0.5, 0.5, 0.5]).unwrap();
    assert_eq!(wv.weights(), &[0.5, 0.25, 0.125]);
    assert_eq!(wv.tail(), 0.125);
    assert!(!wv.is_ordered());
    assert!(stick_break(&[0.0]).is_err());
    assert!(stick_break(&[1.5]).is_err());
    assert!(stick_break(&[f64::NAN]).is_err());
}

#[test]
fn reorder_examples() {
    let wv = WeightVector::new(vec![0.25, 0.5, 0.125], 0.125).unwrap();
    assert!(!wv.is_ordered());
    let r = reorder(&wv);
    assert_eq!(r.weights(), &[0.5, 0.25, 0.125]);
    assert!(r.is_ordered());
    assert_eq!(reorder(&r), r);
}

#[test]
fn default_truncation_controls_tail() {
    assert_eq!(default_n_atoms(1.0), 34);
    for beta in [0.1, 0.5, 1.0, 2.0, 10.0] {
        let n = default_n_atoms(beta);
        let tail = (beta / (1.0 + beta)).powi(n as i32);
        assert!(tail <= 1e-10 * (1.0 + 1e-9));
        assert!((beta / (1.0 + beta)).powi(n as i32 - 1) > 1e-10);
    }
}

#[test]
fn tail_policies() {
    let m = t2(1.0);
    let mut rng = seeded(3);
    let base = DfSampler::new(m).with_n_atoms(5).unwrap();
    for _ in 0..200 {
        let w = base.sample_weights(&mut rng).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w.tail(), 0.0);
        assert!(w.is_ordered());
        assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let w = base.with_tail_policy(TailPolicy::Lump).sample_weights(&mut rng).unwrap();
        assert_eq!(w.len(), 6);
        assert_eq!(w.tail(), 0.0);
        assert!(w.is_ordered());
        assert!((w.total() - 1.0).abs() < 1e-12);

        let w = base.with_tail_policy(TailPolicy::Keep).sample_weights(&mut rng).unwrap();
        assert_eq!(w.len(), 5);
        assert!(w.tail() > 0.0);
        assert!((w.total() - 1.0).abs() < 1e-12);
    }
    assert!(base.with_n_atoms(0).is_err());
}

#[test]
fn measure_validation() {
    let m = t2(1.0);
    assert!(AtomicMeasure::new(m, vec![0.5, 0.5], 0.0, vec![vec![0.1, 0.1]]).is_err());
    assert!(AtomicMeasure::new(m, vec![0.5, 0.4], 0.0, vec![vec![0.1, 0.1], vec![0.2, 0.2]]).is_err());
    assert!(AtomicMeasure::new(m, vec![1.0], 0.0, vec![vec![0.1]]).is_err());
    let dup = AtomicMeasure::new(m, vec![0.5, 0.5], 0.0, vec![vec![0.25, 0.1], vec![1.25, 0.1]]);
    assert!(matches!(dup, Err(crate::Error::DuplicateLocation(0, 1))));
    let ok = AtomicMeasure::new(m, vec![0.5, 0.5], 0.0, vec![vec![0.1, 0.1], vec![-0.25, 2.5]]).unwrap();
    assert_eq!(ok.location(1), &[0.75, 0.5]);
}

#[test]
fn relocation_and_pushforward() {
    let m = t2(1.0);
    let eta = AtomicMeasure::new(m, vec![0.75, 0.25], 0.0, vec![vec![0.1, 0.1], vec![0.6, 0.3]]).unwrap();
    let moved = eta.relocate(&[0.9, 0.9], 0.5).unwrap();
    assert_eq!(moved.weights(), &[0.375, 0.125, 0.5]);
    assert_eq!(moved.location(2), &[0.9, 0.9]);
    assert!(eta.relocate(&[0.1, 0.1], 0.5).is_err());
    assert!(eta.relocate(&[0.2, 0.1], 1.5).is_err());

    let f = TrigFunction::cos(1.0, &[1, 0]);
    let direct = (1.0 - 0.5) * eta.integrate(&f) + 0.5 * f.value(&m, &[0.9, 0.9]);
    assert!((moved.integrate(&f) - direct).abs() < 1e-15);

    let flow = crate::manifold::Flow::new(&m, crate::manifold::VectorField::constant(&[0.5, 0.0]));
    let pushed = eta.pushforward(&flow, 1.0);
    assert_eq!(pushed.weights(), eta.weights());
    assert!((pushed.location(0)[0] - 0.6).abs() < 1e-15);
    assert!((pushed.location(1)[0] - 0.1).abs() < 1e-15);
}

#[test]
fn json_and_csv_round_trip() {
    let m = t2(1.0);
    let mut rng = seeded(4);
    let eta = DfSampler::new(m).with_tail_policy(TailPolicy::Keep).sample(&mut rng).unwrap();
    let back = AtomicMeasure::from_json(m, eta.to_json()).unwrap();
    assert_eq!(back, eta);
    let v = eta.to_json();
    assert!(v.get("weights").is_some() && v.get("tail").is_some() && v.get("locations").is_some());

    let mut buf = Vec::new();
    eta.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("index,weight,coord_1,coord_2\n"));
    let back = AtomicMeasure::read_csv(m, buf.as_slice()).unwrap();
    assert_eq!(back.weights(), eta.weights());
    assert_eq!(back.coords(), eta.coords());
    assert!((back.tail() - eta.tail()).abs() < 1e-15);

    assert!(AtomicMeasure::read_csv(m, "index,weight,coord_1\n".as_bytes()).is_err());
    assert!(AtomicMeasure::read_csv(m, "".as_bytes()).is_err());
    let bad = serde_json::json!({"weights": [1.0], "locations": [[0.1, 0.2]], "extra": 1});
    assert!(AtomicMeasure::from_json(m, bad).is_err());
}

#[test]
fn stick_breaking_verifier_passes() {
    for beta in [0.5, 1.0, 2.0] {
        for n in [50, 200] {
            let report = verify_stick_breaking(beta, n, 10_000, 3.0, &mut seeded(5)).unwrap();
            assert!(report.passed(), "beta={beta} n={n}: {report:#?}");
        }
    }
}

#[test]
fn df_sampler_verifier_passes() {
    for beta in [0.5, 1.0, 2.0] {
        let sampler = DfSampler::new(t2(beta));
        let report = verify_df_sampler(&sampler, 20_000, 3.0, &mut seeded(6)).unwrap();
        assert!(report.passed(), "beta={beta}: {report:#?}");
    }
}

/// Hand-derived Mecke targets for `β`: `E Σ s² = 1/(1+β)`,
/// `E Σ s³ = 2/((1+β)(2+β))`, `m̄(cos²) = ½`.
fn mecke_basket(beta: f64) -> Vec<(MeckeProbe, f64)> {
    let one = TrigFunction::constant(1.0, 2);
    let c = TrigFunction::cos(1.0, &[1, 0]);
    let s = TrigFunction::sin(1.0, &[1, 1]);
    let e2 = 1.0 / (1.0 + beta);
    let e3 = 2.0 / ((1.0 + beta) * (2.0 + beta));
    vec![
        (MeckeProbe::new("one", one.clone(), vec![1.0], None), 1.0),
        (MeckeProbe::new("f", c.clone(), vec![1.0], None), 0.0),
        (MeckeProbe::new("r", one, vec![0.0, 1.0], None), e2),
        (MeckeProbe::new("f_g", c.clone(), vec![1.0], Some(c)), 0.5 * e2),
        (MeckeProbe::new("poly", s.clone(), vec![1.0, -1.0], Some(s)), 0.5 * (e2 - e3)),
    ]
}

#[test]
fn mecke_closed_forms_match_hand_values() {
    for beta in [0.5, 1.0, 2.0] {
        for (p, v) in mecke_basket(beta) {
            assert!((p.closed_form(beta) - v).abs() < 1e-15, "{}", p.name);
        }
    }
    assert_eq!(beta_moment(1.0, 0), 1.0);
    assert!((beta_moment(2.0, 2) - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn mecke_verifier_passes() {
    let beta = 1.0;
    let sampler = DfSampler::new(t2(beta));
    let probes: Vec<MeckeProbe> = mecke_basket(beta).into_iter().map(|p| p.0).collect();
    let report = verify_mecke(&sampler, &probes, 20_000, 3.0, &mut seeded(7)).unwrap();
    assert!(report.passed(), "{report:#?}");
    assert_eq!(report.checks.len(), 15);
    let one = report.find("mecke/one").unwrap();
    assert!(one.estimate.abs() < 1e-12);
}

#[test]
fn mecke_rejects_bad_dimensions() {
    let sampler = DfSampler::new(t2(1.0));
    let p = MeckeProbe::new("bad", TrigFunction::cos(1.0, &[1, 0, 0]), vec![1.0], None);
    assert!(verify_mecke(&sampler, &[p], 10, 3.0, &mut seeded(0)).is_err());
}

#[test]
fn sethuraman_identity_and_negative_control() {
    let sampler = DfSampler::new(t2(1.0));
    let probes = vec![TrigFunction::constant(1.0, 2), TrigFunction::cos(1.0, &[1, 0])];
    let report = verify_sethuraman(&sampler, &probes, 20_000, 3.0, SethuramanMode::Identity, &mut seeded(8)).unwrap();
    assert!(report.passed(), "{report:#?}");
    assert!(report.find("sethuraman/probe0/ks").is_none());
    assert!(report.find("sethuraman/probe1/ks").is_some());

    // r ~ Beta(1, 2) instead of Beta(1, 1): E[(f★η^x_r)²] = ½·¼ + ⅙·½ = 5/24
    // against ¼, a gap of 1/24
    let control = SethuramanMode::NegativeControl { relocation_beta: 2.0 };
    let report = verify_sethuraman(&sampler, &probes, 100_000, 5.0, control, &mut seeded(9)).unwrap();
    let c = report.find("sethuraman/probe1/second_moment_detected").unwrap();
    assert_eq!(c.status, Status::Pass, "{c:?}");
    assert!((c.estimate - 1.0 / 24.0).abs() < 5.0 * c.stderr);
}

#[test]
fn verifiers_do_not_depend_on_thread_count() {
    let sampler = DfSampler::new(t2(1.0));
    let probes: Vec<MeckeProbe> = mecke_basket(1.0).into_iter().map(|p| p.0).collect();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| verify_mecke(&sampler, &probes, 10_000, 3.0, &mut seeded(10)).unwrap())
    };
    assert_eq!(run(1), run(4));
}

proptest! {
    #[test]
    fn stick_break_telescopes(r in prop::collection::vec(1e-6f64..=1.0, 0..200)) {
        let wv = stick_break(&r).unwrap();
        prop_assert!((wv.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reorder_preserves_multiset(s in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let total: f64 = s.iter().sum();
        let s: Vec<f64> = s.iter().map(|v| v / (total + 1.0)).collect();
        let tail = 1.0 - s.iter().sum::<f64>();
        let wv = WeightVector::new(s.clone(), tail).unwrap();
        let r = reorder(&wv);
        let mut a = s;
        a.sort_by(f64::total_cmp);
        let mut b = r.weights().to_vec();
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
        prop_assert!(r.weights().windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(reorder(&r), r);
    }
}
