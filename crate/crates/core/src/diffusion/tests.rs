use super::*;
use crate::cylinder::{CylinderFunction, Polynomial, Rho, TestFunction};
use crate::manifold::{Manifold, TrigFunction};
use crate::random_measures::TailPolicy;
use crate::rng::seeded;
use crate::stats::{ks_critical, ks_two_sample, Moments};

fn t2() -> Manifold {
    Manifold::flat_torus(2, 1.0).unwrap()
}

fn sampler() -> DfSampler {
    DfSampler::new(t2())
}

fn u_cos() -> CylinderFunction {
    CylinderFunction::star(TestFunction::new(TrigFunction::cos(1.0, &[1, 0]), Rho::cutoff(0.05, 0.05)))
}

fn fixed(m: Manifold, weights: Vec<f64>, locs: Vec<Vec<f64>>) -> AtomicMeasure {
    let tail = 1.0 - weights.iter().sum::<f64>();
    AtomicMeasure::new(m, weights, tail.max(0.0), locs).unwrap()
}

#[test]
fn grid_validation() {
    assert!(check_grid(&[0.0, 0.1, 0.2]).is_ok());
    assert!(check_grid(&[0.1, 0.2]).is_err());
    assert!(check_grid(&[0.0, 0.2, 0.2]).is_err());
    assert!(check_grid(&[0.0, f64::INFINITY]).is_err());
    let g = uniform_grid(0.1, 1.0).unwrap();
    assert_eq!(g.len(), 11);
    assert_eq!(*g.last().unwrap(), 1.0);
    assert!(uniform_grid(0.0, 1.0).is_err());
    let mut eta = AtomicMeasure::dirac(t2(), &[0.5, 0.5]).unwrap();
    assert!(evolve(&mut eta, 0.0, &mut seeded(1)).is_err());
}

#[test]
fn atom_variance_is_t_over_weight() {
    let m = t2().with_side(1000.0).unwrap();
    let eta = fixed(m, vec![0.25, 0.75], vec![vec![500.0, 500.0], vec![200.0, 200.0]]);
    let t = 0.1;
    let n = 20_000;
    let mut rng = seeded(11);
    let (mut a, mut b) = (Moments::default(), Moments::default());
    for _ in 0..n {
        let next = step(&eta, t, &mut rng).unwrap();
        a.push(next.location(0)[0] - 500.0);
        b.push(next.location(1)[1] - 200.0);
    }
    for (mo, s) in [(a, 0.25), (b, 0.75)] {
        let target = t / s;
        let se = target * (2.0 / n as f64).sqrt();
        assert!((mo.variance() - target).abs() < 4.0 * se, "variance {} vs {target}", mo.variance());
        assert!(mo.mean.abs() < 4.0 * (target / n as f64).sqrt());
    }
}

#[test]
fn dirac_moves_as_plain_brownian_motion() {
    let m = t2();
    let mut eta = AtomicMeasure::dirac(m, &[0.3, 0.7]).unwrap();
    let mut x = vec![0.3, 0.7];
    let mut out = vec![0.0; 2];
    let (mut r1, mut r2) = (seeded(5), seeded(5));
    for _ in 0..50 {
        evolve(&mut eta, 0.01, &mut r1).unwrap();
        m.brownian_increment(&x, 0.01, &mut r2, &mut out).unwrap();
        x.copy_from_slice(&out);
    }
    assert_eq!(eta.location(0), x.as_slice());
    assert_eq!(eta.weights(), &[1.0]);
}

#[test]
fn weight_scaling_is_time_change() {
    let m = t2();
    let heavy = AtomicMeasure::dirac(m, &[0.1, 0.2]).unwrap();
    let light = AtomicMeasure::new(m, vec![0.5], 0.5, vec![vec![0.1, 0.2]]).unwrap();
    let a = step(&light, 0.03, &mut seeded(9)).unwrap();
    let b = step(&heavy, 0.06, &mut seeded(9)).unwrap();
    assert_eq!(a.location(0), b.location(0));
}

#[test]
fn markov_property_two_steps_match_one() {
    let m = t2();
    let eta = fixed(m, vec![0.6, 0.4], vec![vec![0.1, 0.1], vec![0.6, 0.3]]);
    let n = 4000;
    let mut rng = seeded(21);
    let mut one = Vec::with_capacity(n);
    let mut two = Vec::with_capacity(n);
    for _ in 0..n {
        one.push(step(&eta, 0.08, &mut rng).unwrap().location(1)[0]);
        let mid = step(&eta, 0.03, &mut rng).unwrap();
        two.push(step(&mid, 0.05, &mut rng).unwrap().location(1)[0]);
    }
    let d = ks_two_sample(&one, &two);
    assert!(d < ks_critical(n as f64 / 2.0, 1e-3), "KS {d}");
}

#[test]
fn weights_are_bitwise_frozen() {
    let s = sampler();
    let mut rng = seeded(3);
    let mut eta = s.sample(&mut rng).unwrap();
    let w0 = eta.weights().to_vec();
    let tail0 = eta.tail();
    walk(&mut eta, &uniform_grid(0.01, 1.0).unwrap(), &mut rng, |_, _, e| {
        assert_eq!(e.weights(), w0.as_slice());
        assert_eq!(e.tail(), tail0);
        Ok(())
    })
    .unwrap();
}

#[test]
fn zero_weights_do_not_move() {
    let eta = AtomicMeasure::new(t2(), vec![0.5, 0.0], 0.5, vec![vec![0.1, 0.1], vec![0.4, 0.4]]).unwrap();
    let next = step(&eta, 0.1, &mut seeded(2)).unwrap();
    assert_eq!(next.location(1), &[0.4, 0.4]);
}

#[test]
fn constant_and_weight_only_functions_give_null_martingale() {
    let grid = uniform_grid(0.01, 0.1).unwrap();
    let weight_only = CylinderFunction::new(
        Polynomial::new(vec![(1.0, vec![2])]),
        vec![TestFunction::new(TrigFunction::constant(1.0, 2), Rho::cutoff(0.05, 0.05).with_poly(vec![0.0, 1.0]))],
    )
    .unwrap();
    for u in [CylinderFunction::constant(2.5, 2), weight_only] {
        let r = verify_martingale(&sampler(), &Initial::Stationary, &u, &[], &grid, 200, 3.0, 0.05, &mut seeded(4))
            .unwrap();
        assert!(r.mean_m.iter().all(|m| *m == 0.0), "{:?}", r.mean_m);
        assert!(r.qv_realized.iter().all(|m| *m == 0.0));
        assert!(r.qv_predicted.iter().all(|m| *m == 0.0));
        assert!(r.report.passed());
    }
}

#[test]
fn martingale_small_scale() {
    let grid = uniform_grid(2e-3, 0.1).unwrap();
    let g = CylinderFunction::star(TestFunction::new(TrigFunction::sin(1.0, &[0, 1]), Rho::one()));
    let r = verify_martingale(&sampler(), &Initial::Stationary, &u_cos(), &[g], &grid, 1000, 4.0, 0.05, &mut seeded(8))
        .unwrap();
    assert!(r.report.passed(), "{:#?}", r.report.failures().collect::<Vec<_>>());
    assert_eq!(r.t.len(), grid.len());
    assert!(r.qv_predicted.last().unwrap() > &0.0);
    assert!(r.report.find("martingale/orthogonality_g0").is_some());
}

#[test]
fn martingale_rejects_unbounded_drift() {
    let u = CylinderFunction::star(TestFunction::new(TrigFunction::cos(1.0, &[1, 0]), Rho::one()));
    let grid = uniform_grid(0.01, 0.02).unwrap();
    assert!(verify_martingale(&sampler(), &Initial::Stationary, &u, &[], &grid, 4, 3.0, 0.05, &mut seeded(1)).is_err());
}

#[test]
fn invariance_holds() {
    let probes = vec![
        TestFunction::new(TrigFunction::cos(1.0, &[1, 0]), Rho::one()),
        TestFunction::new(TrigFunction::sin(1.0, &[1, 1]), Rho::cutoff(0.05, 0.05)),
    ];
    let r = verify_invariance(&sampler(), &probes, &[0.05, 0.2], 3000, 4.0, &mut seeded(12)).unwrap();
    assert!(r.passed(), "{:#?}", r.failures().collect::<Vec<_>>());
    assert_eq!(r.find("invariance/weights_frozen").unwrap().estimate, 0.0);
}

#[test]
fn ergodic_component_equilibrates() {
    let w = WeightVector::new(vec![0.5, 0.3, 0.2], 0.0).unwrap();
    let windows = vec![Window { lo: vec![0.0, 0.0], hi: vec![0.5, 0.5] }, Window { lo: vec![0.2, 0.6], hi: vec![0.3, 0.9] }];
    let probes = vec![TrigFunction::cos(1.0, &[1, 0]).plus(&TrigFunction::constant(0.5, 2))];
    let r = verify_ergodic_component(&sampler(), &w, &probes, &windows, &[0.1, 0.5], 4000, 4.0, &mut seeded(13)).unwrap();
    assert!(r.passed(), "{:#?}", r.failures().collect::<Vec<_>>());
    let bad = Window { lo: vec![0.5, 0.0], hi: vec![0.4, 1.0] };
    assert!(verify_ergodic_component(&sampler(), &w, &probes, &[bad], &[0.1], 10, 4.0, &mut seeded(1)).is_err());
}

#[test]
fn energy_matches_minus_u_lu() {
    let e = dirichlet_energy(&sampler(), &u_cos(), 20_000, 4.0, &mut seeded(14)).unwrap();
    assert!(e.report.passed(), "{:#?}", e.report);
    assert!(e.energy > 0.0);
    assert!((e.energy - e.minus_u_lu).abs() < 4.0 * (e.stderr + e.minus_u_lu_stderr));
}

#[test]
fn path_csv_round_trip() {
    let s = sampler().with_n_atoms(5).unwrap().with_tail_policy(TailPolicy::Keep);
    let grid = uniform_grid(0.05, 0.1).unwrap();
    let paths = simulate(&s, &Initial::Stationary, &grid, 3, &mut seeded(15)).unwrap();
    let mut buf = Vec::new();
    write_paths_csv(&paths, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("path_id,t,atom_id,weight,coord_1,coord_2\n"));
    let rows = read_paths_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 3 * 3 * 5);
    let r = &rows[5 + 2];
    assert_eq!((r.path_id, r.t, r.atom_id), (0, 0.05, 2));
    assert_eq!(r.weight, paths[0].states[1].weights()[2]);
    assert_eq!(r.coords, paths[0].states[1].location(2));
    assert!(read_paths_csv("path_id,t,weight\n".as_bytes()).is_err());
    assert!(read_paths_csv("path_id,t,atom_id,weight,coord_1\n0,0,0,x,0.1\n".as_bytes()).is_err());
}

#[test]
fn results_independent_of_thread_count() {
    let grid = uniform_grid(0.01, 0.05).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let paths = simulate(&sampler(), &Initial::Stationary, &grid, 40, &mut seeded(16)).unwrap();
            let mart =
                verify_martingale(&sampler(), &Initial::Stationary, &u_cos(), &[], &grid, 40, 3.0, 0.05, &mut seeded(17))
                    .unwrap();
            (paths, mart)
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn metric_scaling_is_time_change() {
    let a = 2.5;
    let m = t2();
    let scaled = m.with_metric_scale(a).unwrap();
    let locs = vec![vec![0.1, 0.2], vec![0.7, 0.4]];
    let plain = fixed(m, vec![0.6, 0.4], locs.clone());
    let metric = fixed(scaled, vec![0.6, 0.4], locs);
    let x = step(&metric, 0.05, &mut seeded(10)).unwrap();
    let y = step(&plain, 0.05 / a, &mut seeded(10)).unwrap();
    for (p, q) in x.coords().iter().zip(y.coords()) {
        assert!((p - q).abs() < 1e-15, "{p} vs {q}");
    }
}
