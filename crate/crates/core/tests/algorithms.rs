use dinistat::algos::{
    check_contract, run_gradient_sampling, run_subgradient_descent, stability_experiment,
    AlgoParams, Algorithm, ExperimentConfig, Termination, SEGMENT_SAMPLES,
};
use dinistat::expr::dsl;
use dinistat::scan::{counterexample_witness, Counterexample, DEFAULT_LADDER};
use dinistat::stability::{certify, StabilityCertificate};
use dinistat::zoo;
use dinistat::GridSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(delta: f64, lambda: f64, eta: f64, seed: u64) -> AlgoParams {
    AlgoParams {
        delta,
        lambda,
        eta,
        seed,
        max_iter: 300,
        ..AlgoParams::default()
    }
}

#[test]
fn every_run_honours_its_own_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for e in zoo::all() {
        let d = e.domain();
        for _ in 0..10 {
            let x0: Vec<f64> = d
                .lo()
                .iter()
                .zip(d.hi())
                .map(|(a, b)| rng.random_range(*a..*b))
                .collect();
            let p = params(1e-2, 0.1, 0.05, rng.random());
            for alg in Algorithm::BOTH {
                let t = alg.run(&e.expr, &x0, &p).unwrap();
                let c = check_contract(&t, &e.expr, p.delta, p.lambda, SEGMENT_SAMPLES, p.zeta)
                    .unwrap();
                assert!(
                    c.ultimately_decreasing,
                    "{} {}: rise {}",
                    e.name,
                    alg.name(),
                    c.worst_increase
                );
                assert!(
                    c.path_bounded,
                    "{} {}: segment max {}",
                    e.name,
                    alg.name(),
                    c.max_segment_value
                );
                assert!(
                    c.result_stationary,
                    "{} {} from {x0:?}: G_f {}",
                    e.name,
                    alg.name(),
                    c.worst_gf
                );
                for w in t.values.windows(2) {
                    assert!(
                        w[1] <= w[0] + 1e-12,
                        "{} {}: value rose",
                        e.name,
                        alg.name()
                    );
                }
            }
        }
    }
}

#[test]
fn identical_inputs_give_identical_trajectories() {
    let e = zoo::get("cross_abs2d").unwrap();
    for alg in Algorithm::BOTH {
        let p = params(1e-3, 0.2, 0.05, 42);
        let a = alg.run(&e.expr, &[0.4, -0.1], &p).unwrap();
        let b = alg.run(&e.expr, &[0.4, -0.1], &p).unwrap();
        let bits = |t: &dinistat::algos::Trajectory| {
            t.points
                .iter()
                .flatten()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn witness_start_is_already_stationary() {
    let e = zoo::get("diff_cx").unwrap();
    let w = counterexample_witness(Counterexample::Differentiable, 0.05, 0.02).unwrap();
    let t = run_subgradient_descent(&e.expr, &[w.x0], &params(0.02, 0.1, 0.01, 0)).unwrap();
    assert_eq!(t.termination, Termination::StationaryFound);
    assert_eq!(t.len(), 1);
    assert!((t.last()[0] - 0.0267).abs() < 5e-4);
}

#[test]
fn gradient_sampling_reaches_the_corner_of_the_cross() {
    let f = dsl::parse("(+ (abs x0) (abs x1))", None).unwrap();
    let t = run_gradient_sampling(&f, &[0.3, -0.2], &params(0.1, 0.5, 0.05, 3)).unwrap();
    let r = t.last().iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(r < 0.05, "ended at {:?}", t.last());
}

#[test]
fn gradient_sampling_on_the_parabola_stops_in_the_widened_interval() {
    let f = dsl::parse("(pow x0 2)", None).unwrap();
    let p = AlgoParams {
        sample_radius: 0.01,
        ..params(0.01, 0.5, 0.1, 5)
    };
    let t = run_gradient_sampling(&f, &[0.4], &p).unwrap();
    assert_eq!(t.termination, Termination::StationaryFound);
    assert!(t.last()[0].abs() <= p.delta / 2.0 + p.sample_radius);
}

#[test]
fn start_outside_the_domain_is_rejected() {
    let e = zoo::get("quad").unwrap();
    assert!(matches!(
        run_subgradient_descent(&e.expr, &[1.5], &AlgoParams::default()),
        Err(dinistat::Error::Argument(_))
    ));
}

#[test]
fn analytic_entries_are_stable_at_two_tolerances() {
    for name in ["quad", "abs1d", "two_pits", "cross_abs2d"] {
        let e = zoo::get(name).unwrap();
        let h = if e.expr.dim() == 1 { 1e-3 } else { 1e-2 };
        let grid = GridSpec::around(&e.x_star, e.r, h, e.domain()).unwrap();
        let cert = certify(&e.expr, &e.x_star, e.r, &grid).unwrap();
        for frac in [0.1, 0.5] {
            let cfg = ExperimentConfig {
                starts: 10,
                seeds: 4,
                ..ExperimentConfig::new(frac * cert.r1)
            };
            let rep = stability_experiment(&e.expr, &cert, &cfg).unwrap();
            assert!(
                rep.pass(),
                "{name} at eps = {frac} r1: max limsup {}",
                rep.max_limsup()
            );
            assert!(
                rep.rows.iter().all(|r| r.contract_holds),
                "{name}: contract broken"
            );
        }
    }
}

#[test]
fn flat_bottom_and_counterexamples_are_unstable() {
    let e = zoo::get("double_abs").unwrap();
    let cert = StabilityCertificate::manual(vec![0.0], 1.0, 0.5, 1.0);
    let cfg = ExperimentConfig {
        starts: 0,
        explicit_starts: vec![vec![0.9]],
        seeds: 2,
        ..ExperimentConfig::new(0.4)
    };
    assert!(!stability_experiment(&e.expr, &cert, &cfg).unwrap().pass());

    for which in [Counterexample::Differentiable, Counterexample::Smooth] {
        let e = zoo::get(which.zoo_name()).unwrap();
        let r1 = 0.05;
        let cert = StabilityCertificate::manual(vec![0.0], e.r, 0.01, r1);
        for &delta in &DEFAULT_LADDER {
            let w = counterexample_witness(which, r1, delta).unwrap();
            let cfg = ExperimentConfig {
                starts: 0,
                explicit_starts: vec![vec![w.x0]],
                seeds: 2,
                delta: Some(delta),
                ..ExperimentConfig::new(0.1 * r1)
            };
            let rep = stability_experiment(&e.expr, &cert, &cfg).unwrap();
            assert!(!rep.pass(), "{} at delta {delta}", which.zoo_name());
        }
    }
}

#[test]
fn csv_outputs_are_reproducible() {
    let e = zoo::get("quad").unwrap();
    let p = params(1e-3, 0.1, 0.05, 1);
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_gradient_sampling(&e.expr, &[0.5], &p)
        .unwrap()
        .write_csv(&mut a)
        .unwrap();
    run_gradient_sampling(&e.expr, &[0.5], &p)
        .unwrap()
        .write_csv(&mut b)
        .unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("k,x0,f,step_norm\n"));
}
