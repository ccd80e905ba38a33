//! One line per acceptance criterion. Runs without the libtest harness so the
//! verdicts are always printed; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dinistat::algos::{stability_experiment, ExperimentConfig};
use dinistat::dini::{self, dini_directional, fd_oracle, DirectionalQuery, FdSchedule};
use dinistat::scan::{self, Counterexample, DEFAULT_LADDER};
use dinistat::stability::{self, StabilityCertificate};
use dinistat::zoo::{self, FACT_ZETA};
use dinistat::{Error, Expr, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Error>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "counterexample one-sided derivatives",
            budget: secs(1),
            run: c1_published_values_diff_cx,
        },
        Criterion {
            id: 2,
            name: "delta-stationary sets of the interval examples",
            budget: secs(5),
            run: c2_interval_examples,
        },
        Criterion {
            id: 3,
            name: "shrinkage on analytic entries",
            budget: secs(30),
            run: c3_analytic_shrinkage,
        },
        Criterion {
            id: 4,
            name: "counterexample witnesses block shrinkage",
            budget: secs(5),
            run: c4_counterexample_witnesses,
        },
        Criterion {
            id: 5,
            name: "certificate values and refusal",
            budget: secs(5),
            run: c5_certificates,
        },
        Criterion {
            id: 6,
            name: "two-sided stability experiment",
            budget: secs(120),
            run: c6_stability_experiment,
        },
        Criterion {
            id: 7,
            name: "derivative oracle and scaling",
            budget: secs(30),
            run: c7_oracle_agreement,
        },
        Criterion {
            id: 8,
            name: "canonical form equivalence",
            budget: secs(10),
            run: c8_canonical_equivalence,
        },
        Criterion {
            id: 9,
            name: "finite-values census",
            budget: secs(20),
            run: c9_census,
        },
    ];
    let mut all_pass = true;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = elapsed <= c.budget;
        let pass = ok && in_time;
        all_pass &= pass;
        println!(
            "criterion {} {} | {} | {} | {:.2}s of {}s{}",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { " (over budget)" }
        );
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn entry(name: &str) -> zoo::ZooEntry {
    zoo::get(name).expect("catalogue entry")
}

fn one_sided(f: &Expr, x: f64, s: f64) -> Result<f64, Error> {
    dini_directional(
        f,
        &DirectionalQuery::raw(vec![x], vec![s]).with_zeta(FACT_ZETA),
    )
}

fn c1_published_values_diff_cx() -> Outcome {
    let f = entry("diff_cx").expr;
    let mut worst: f64 = 0.0;
    // at 0 both one-sided derivatives are exact
    let right0 = one_sided(&f, 0.0, 1.0)?;
    let left0 = -one_sided(&f, 0.0, -1.0)?;
    let exact = right0 == 1.0 && left0 == -1.0;
    for k in 1..=5 {
        let x = 1.0 / (2.0 * f64::from(k) * PI);
        let left = -one_sided(&f, x, -1.0)?;
        let right = one_sided(&f, x, 1.0)?;
        worst = worst.max((left - 1.0).abs()).max(right.abs());
        for t in [0.1, 0.5, 1.0] {
            let x = 1.0 / (2.0 * f64::from(k) * PI - t);
            let expected = 1.0 - f64::cos(t);
            let right = one_sided(&f, x, 1.0)?;
            let left = -one_sided(&f, x, -1.0)?;
            worst = worst
                .max((right - expected).abs())
                .max((left - expected).abs());
        }
    }
    Ok((
        exact && worst <= 1e-10,
        format!("f'+(0)={right0} f'-(0)={left0}; worst residual {worst:.2e} (tol 1e-10)"),
    ))
}

/// Coordinates of the flagged points of a 1-D uniform grid.
fn flagged(f: &Expr, lo: f64, hi: f64, h: f64, delta: f64) -> Result<(GridSpec, Vec<f64>), Error> {
    let steps = ((hi - lo) / h).round() as usize + 1;
    let grid = GridSpec::uniform(&[lo], &[hi], &[steps])?;
    let pts = scan::delta_scan(f, &grid, delta)?;
    Ok((grid, pts.into_iter().map(|p| p.point[0]).collect()))
}

fn c2_interval_examples() -> Outcome {
    let h = 1e-4;
    let quad = entry("quad").expr;
    let mut ok = true;
    let mut notes = Vec::new();
    for delta in [0.1, 0.01] {
        let (grid, pts) = flagged(&quad, -1.0, 1.0, h, delta)?;
        let half = delta / 2.0;
        let expected: Vec<f64> = (0..grid.len())
            .map(|i| grid.point(i)[0])
            .filter(|x| x.abs() <= half)
            .collect();
        // contiguous runs on both sides; compare their ends within one grid point
        let contiguous = pts.windows(2).all(|w| (w[1] - w[0] - h).abs() < 1e-9);
        let lo_err = (pts[0] - expected[0]).abs();
        let hi_err = (pts[pts.len() - 1] - expected[expected.len() - 1]).abs();
        let count_err = pts.len().abs_diff(expected.len());
        let good = contiguous
            && lo_err <= h * (1.0 + 1e-9)
            && hi_err <= h * (1.0 + 1e-9)
            && count_err <= 2;
        ok &= good;
        notes.push(format!(
            "x^2 delta={delta}: {} flagged in [{:.4}, {:.4}] vs {} expected",
            pts.len(),
            pts[0],
            pts[pts.len() - 1],
            expected.len()
        ));
    }
    let double_abs = entry("double_abs").expr;
    let (_, pts) = flagged(&double_abs, -2.0, 2.0, h, 1.0)?;
    let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let strictly_inside = pts.iter().filter(|x| x.abs() < 1.0).count();
    let on_edge = pts.iter().filter(|x| x.abs() == 1.0).count();
    let beyond = pts
        .iter()
        .filter(|x| x.abs() > 1.0 + h * (1.0 + 1e-9))
        .count();
    ok &= beyond == 0;
    let g1 = dini::gf(&double_abs, &[1.0], &Default::default())?.gf_estimate;
    notes.push(format!(
        "|x+1|+|x-1| delta=1: {} flagged in [{lo}, {hi}], {strictly_inside} strictly inside (-1,1), {on_edge} at exactly +-1 (G_f(1)={g1}), {beyond} beyond one grid step",
        pts.len()
    ));
    Ok((ok, notes.join("; ")))
}

fn certificate(name: &str, h: f64) -> Result<StabilityCertificate, Error> {
    let e = entry(name);
    let grid = GridSpec::around(&e.x_star, e.r, h, e.domain())?;
    stability::certify(&e.expr, &e.x_star, e.r, &grid)
}

fn cert_step(dim: usize) -> f64 {
    if dim == 1 {
        1e-3
    } else {
        5e-3
    }
}

fn c3_analytic_shrinkage() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for e in zoo::all().into_iter().filter(|e| e.is_analytic()) {
        let n = e.expr.dim();
        let cert = match certificate(e.name, cert_step(n)) {
            Ok(c) => c,
            Err(Error::CertificationRefused { .. }) => {
                notes.push(format!("{}: no certificate (refused), excluded", e.name));
                continue;
            }
            Err(err) => return Err(err),
        };
        let h = if n == 1 { 1e-4 } else { 2e-3 };
        let grid = GridSpec::around(&e.x_star, cert.r1, h, e.domain())?.with_zeta(1e-12);
        let profile = scan::shrinkage_profile(&e.expr, &e.x_star, cert.r1, &DEFAULT_LADDER, &grid)?;
        let slack = grid.spacing();
        let monotone = profile.is_monotone(slack);
        let last = profile.last().sup_distance;
        let good = monotone && last < 0.1 * cert.r1;
        ok &= good;
        let sups: Vec<String> = profile
            .rows
            .iter()
            .map(|r| format!("{:.3e}", r.sup_distance))
            .collect();
        notes.push(format!(
            "{}: r1={:.4} sups=[{}]{}",
            e.name,
            cert.r1,
            sups.join(","),
            if good { "" } else { " NOT SHRINKING" }
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn c4_counterexample_witnesses() -> Outcome {
    let mut ok = true;
    let mut checked = 0;
    let mut min_margin = f64::INFINITY;
    for which in [Counterexample::Differentiable, Counterexample::Smooth] {
        let e = entry(which.zoo_name());
        for r0 in [0.05, 0.01] {
            for &delta in &DEFAULT_LADDER {
                let w = scan::counterexample_witness(which, r0, delta)?;
                let right = one_sided(&e.expr, w.x0, 1.0)?;
                let left = -one_sided(&e.expr, w.x0, -1.0)?;
                let stationary = right >= -delta && left <= delta;
                // a profile whose grid passes through the witness
                let grid = GridSpec::around(&[w.x0], r0 + w.x0.abs(), 1e-4, e.domain())?;
                let profile = scan::shrinkage_profile(&e.expr, &[0.0], r0, &[delta], &grid)?;
                let sup = profile.rows[0].sup_distance;
                let good = w.verified && stationary && w.x0.abs() >= w.bound && sup >= w.bound;
                ok &= good;
                min_margin = min_margin.min(sup - w.bound);
                checked += 1;
            }
        }
    }
    Ok((ok, format!("{checked} witnesses (2 families x r0 in {{0.05,0.01}} x 6 deltas); smallest profile margin above 1/(2k pi+1): {min_margin:.3e}")))
}

fn c5_certificates() -> Outcome {
    let h = 1e-4;
    let cert = certificate("quad", h)?;
    let lambda_ok = (cert.lambda0 - 0.32).abs() <= 2.0 * h;
    let r1_ok = (cert.r1 - 0.56569).abs() <= 2.0 * h;
    let refusal = match certificate("double_abs", h) {
        Err(Error::CertificationRefused {
            annulus_min,
            f_star,
            ..
        }) => Some((annulus_min - f_star) / 2.0),
        _ => None,
    };
    let refused = refusal.is_some_and(|l| l <= 0.0);
    Ok((
        lambda_ok && r1_ok && refused,
        format!(
            "quad: lambda0={:.6} r1={:.6} (tol {:.0e}); double_abs: {}",
            cert.lambda0,
            cert.r1,
            2.0 * h,
            match refusal {
                Some(l) => format!("refused with lambda0={l}"),
                None => "issued".to_string(),
            }
        ),
    ))
}

fn c6_stability_experiment() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["quad", "abs1d", "cross_abs2d"] {
        let e = entry(name);
        let cert = certificate(name, cert_step(e.expr.dim()))?;
        let eps = 0.1 * cert.r1;
        let cfg = ExperimentConfig {
            starts: 20,
            seeds: 16,
            ..ExperimentConfig::new(eps)
        };
        let rep = stability_experiment(&e.expr, &cert, &cfg)?;
        ok &= rep.pass() && rep.rows.len() >= 20 * 16 * 2;
        notes.push(format!(
            "{name}: {} runs, delta1={:.1e}, max limsup {:.2e} < eps {:.2e}: {}",
            rep.rows.len(),
            rep.delta,
            rep.max_limsup(),
            eps,
            if rep.pass() { "PASS" } else { "FAIL" }
        ));
    }

    let e = entry("double_abs");
    let cert = StabilityCertificate::manual(vec![0.0], 1.0, 0.5, 1.0);
    let cfg = ExperimentConfig {
        starts: 0,
        explicit_starts: vec![vec![0.9]],
        ..ExperimentConfig::new(0.4)
    };
    let rep = stability_experiment(&e.expr, &cert, &cfg)?;
    ok &= !rep.pass();
    notes.push(format!(
        "double_abs from 0.9: max limsup {:.3} vs eps 0.4: {}",
        rep.max_limsup(),
        if rep.pass() { "PASS" } else { "FAIL" }
    ));

    let e = entry("diff_cx");
    let cert = certificate("diff_cx", 1e-4)?;
    let eps = 0.1 * cert.r1;
    let mut failed = 0;
    for &delta in &DEFAULT_LADDER {
        let w = scan::counterexample_witness(Counterexample::Differentiable, cert.r1, delta)?;
        let cfg = ExperimentConfig {
            starts: 0,
            explicit_starts: vec![vec![w.x0]],
            delta: Some(delta),
            ..ExperimentConfig::new(eps)
        };
        let rep = stability_experiment(&e.expr, &cert, &cfg)?;
        if !rep.pass() {
            failed += 1;
        }
    }
    ok &= failed == DEFAULT_LADDER.len();
    notes.push(format!(
        "diff_cx (r1={:.4}) from witness starts: FAIL at {failed} of {} ladder deltas",
        cert.r1,
        DEFAULT_LADDER.len()
    ));
    Ok((ok, notes.join("; ")))
}

fn random_point(rng: &mut ChaCha8Rng, e: &zoo::ZooEntry, margin: f64) -> Vec<f64> {
    let d = e.domain();
    d.lo()
        .iter()
        .zip(d.hi())
        .map(|(a, b)| rng.random_range(a + margin..b - margin))
        .collect()
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if len > 0.1 && len <= 1.0 {
            return v.into_iter().map(|t| t / len).collect();
        }
    }
}

fn c7_oracle_agreement() -> Outcome {
    let schedule = FdSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ok = true;
    let mut notes = Vec::new();
    let mut worst_scaling: f64 = 0.0;
    for e in zoo::all() {
        let n = e.expr.dim();
        let prog = e.expr.canonical();
        let (mut compared, mut inconclusive, mut banded, mut worst) = (0, 0, 0, 0.0f64);
        for _ in 0..500 {
            let x = random_point(&mut rng, &e, 2.0 * schedule.alpha0);
            if prog
                .sign_vector(&x, FACT_ZETA)?
                .ambiguous
                .iter()
                .any(|a| *a)
            {
                banded += 1;
                continue;
            }
            let s = random_unit(&mut rng, n);
            let q = DirectionalQuery::raw(x.clone(), s.clone()).with_zeta(FACT_ZETA);
            let exact = dini_directional(&e.expr, &q)?;
            let fd = fd_oracle(&e.expr, &q, &schedule)?;
            if fd.converged {
                compared += 1;
                worst = worst.max((exact - fd.value).abs() / (1.0 + exact.abs()));
            } else {
                inconclusive += 1;
            }
            let lambda: f64 = rng.random_range(1e-3..10.0);
            let scaled: Vec<f64> = s.iter().map(|t| lambda * t).collect();
            let d_scaled = dini_directional(
                &e.expr,
                &DirectionalQuery::raw(x, scaled).with_zeta(FACT_ZETA),
            )?;
            worst_scaling = worst_scaling
                .max((d_scaled - lambda * exact).abs() / (1.0 + (lambda * exact).abs()));
        }
        ok &= worst <= 1e-6 && compared > 0;
        notes.push(format!("{}: {compared} compared, worst {worst:.1e}, {inconclusive} inconclusive, {banded} in band", e.name));
    }
    ok &= worst_scaling <= 1e-12;
    notes.push(format!("scaling worst {worst_scaling:.1e} (tol 1e-12)"));
    Ok((ok, notes.join("; ")))
}

fn c8_canonical_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut branch_mismatch = 0;
    let mut branch_vs_dag: f64 = 0.0;
    let mut closure_worst: f64 = 0.0;
    let mut kinks_tested = 0;
    for e in zoo::all() {
        let prog = e.expr.canonical();
        for _ in 0..1000 {
            let x = random_point(&mut rng, &e, 0.0);
            let a = e.expr.evaluate(&x)?;
            let b = prog.evaluate(&x)?;
            worst = worst.max((a - b).abs() / (1.0 + a.abs()));
            let sv = prog.sign_vector(&x, 0.0)?;
            // the branch replays the staged arithmetic, so it must match it bit for bit;
            // the DAG evaluates max/min directly and may differ in the last place
            if sv.signs.iter().all(|s| *s != 0) {
                let v = prog.eval_branch(&sv.signs, &x)?.0;
                if v != b {
                    branch_mismatch += 1;
                }
                branch_vs_dag = branch_vs_dag.max((v - a).abs() / (1.0 + a.abs()));
            }
        }
        for x in kink_points(e.name) {
            let f = e.expr.evaluate(&x)?;
            let sv = prog.sign_vector(&x, FACT_ZETA)?;
            assert!(sv.signs.contains(&0), "{}: {x:?} is not a kink", e.name);
            for signs in sv.completions() {
                let (v, _) = prog.eval_branch(&signs, &x)?;
                closure_worst = closure_worst.max((v - f).abs() / (1.0 + f.abs()));
            }
            kinks_tested += 1;
        }
    }
    Ok((
        worst <= 1e-12 && branch_mismatch == 0 && branch_vs_dag <= 1e-12 && closure_worst <= 1e-12,
        format!(
            "equivalence worst {worst:.1e} (tol 1e-12); {branch_mismatch} branch values differing from the staged value, worst against the DAG {branch_vs_dag:.1e}; closure worst {closure_worst:.1e} over {kinks_tested} kinks"
        ),
    ))
}

fn kink_points(name: &str) -> Vec<Vec<f64>> {
    let inv = |k: f64| 1.0 / (k * PI);
    match name {
        "abs1d" => vec![vec![0.0]],
        "double_abs" => vec![vec![-1.0], vec![1.0]],
        "two_pits" => vec![vec![0.0]],
        "cross_abs2d" => vec![vec![0.0, 0.0], vec![0.0, 0.3], vec![-0.7, 0.0]],
        "diff_cx" | "smooth_cx" => {
            let mut v = vec![vec![0.0]];
            for k in 1..=5 {
                v.push(vec![inv(2.0 * f64::from(k))]);
                v.push(vec![-inv(2.0 * f64::from(k) - 1.0)]);
            }
            v
        }
        _ => Vec::new(),
    }
}

fn c9_census() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["quad", "abs1d", "double_abs", "two_pits"] {
        let e = entry(name);
        // spacing 1e-3 puts every minimiser of these entries on the grid
        let d = e.domain();
        let steps = ((d.hi()[0] - d.lo()[0]) / 1e-3).round() as usize + 1;
        let grid = GridSpec::over_box(d, steps)?.with_zeta(1e-12);
        let coarse = scan::value_census(&e.expr, &grid, scan::CENSUS_DELTA, None)?;
        let fine = scan::value_census(&e.expr, &grid.refine(2), scan::CENSUS_DELTA, None)?;
        let (a, b) = (coarse.clusters.len(), fine.clusters.len());
        ok &= a == 1 && b == 1;
        notes.push(format!("{name}: {a} -> {b}"));
    }
    Ok((
        ok,
        format!("clusters coarse -> refined: {}", notes.join(", ")),
    ))
}
