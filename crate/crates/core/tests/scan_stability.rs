use dinistat::scan::{self, value_census, CENSUS_DELTA, DEFAULT_LADDER};
use dinistat::stability::{self, certify, ANNULUS};
use dinistat::zoo;
use dinistat::{Error, GridSpec};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn certificates_are_internally_consistent() {
    for name in ["quad", "abs1d", "two_pits", "cross_abs2d"] {
        let e = zoo::get(name).unwrap();
        let h = if e.expr.dim() == 1 { 1e-3 } else { 1e-2 };
        let grid = GridSpec::around(&e.x_star, e.r, h, e.domain()).unwrap();
        let c = certify(&e.expr, &e.x_star, e.r, &grid).unwrap();
        assert!(c.r1 > 0.0 && c.r1 <= ANNULUS.0 * e.r);
        for p in grid.points_in(e.domain()) {
            let d = dist(&p, &e.x_star);
            let v = e.expr.evaluate(&p).unwrap();
            if d <= c.r1 {
                assert!(
                    v <= c.f_star + c.lambda0 + 1e-12,
                    "{name}: {p:?} above the sublevel"
                );
            }
            if d >= ANNULUS.0 * e.r * (1.0 - 1e-12) && d <= ANNULUS.1 * e.r * (1.0 + 1e-12) {
                assert!(
                    v >= c.f_star + 2.0 * c.lambda0 - 1e-12,
                    "{name}: {p:?} below the annulus bound"
                );
            }
        }
    }
}

#[test]
fn halving_the_step_moves_the_certificate_within_resolution() {
    for name in ["quad", "abs1d", "two_pits"] {
        let e = zoo::get(name).unwrap();
        let h = 1e-3;
        let coarse = certify(
            &e.expr,
            &e.x_star,
            e.r,
            &GridSpec::around(&e.x_star, e.r, h, e.domain()).unwrap(),
        )
        .unwrap();
        let fine = certify(
            &e.expr,
            &e.x_star,
            e.r,
            &GridSpec::around(&e.x_star, e.r, h / 2.0, e.domain()).unwrap(),
        )
        .unwrap();
        let bound = coarse.lipschitz.max(1.0) * h;
        assert!(
            (coarse.lambda0 - fine.lambda0).abs() <= bound,
            "{name}: lambda0 moved"
        );
        assert!((coarse.r1 - fine.r1).abs() <= bound, "{name}: r1 moved");
    }
}

#[test]
fn refusal_happens_exactly_when_the_annulus_is_not_higher() {
    for e in zoo::all() {
        let h = if e.expr.dim() == 1 { 2e-3 } else { 2e-2 };
        let grid = GridSpec::around(&e.x_star, e.r, h, e.domain()).unwrap();
        let f_star = e.expr.evaluate(&e.x_star).unwrap();
        let annulus_min = grid
            .points_in(e.domain())
            .into_iter()
            .filter(|p| {
                let d = dist(p, &e.x_star);
                d >= ANNULUS.0 * e.r - 1e-12 * e.r && d <= ANNULUS.1 * e.r + 1e-12 * e.r
            })
            .map(|p| e.expr.evaluate(&p).unwrap())
            .fold(f64::INFINITY, f64::min);
        let result = certify(&e.expr, &e.x_star, e.r, &grid);
        assert_eq!(
            annulus_min <= f_star,
            matches!(result, Err(Error::CertificationRefused { .. })),
            "{}",
            e.name
        );
    }
}

#[test]
fn certificate_records_round_trip_and_refusals_do_not_parse() {
    let e = zoo::get("quad").unwrap();
    let grid = GridSpec::around(&e.x_star, e.r, 1e-3, e.domain()).unwrap();
    let c = certify(&e.expr, &e.x_star, e.r, &grid).unwrap();
    let back = stability::parse_record(&c.to_record()).unwrap();
    assert_eq!(back.r1, c.r1);
    assert_eq!(back.lambda0, c.lambda0);

    let d = zoo::get("double_abs").unwrap();
    let err = certify(
        &d.expr,
        &d.x_star,
        d.r,
        &GridSpec::around(&d.x_star, d.r, 1e-3, d.domain()).unwrap(),
    )
    .unwrap_err();
    let record = stability::refusal_record(&d.x_star, d.r, 1e-3, &err);
    assert!(record.contains("refused=true"));
    assert!(stability::parse_record(&record).is_err());
}

#[test]
fn two_pits_has_a_unique_minimum_near_each_pit() {
    let e = zoo::get("two_pits").unwrap();
    let grid = GridSpec::around(&e.x_star, e.r, 1e-3, e.domain()).unwrap();
    let rep = stability::verify_unique_min(&e.expr, &e.x_star, e.r, &grid).unwrap();
    assert!(rep.is_unique(), "margin {}", rep.margin);
}

#[test]
fn census_is_stable_under_refinement_on_every_analytic_entry() {
    for name in ["quad", "abs1d", "double_abs", "two_pits", "cross_abs2d"] {
        let e = zoo::get(name).unwrap();
        let d = e.domain();
        let grid = if e.expr.dim() == 1 {
            let steps = ((d.hi()[0] - d.lo()[0]) / 1e-3).round() as usize + 1;
            GridSpec::over_box(d, steps).unwrap()
        } else {
            GridSpec::over_box(d, 101).unwrap()
        }
        .with_zeta(1e-12);
        let a = value_census(&e.expr, &grid, CENSUS_DELTA, None).unwrap();
        let b = value_census(&e.expr, &grid.refine(2), CENSUS_DELTA, None).unwrap();
        assert_eq!(a.clusters.len(), b.clusters.len(), "{name}");
        assert_eq!(a.clusters.len(), 1, "{name}");
    }
}

#[test]
fn profiles_do_not_grow_as_delta_shrinks() {
    for name in ["quad", "two_pits", "cross_abs2d"] {
        let e = zoo::get(name).unwrap();
        let h = if e.expr.dim() == 1 { 1e-4 } else { 5e-3 };
        let grid = GridSpec::around(&e.x_star, 0.5, h, e.domain())
            .unwrap()
            .with_zeta(1e-12);
        let p = scan::shrinkage_profile(&e.expr, &e.x_star, 0.5, &DEFAULT_LADDER, &grid).unwrap();
        assert!(p.is_monotone(grid.spacing()), "{name}");
        assert!(p.last().sup_distance < p.rows[0].sup_distance || p.rows[0].sup_distance == 0.0);
    }
}

#[test]
fn counterexample_profile_does_not_shrink() {
    let e = zoo::get("diff_cx").unwrap();
    let w = scan::counterexample_witness(scan::Counterexample::Differentiable, 0.05, 1e-6).unwrap();
    let grid = GridSpec::around(&[w.x0], 0.1, 1e-4, e.domain()).unwrap();
    let p = scan::shrinkage_profile(&e.expr, &[0.0], 0.05, &DEFAULT_LADDER, &grid).unwrap();
    assert!(p.last().sup_distance >= w.bound);
}

#[test]
fn scan_csv_is_deterministic_and_rfc_shaped() {
    let e = zoo::get("cross_abs2d").unwrap();
    let grid = GridSpec::over_box(e.domain(), 21).unwrap();
    let run = || {
        let pts = scan::delta_scan(&e.expr, &grid, 1.5).unwrap();
        let mut out = Vec::new();
        scan::write_scan_csv(&mut out, 2, 1.5, &pts).unwrap();
        String::from_utf8(out).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    assert!(a.starts_with("delta,x0,x1,verdict,gf\n"));
    assert!(a.lines().count() > 1);
}
