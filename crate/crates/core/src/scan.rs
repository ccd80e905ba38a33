//! Grid scans of δ-stationary sets.
//!
//! A scan only ever sees grid points, so every distance it reports comes with
//! the grid's resolution bound `h·√n`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::dini::{self, DirectionSampler, GfOptions, StationarityVerdict, Tri};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::GridSpec;

/// Default δ ladder `1e-1, 1e-2, …, 1e-6`.
pub const DEFAULT_LADDER: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// A grid point that was not refuted.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    /// Row-major grid index.
    pub index: usize,
    pub point: Vec<f64>,
    pub verdict: Tri,
    pub gf: f64,
}

fn options(grid: &GridSpec) -> GfOptions {
    GfOptions {
        sampler: DirectionSampler::Auto,
        zeta: grid.zeta,
    }
}

/// `G_f` at every grid point, in grid order.
pub fn gauge_grid(expr: &Expr, grid: &GridSpec) -> Result<Vec<(Vec<f64>, StationarityVerdict)>> {
    if grid.is_empty() {
        return Err(Error::Argument("empty grid".into()));
    }
    grid.check_within(expr.domain())?;
    let opts = options(grid);
    grid.points_in(expr.domain())
        .into_par_iter()
        .map(|p| {
            let v = dini::gf(expr, &p, &opts)?;
            Ok((p, v))
        })
        .collect()
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "delta must be positive, got {delta}"
        )))
    }
}

/// Grid points whose δ-stationarity verdict is `yes` or `unknown`, in grid order.
pub fn delta_scan(expr: &Expr, grid: &GridSpec, delta: f64) -> Result<Vec<ScanPoint>> {
    check_delta(delta)?;
    let gauges = gauge_grid(expr, grid)?;
    Ok(gauges
        .into_iter()
        .enumerate()
        .filter_map(|(index, (point, v))| {
            let verdict = dini::classify(&v, delta);
            (verdict != Tri::No).then_some(ScanPoint {
                index,
                point,
                verdict,
                gf: v.gf_estimate,
            })
        })
        .collect())
}

/// CSV rows `delta,x0,…,verdict,gf`.
pub fn write_scan_csv<W: Write>(
    out: W,
    dim: usize,
    delta: f64,
    points: &[ScanPoint],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["delta".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend(["verdict".to_string(), "gf".to_string()]);
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![delta.to_string()];
        row.extend(p.point.iter().map(f64::to_string));
        row.push(p.verdict.to_string());
        row.push(p.gf.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub delta: f64,
    /// Largest distance from the centre among `yes` points (0 if there are none).
    pub sup_distance: f64,
    pub count: usize,
    /// Points that could be neither confirmed nor refuted.
    pub unknown: usize,
    /// `yes / (yes + unknown)`, 1 when both are zero.
    pub decisive_fraction: f64,
    pub resolution_bound: f64,
}

/// Sup-distance of detected δ-stationary points from `center`, per δ.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageProfile {
    pub center: Vec<f64>,
    pub r1: f64,
    /// Sorted by decreasing δ.
    pub rows: Vec<ProfileRow>,
}

impl ShrinkageProfile {
    /// Whether sup-distances never grow by more than `slack` as δ decreases.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sup_distance <= w[0].sup_distance + slack)
    }

    pub fn last(&self) -> &ProfileRow {
        self.rows.last().expect("profiles have at least one row")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "delta",
            "sup_distance",
            "count",
            "decisive_fraction",
            "resolution_bound",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.delta.to_string(),
                r.sup_distance.to_string(),
                r.count.to_string(),
                r.decisive_fraction.to_string(),
                r.resolution_bound.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scans the grid points inside `B(center, r1)` once and thresholds the
/// gauge at every δ of `deltas` (which must be strictly decreasing).
pub fn shrinkage_profile(
    expr: &Expr,
    center: &[f64],
    r1: f64,
    deltas: &[f64],
    grid: &GridSpec,
) -> Result<ShrinkageProfile> {
    expr.domain().check(center)?;
    if !(r1 > 0.0) {
        return Err(Error::Argument(format!("r1 must be positive, got {r1}")));
    }
    if deltas.is_empty() {
        return Err(Error::Argument("no deltas given".into()));
    }
    for d in deltas {
        check_delta(*d)?;
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument("deltas must be strictly decreasing".into()));
    }
    let gauges = gauge_grid(expr, grid)?;
    let reach = r1 * (1.0 + 1e-12);
    let inside: Vec<(f64, StationarityVerdict)> = gauges
        .into_iter()
        .map(|(p, v)| (distance(&p, center), v))
        .filter(|(d, _)| *d <= reach)
        .collect();
    if inside.is_empty() {
        return Err(Error::Argument(
            "no grid point falls inside the ball".into(),
        ));
    }
    let resolution_bound = grid.resolution_bound();
    let rows = deltas
        .iter()
        .map(|&delta| {
            let mut sup: f64 = 0.0;
            let (mut yes, mut unknown) = (0, 0);
            for (d, v) in &inside {
                match dini::classify(v, delta) {
                    Tri::Yes => {
                        yes += 1;
                        sup = sup.max(*d);
                    }
                    Tri::Unknown => unknown += 1,
                    Tri::No => {}
                }
            }
            let decisive_fraction = if yes + unknown == 0 {
                1.0
            } else {
                yes as f64 / (yes + unknown) as f64
            };
            ProfileRow {
                delta,
                sup_distance: sup.min(r1),
                count: yes,
                unknown,
                decisive_fraction,
                resolution_bound,
            }
        })
        .collect();
    Ok(ShrinkageProfile {
        center: center.to_vec(),
        r1,
        rows,
    })
}

/// The two counterexample families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counterexample {
    /// `min{0, x² sin(1/x)} - ∫₀ˣ 2u sin(1/u) du + |x|`
    Differentiable,
    /// `min{0, h(|x|)} - g(|x|)` built from the flat envelope `e^{-1/x}`.
    Smooth,
}

impl Counterexample {
    pub fn zoo_name(self) -> &'static str {
        match self {
            Counterexample::Differentiable => "diff_cx",
            Counterexample::Smooth => "smooth_cx",
        }
    }

    /// `k` for a ball of radius `r0`.
    pub fn k(self, r0: f64) -> u32 {
        let base = (1.0 / (2.0 * PI * r0)).ceil() as u32;
        match self {
            Counterexample::Differentiable => base + 2,
            Counterexample::Smooth => base + 1,
        }
    }

    /// `C(k) = ½(2kπ)² e^{2kπ}`, the curvature constant of the smooth family.
    pub fn curvature(k: u32) -> f64 {
        let a = 2.0 * f64::from(k) * PI;
        0.5 * a * a * a.exp()
    }

    /// Offset `t` for tolerance δ.
    pub fn t(self, k: u32, delta: f64) -> f64 {
        match self {
            Counterexample::Differentiable => (2.0 * delta).sqrt().min(1.0),
            Counterexample::Smooth => (delta / Counterexample::curvature(k)).sqrt().min(1.0),
        }
    }
}

/// A point that is δ-stationary yet stays a fixed distance from the minimiser 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x0: f64,
    pub k: u32,
    pub t: f64,
    /// `1/(2kπ+1)`
    pub bound: f64,
    pub gf: f64,
    pub stationary: Tri,
    pub verified: bool,
}

/// Builds `x₀ = 1/(2kπ - t)` and checks it.
pub fn counterexample_witness(which: Counterexample, r0: f64, delta: f64) -> Result<Witness> {
    check_delta(delta)?;
    if !(r0 > 0.0) {
        return Err(Error::Argument(format!("r0 must be positive, got {r0}")));
    }
    let entry = crate::zoo::get(which.zoo_name())?;
    let k = which.k(r0);
    let t = which.t(k, delta);
    let two_k_pi = 2.0 * f64::from(k) * PI;
    let x0 = 1.0 / (two_k_pi - t);
    let bound = 1.0 / (two_k_pi + 1.0);
    let v = dini::gf(&entry.expr, &[x0], &GfOptions::default())?;
    let stationary = dini::classify(&v, delta);
    Ok(Witness {
        x0,
        k,
        t,
        bound,
        gf: v.gf_estimate,
        stationary,
        verified: stationary == Tri::Yes && x0.abs() >= bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub members: usize,
}

/// Function values of near-stationary grid points, clustered.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCensus {
    pub clusters: Vec<Cluster>,
    pub cluster_tol: f64,
    pub delta: f64,
    pub unknown: usize,
}

impl ValueCensus {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cluster", "value", "min", "max", "members"])?;
        for (i, c) in self.clusters.iter().enumerate() {
            w.write_record([
                i.to_string(),
                c.value.to_string(),
                c.min.to_string(),
                c.max.to_string(),
                c.members.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default census δ.
pub const CENSUS_DELTA: f64 = 1e-6;

/// Single-linkage clustering of `f` over the `yes` points of a δ-scan.
///
/// With `cluster_tol = None` the tolerance is `1e-4·max(1, max|f|)` over the
/// collected values.
pub fn value_census(
    expr: &Expr,
    grid: &GridSpec,
    delta: f64,
    cluster_tol: Option<f64>,
) -> Result<ValueCensus> {
    let hits = delta_scan(expr, grid, delta)?;
    let unknown = hits.iter().filter(|p| p.verdict == Tri::Unknown).count();
    let mut values = hits
        .iter()
        .filter(|p| p.verdict == Tri::Yes)
        .map(|p| expr.evaluate(&p.point))
        .collect::<Result<Vec<f64>>>()?;
    values.sort_by(f64::total_cmp);
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = cluster_tol.unwrap_or(1e-4 * scale);
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for v in values {
        match clusters.last_mut() {
            Some(c) if v - c[c.len() - 1] <= tol => c.push(v),
            _ => clusters.push(vec![v]),
        }
    }
    let clusters = clusters
        .into_iter()
        .map(|c| Cluster {
            value: c.iter().sum::<f64>() / c.len() as f64,
            min: c[0],
            max: c[c.len() - 1],
            members: c.len(),
        })
        .collect();
    Ok(ValueCensus {
        clusters,
        cluster_tol: tol,
        delta,
        unknown,
    })
}
