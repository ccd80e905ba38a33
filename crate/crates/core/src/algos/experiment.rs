use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    check_contract, distance, limit_points, sample_in_ball, AlgoParams, Algorithm, Termination,
    SEGMENT_SAMPLES,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::GridSpec;
use crate::scan::{shrinkage_profile, DEFAULT_LADDER};
use crate::stability::{StabilityCertificate, ANNULUS};

/// Settings for a two-sided stability experiment. Unset `delta`, `lambda`,
/// `eta` and `sample_radius` are derived from the certificate and `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub eps: f64,
    /// Number of generated starts in `B(x*, r₁)`.
    pub starts: usize,
    /// Extra starts used verbatim.
    pub explicit_starts: Vec<Vec<f64>>,
    pub seeds: usize,
    pub base_seed: u64,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub max_iter: usize,
    pub samples: usize,
    pub sample_radius: Option<f64>,
    /// Grid step of the profile used to pick δ₁; `None` scales with `r` and the dimension.
    pub profile_step: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(eps: f64) -> Self {
        ExperimentConfig {
            eps,
            starts: 20,
            explicit_starts: Vec::new(),
            seeds: 16,
            base_seed: 0,
            delta: None,
            lambda: None,
            eta: None,
            max_iter: 400,
            samples: 6,
            sample_radius: None,
            profile_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub algorithm: Algorithm,
    pub start_index: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    /// Largest distance from `x*` among the run's limit-point representatives.
    pub limsup_distance: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub contract_holds: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub x_star: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
    pub eta: f64,
    /// Whether δ₁ came from a profile that stayed inside `B(x*, ε)`.
    pub delta_from_profile: bool,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn max_limsup(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.limsup_distance)
            .fold(0.0, f64::max)
    }

    /// `algorithm,start,seed,x0…,limsup_distance,iterations,termination,contract,verdict`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.x_star.len();
        let mut header: Vec<String> = ["algorithm", "start", "seed"].map(String::from).to_vec();
        header.extend((0..n).map(|i| format!("x0_{i}")));
        header.extend(
            [
                "limsup_distance",
                "iterations",
                "termination",
                "contract",
                "verdict",
            ]
            .map(String::from),
        );
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.algorithm.name().to_string(),
                r.start_index.to_string(),
                r.seed.to_string(),
            ];
            rec.extend(r.x0.iter().map(f64::to_string));
            rec.push(r.limsup_distance.to_string());
            rec.push(r.iterations.to_string());
            rec.push(r.termination.as_str().to_string());
            rec.push(if r.contract_holds { "PASS" } else { "FAIL" }.to_string());
            rec.push(if r.pass { "PASS" } else { "FAIL" }.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Deterministic starts filling `B(x*, radius)`: evenly spaced in 1-D, a
/// sunflower spiral in 2-D, seeded uniform samples otherwise. Points are clamped
/// into the domain.
pub fn start_points(
    expr: &Expr,
    x_star: &[f64],
    radius: f64,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let n = x_star.len();
    let radius = 0.999 * radius;
    let mut pts: Vec<Vec<f64>> = match n {
        1 if count == 1 => vec![vec![x_star[0] + radius]],
        1 => (0..count)
            .map(|i| vec![x_star[0] - radius + 2.0 * radius * i as f64 / (count - 1) as f64])
            .collect(),
        2 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let rho = radius * ((i as f64 + 0.5) / count as f64).sqrt();
                    let phi = golden * i as f64;
                    vec![x_star[0] + rho * phi.cos(), x_star[1] + rho * phi.sin()]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| sample_in_ball(&mut rng, x_star, radius))
                .collect()
        }
    };
    for p in &mut pts {
        expr.domain().clamp(p);
    }
    pts
}

/// Picks δ₁ as half the largest ladder δ whose δ-stationary points inside
/// `B(x*, 0.8r)` all lie within `eps` of `x*`. `None` if no ladder value qualifies.
pub fn compatible_delta(
    expr: &Expr,
    cert: &StabilityCertificate,
    eps: f64,
    step: f64,
) -> Result<Option<f64>> {
    let radius = ANNULUS.0 * cert.r;
    let grid = GridSpec::around(&cert.x_star, radius, step, expr.domain())?.with_zeta(1e-10);
    let profile = shrinkage_profile(expr, &cert.x_star, radius, &DEFAULT_LADDER, &grid)?;
    Ok(profile
        .rows
        .iter()
        .find(|row| row.sup_distance < eps && row.unknown == 0)
        .map(|row| 0.5 * row.delta))
}

fn default_profile_step(r: f64, n: usize) -> f64 {
    match n {
        1 => 1e-3 * r,
        2 => 1e-2 * r,
        _ => 5e-2 * r,
    }
}

/// Runs both built-in algorithms from every start and seed, and records how far
/// the tail of each run stays from `x*`.
pub fn stability_experiment(
    expr: &Expr,
    cert: &StabilityCertificate,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let x_star = &cert.x_star;
    let n = expr.dim();
    if x_star.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x_star.len(),
        });
    }
    if !(cfg.eps > 0.0) {
        return Err(Error::Argument(format!(
            "eps must be positive, got {}",
            cfg.eps
        )));
    }
    if cfg.seeds == 0 {
        return Err(Error::Argument("need at least one seed".into()));
    }
    let (delta, delta_from_profile) = match cfg.delta {
        Some(d) => (d, false),
        None => {
            let step = cfg
                .profile_step
                .unwrap_or_else(|| default_profile_step(cert.r, n));
            match compatible_delta(expr, cert, cfg.eps, step)? {
                Some(d) => (d, true),
                None => (0.5 * DEFAULT_LADDER[DEFAULT_LADDER.len() - 1], false),
            }
        }
    };
    let lambda = cfg.lambda.unwrap_or(0.5 * cert.lambda0);
    let eta = cfg.eta.unwrap_or_else(|| (cfg.eps / 2.0).min(0.1));
    let sample_radius = cfg
        .sample_radius
        .unwrap_or_else(|| (cfg.eps / 4.0).min(0.1));

    let mut starts = start_points(expr, x_star, cert.r1, cfg.starts, cfg.base_seed);
    starts.extend(cfg.explicit_starts.iter().cloned());
    if starts.is_empty() {
        return Err(Error::Argument("no start points".into()));
    }
    let gs_ok = n <= super::MAX_GS_DIM;
    let mut jobs = Vec::new();
    for (i, x0) in starts.iter().enumerate() {
        for s in 0..cfg.seeds as u64 {
            for alg in Algorithm::BOTH {
                if alg == Algorithm::GradientSampling && !gs_ok {
                    continue;
                }
                jobs.push((alg, i, cfg.base_seed + s, x0.clone()));
            }
        }
    }
    let rows = jobs
        .into_par_iter()
        .map(|(algorithm, start_index, seed, x0)| {
            let params = AlgoParams {
                delta,
                lambda,
                eta,
                max_iter: cfg.max_iter,
                seed,
                samples: cfg.samples,
                sample_radius,
                ..AlgoParams::default()
            };
            let traj = algorithm.run(expr, &x0, &params)?;
            let contract =
                check_contract(&traj, expr, delta, lambda, SEGMENT_SAMPLES, params.zeta)?;
            let limsup_distance = limit_points(&traj)
                .iter()
                .map(|p| distance(p, x_star))
                .fold(0.0, f64::max);
            Ok(ExperimentRow {
                algorithm,
                start_index,
                seed,
                x0,
                limsup_distance,
                iterations: traj.len() - 1,
                termination: traj.termination,
                contract_holds: contract.all_hold(),
                pass: limsup_distance < cfg.eps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        x_star: x_star.clone(),
        eps: cfg.eps,
        delta,
        lambda,
        eta,
        delta_from_profile,
        rows,
    })
}
