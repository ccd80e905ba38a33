//! Reference optimisers and checks of the algorithm contract
//! (ultimately decreasing, δ-result-stationary, λ-path-bounded).

mod experiment;
pub mod minnorm;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dini::{self, GfOptions, Tri};
use crate::error::{Error, Result};
use crate::expr::Expr;

pub use experiment::{
    compatible_delta, stability_experiment, start_points, ExperimentConfig, ExperimentReport,
    ExperimentRow,
};
pub use minnorm::min_norm_hull;

/// Largest number of gradient samples per step.
pub const MAX_SAMPLES: usize = 8;
/// Largest dimension supported by gradient sampling.
pub const MAX_GS_DIM: usize = 3;
/// Halvings tried before a step is abandoned.
pub const MAX_HALVINGS: u32 = 40;
/// Floor for the shrinking sampling radius of gradient sampling.
pub const MIN_SAMPLE_RADIUS: f64 = 1e-14;
/// θ-samples per segment when enforcing and checking the path bound.
pub const SEGMENT_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoParams {
    pub delta: f64,
    pub lambda: f64,
    pub eta: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Gradient samples per step (gradient sampling only).
    pub samples: usize,
    /// Initial sampling radius (gradient sampling only).
    pub sample_radius: f64,
    /// Kink band used by the stationarity gauge.
    pub zeta: f64,
}

impl Default for AlgoParams {
    fn default() -> Self {
        AlgoParams {
            delta: 1e-3,
            lambda: 0.1,
            eta: 0.1,
            max_iter: 500,
            seed: 0,
            samples: 6,
            sample_radius: 0.01,
            zeta: 1e-10,
        }
    }
}

impl AlgoParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("lambda", self.lambda),
            ("eta", self.eta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sample_radius > 0.0) {
            return Err(Error::Argument(format!(
                "sample radius must be positive, got {}",
                self.sample_radius
            )));
        }
        if self.samples == 0 || self.samples > MAX_SAMPLES {
            return Err(Error::Argument(format!(
                "gradient samples must be in 1..={MAX_SAMPLES}, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    fn gauge(&self) -> GfOptions {
        GfOptions::with_zeta(self.zeta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Subgradient,
    GradientSampling,
}

impl Algorithm {
    pub const BOTH: [Algorithm; 2] = [Algorithm::Subgradient, Algorithm::GradientSampling];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Subgradient => "subgradient",
            Algorithm::GradientSampling => "gradient_sampling",
        }
    }

    pub fn run(self, expr: &Expr, x0: &[f64], p: &AlgoParams) -> Result<Trajectory> {
        match self {
            Algorithm::Subgradient => run_subgradient_descent(expr, x0, p),
            Algorithm::GradientSampling => run_gradient_sampling(expr, x0, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The stopping test passed at the last point; the sequence stays there.
    StationaryFound,
    /// Iteration budget spent, or no acceptable step could be found.
    MaxIter,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::StationaryFound => "stationary-found",
            Termination::MaxIter => "max-iter",
        }
    }
}

/// Iterates `x_0 … x_K`. After `StationaryFound` the sequence is constant, so
/// [`Trajectory::point`] returns `x_K` for every `k ≥ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub termination: Termination,
    /// Largest sampled `f` on segment `k` (between `x_k` and `x_{k+1}`).
    pub segment_max: Vec<f64>,
    pub eta: f64,
}

impl Trajectory {
    fn start(x0: Vec<f64>, f0: f64, eta: f64) -> Self {
        Trajectory {
            points: vec![x0],
            values: vec![f0],
            termination: Termination::MaxIter,
            segment_max: Vec::new(),
            eta,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k.min(self.points.len() - 1)]
    }

    pub fn last(&self) -> &[f64] {
        self.points.last().expect("trajectories are non-empty")
    }

    /// `k,x0,…,f,step_norm`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.points[0].len();
        let mut header = vec!["k".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend(["f".to_string(), "step_norm".to_string()]);
        w.write_record(&header)?;
        for (k, (p, f)) in self.points.iter().zip(&self.values).enumerate() {
            let step = if k == 0 {
                0.0
            } else {
                distance(p, &self.points[k - 1])
            };
            let mut row = vec![k.to_string()];
            row.extend(p.iter().map(f64::to_string));
            row.push(f.to_string());
            row.push(step.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn push(&mut self, x: Vec<f64>, f: f64, seg: f64) {
        self.points.push(x);
        self.values.push(f);
        self.segment_max.push(seg);
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn lerp(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (1.0 - theta) * x + theta * y)
        .collect()
}

/// Largest `f` over `θ = i/S`, `i = 0..=S`, on the segment `[a, b]`.
fn segment_max(expr: &Expr, a: &[f64], b: &[f64], samples: usize) -> Result<(f64, f64)> {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=samples {
        let theta = i as f64 / samples as f64;
        let v = expr.evaluate(&lerp(a, b, theta))?;
        if v > best.0 {
            best = (v, theta);
        }
    }
    Ok(best)
}

/// Gradient of the branch active at `x`, by exact signs (zeros completed with `+`).
fn branch_gradient(expr: &Expr, x: &[f64]) -> Result<Vec<f64>> {
    let prog = expr.canonical();
    let signs: Vec<i8> = prog
        .sign_vector(x, 0.0)?
        .signs
        .into_iter()
        .map(|s| if s == 0 { 1 } else { s })
        .collect();
    Ok(prog.eval_branch(&signs, x)?.1)
}

/// Backtracking along unit direction `dir` from `x`: the first step (halving from
/// `step`) that strictly decreases `f` and keeps the sampled segment below `cap`.
fn backtrack(
    expr: &Expr,
    x: &[f64],
    fx: f64,
    dir: &[f64],
    mut step: f64,
    cap: f64,
) -> Result<Option<(Vec<f64>, f64, f64)>> {
    for _ in 0..=MAX_HALVINGS {
        let mut y: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + step * d).collect();
        expr.domain().clamp(&mut y);
        if y.as_slice() != x {
            let fy = expr.evaluate(&y)?;
            if fy < fx {
                let (seg, _) = segment_max(expr, x, &y, SEGMENT_SAMPLES)?;
                if seg <= cap {
                    return Ok(Some((y, fy, seg)));
                }
            }
        }
        step *= 0.5;
    }
    Ok(None)
}

fn check_start(expr: &Expr, x0: &[f64]) -> Result<()> {
    expr.domain()
        .check(x0)
        .map_err(|e| Error::Argument(format!("start point rejected: {e}")))
}

/// Steepest-descent along the exact (or sampled) minimising direction of the gauge.
///
/// Stops as soon as `G_f(x_k) ≥ -δ`. Steps are at most `min(η, λ/L̂)` with `L̂` the
/// running largest branch-gradient norm, and are halved until `f` strictly
/// decreases with the sampled segment below `f(x_0) + λ`.
pub fn run_subgradient_descent(expr: &Expr, x0: &[f64], p: &AlgoParams) -> Result<Trajectory> {
    p.validate()?;
    check_start(expr, x0)?;
    let f0 = expr.evaluate(x0)?;
    let cap = f0 + p.lambda;
    let mut traj = Trajectory::start(x0.to_vec(), f0, p.eta);
    let (mut x, mut fx) = (x0.to_vec(), f0);
    let mut lip: f64 = 1e-12;
    for _ in 0..p.max_iter {
        let v = dini::gf(expr, &x, &p.gauge())?;
        if v.gf_estimate >= -p.delta {
            traj.termination = Termination::StationaryFound;
            return Ok(traj);
        }
        lip = lip
            .max(norm(&branch_gradient(expr, &x)?))
            .max(-v.gf_estimate);
        let step = p.eta.min(p.lambda / lip);
        match backtrack(expr, &x, fx, &v.direction, step, cap)? {
            Some((y, fy, seg)) => {
                traj.push(y.clone(), fy, seg);
                x = y;
                fx = fy;
            }
            None => return Ok(traj),
        }
    }
    if dini::gf(expr, &x, &p.gauge())?.gf_estimate >= -p.delta {
        traj.termination = Termination::StationaryFound;
    }
    Ok(traj)
}

fn sample_in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect();
    let len = norm(&dir).max(1e-300);
    let u: f64 = rng.random::<f64>();
    let r = radius * u.powf(1.0 / n as f64);
    center
        .iter()
        .zip(&dir)
        .map(|(c, d)| c + r * d / len)
        .collect()
}

/// Simplified gradient sampling.
///
/// Each step collects the active-branch gradient at `x_k` and at `m` points drawn
/// uniformly from `B(x_k, ρ)`, and moves along the negated min-norm element of
/// their hull. When that element is shorter than δ the method stops if the exact
/// gauge confirms `G_f ≥ -δ`; otherwise it shrinks `ρ` tenfold and steps along
/// the gauge's minimising direction. A failed line search also shrinks `ρ`.
pub fn run_gradient_sampling(expr: &Expr, x0: &[f64], p: &AlgoParams) -> Result<Trajectory> {
    p.validate()?;
    check_start(expr, x0)?;
    if expr.dim() > MAX_GS_DIM {
        return Err(Error::Unsupported(format!(
            "gradient sampling supports n <= {MAX_GS_DIM}, got n = {}",
            expr.dim()
        )));
    }
    let f0 = expr.evaluate(x0)?;
    let cap = f0 + p.lambda;
    let mut traj = Trajectory::start(x0.to_vec(), f0, p.eta);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (mut x, mut fx) = (x0.to_vec(), f0);
    let mut radius = p.sample_radius;
    let mut lip: f64 = 1e-12;
    for _ in 0..p.max_iter {
        let mut grads = vec![branch_gradient(expr, &x)?];
        for _ in 0..p.samples {
            let mut y = sample_in_ball(&mut rng, &x, radius);
            expr.domain().clamp(&mut y);
            grads.push(branch_gradient(expr, &y)?);
        }
        for g in &grads {
            lip = lip.max(norm(g));
        }
        let (g_star, _) = min_norm_hull(&grads);
        let len = norm(&g_star);
        let step = p.eta.min(p.lambda / lip);
        let dir: Vec<f64> = if len <= p.delta {
            let v = dini::gf(expr, &x, &p.gauge())?;
            if v.gf_estimate >= -p.delta {
                traj.termination = Termination::StationaryFound;
                return Ok(traj);
            }
            // the sampled hull hides a descent direction of the exact gauge
            radius = (0.1 * radius).max(MIN_SAMPLE_RADIUS);
            v.direction
        } else {
            g_star.iter().map(|t| -t / len).collect()
        };
        match backtrack(expr, &x, fx, &dir, step, cap)? {
            Some((y, fy, seg)) => {
                traj.push(y.clone(), fy, seg);
                x = y;
                fx = fy;
            }
            None => radius = (0.1 * radius).max(MIN_SAMPLE_RADIUS),
        }
    }
    if dini::gf(expr, &x, &p.gauge())?.gf_estimate >= -p.delta {
        traj.termination = Termination::StationaryFound;
    }
    Ok(traj)
}

/// Cluster representatives standing in for the limit points of a finite run:
/// the final point after `StationaryFound`, otherwise single-linkage clusters
/// (tolerance `10η`) of the last 10% of iterates, each represented by its latest
/// member.
pub fn limit_points(traj: &Trajectory) -> Vec<Vec<f64>> {
    if traj.termination == Termination::StationaryFound {
        return vec![traj.last().to_vec()];
    }
    let n = traj.points.len();
    let tail_len = n.div_ceil(10).max(1);
    let tail = &traj.points[n - tail_len..];
    let tol = 10.0 * traj.eta;
    // union-find over the tail
    let mut parent: Vec<usize> = (0..tail.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..tail.len() {
        for j in i + 1..tail.len() {
            if distance(&tail[i], &tail[j]) <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut reps: Vec<(usize, usize)> = Vec::new();
    for i in 0..tail.len() {
        let root = find(&mut parent, i);
        match reps.iter_mut().find(|(r, _)| *r == root) {
            Some(entry) => entry.1 = i,
            None => reps.push((root, i)),
        }
    }
    reps.into_iter().map(|(_, i)| tail[i].clone()).collect()
}

/// Contract verdicts, each backed by the number that decides it.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractReport {
    pub ultimately_decreasing: bool,
    /// `max f(x̄) − f(x_0)` over limit-point representatives.
    pub worst_increase: f64,
    pub result_stationary: bool,
    /// Smallest `G_f` over limit-point representatives.
    pub worst_gf: f64,
    /// Representatives whose verdict was indecisive.
    pub unknown_limit_points: usize,
    pub path_bounded: bool,
    /// Largest sampled `f` along any segment, and where: `(k, θ)`.
    pub max_segment_value: f64,
    pub worst_segment: (usize, f64),
    pub delta: f64,
    pub lambda: f64,
    pub limit_points: Vec<Vec<f64>>,
}

impl ContractReport {
    pub fn all_hold(&self) -> bool {
        self.ultimately_decreasing && self.result_stationary && self.path_bounded
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["property", "witness", "bound", "verdict"])?;
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        w.write_record([
            "ultimately_decreasing",
            &self.worst_increase.to_string(),
            "1e-9",
            verdict(self.ultimately_decreasing),
        ])?;
        w.write_record([
            "result_stationary",
            &self.worst_gf.to_string(),
            &(-self.delta).to_string(),
            verdict(self.result_stationary),
        ])?;
        w.write_record([
            "path_bounded",
            &self.max_segment_value.to_string(),
            &self.lambda.to_string(),
            verdict(self.path_bounded),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Tolerance on the decrease check.
pub const DECREASE_TOL: f64 = 1e-9;

/// Checks a trajectory against the contract with parameters `δ`, `λ`.
pub fn check_contract(
    traj: &Trajectory,
    expr: &Expr,
    delta: f64,
    lambda: f64,
    segment_samples: usize,
    zeta: f64,
) -> Result<ContractReport> {
    if traj.is_empty() {
        return Err(Error::Argument("empty trajectory".into()));
    }
    if segment_samples == 0 {
        return Err(Error::Argument("need at least one segment sample".into()));
    }
    let f0 = expr.evaluate(&traj.points[0])?;
    let reps = limit_points(traj);
    let mut worst_increase = f64::NEG_INFINITY;
    let mut worst_gf = f64::INFINITY;
    let mut unknown = 0;
    for x in &reps {
        worst_increase = worst_increase.max(expr.evaluate(x)? - f0);
        let v = dini::gf(expr, x, &GfOptions::with_zeta(zeta))?;
        worst_gf = worst_gf.min(v.gf_estimate);
        if dini::classify(&v, delta) == Tri::Unknown {
            unknown += 1;
        }
    }
    let mut max_segment_value = f0;
    let mut worst_segment = (0, 0.0);
    for (k, pair) in traj.points.windows(2).enumerate() {
        let (v, theta) = segment_max(expr, &pair[0], &pair[1], segment_samples)?;
        if v > max_segment_value {
            max_segment_value = v;
            worst_segment = (k, theta);
        }
    }
    Ok(ContractReport {
        ultimately_decreasing: worst_increase <= DECREASE_TOL,
        worst_increase,
        result_stationary: worst_gf >= -delta,
        worst_gf,
        unknown_limit_points: unknown,
        path_bounded: max_segment_value <= f0 + lambda,
        max_segment_value,
        worst_segment,
        delta,
        lambda,
        limit_points: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::dsl;

    fn params(delta: f64, eta: f64) -> AlgoParams {
        AlgoParams {
            delta,
            eta,
            lambda: 0.5,
            ..Default::default()
        }
    }

    #[test]
    fn descent_on_a_parabola() {
        let f = dsl::parse("(pow x0 2)", None).unwrap();
        let t = run_subgradient_descent(&f, &[0.4], &params(0.01, 0.1)).unwrap();
        assert_eq!(t.termination, Termination::StationaryFound);
        assert!(t.last()[0].abs() <= 0.005);
        assert!(t.values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn descent_on_abs_ends_at_the_kink() {
        let f = dsl::parse("(abs x0)", None).unwrap();
        let t = run_subgradient_descent(&f, &[0.3], &params(0.5, 0.05)).unwrap();
        assert!(t.last()[0].abs() <= 0.05);
        let c = check_contract(&t, &f, 0.5, 0.5, SEGMENT_SAMPLES, 1e-10).unwrap();
        assert!(c.all_hold(), "{c:?}");
    }

    #[test]
    fn gradient_sampling_on_abs() {
        let f = dsl::parse("(abs x0)", None).unwrap();
        let p = AlgoParams {
            samples: 2,
            ..params(0.1, 0.05)
        };
        let t = run_gradient_sampling(&f, &[0.2], &p).unwrap();
        assert_eq!(t.termination, Termination::StationaryFound);
        assert!(t.last()[0].abs() <= 0.05);
    }

    #[test]
    fn gradient_sampling_is_seed_deterministic() {
        let f = dsl::parse("(+ (abs x0) (abs x1))", None).unwrap();
        let p = AlgoParams {
            seed: 7,
            ..params(0.1, 0.05)
        };
        let a = run_gradient_sampling(&f, &[0.3, -0.2], &p).unwrap();
        let b = run_gradient_sampling(&f, &[0.3, -0.2], &p).unwrap();
        assert_eq!(a, b);
        assert!(norm(a.last()) < 0.05);
    }

    #[test]
    fn gradient_sampling_rejects_high_dimension() {
        let f = dsl::parse("(+ x0 x1 x2 x3)", None).unwrap();
        assert!(matches!(
            run_gradient_sampling(&f, &[0.0; 4], &AlgoParams::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn contract_detects_a_jump_over_the_rim() {
        let f = dsl::parse("(pow x0 2)", None).unwrap();
        let t = Trajectory {
            points: vec![vec![-0.1], vec![0.1]],
            values: vec![0.01, 0.01],
            termination: Termination::MaxIter,
            segment_max: vec![0.01],
            eta: 0.01,
        };
        let c = check_contract(&t, &f, 0.5, 0.01, 16, 0.0).unwrap();
        assert!(c.path_bounded);
        let t = Trajectory {
            points: vec![vec![-0.1], vec![0.9], vec![0.1]],
            values: vec![0.01, 0.81, 0.01],
            ..t
        };
        let c = check_contract(&t, &f, 0.5, 0.01, 16, 0.0).unwrap();
        assert!(!c.path_bounded);
        assert_eq!(c.worst_segment, (0, 1.0));
    }

    #[test]
    fn contract_rejects_a_non_stationary_rest_point() {
        let f = dsl::parse("(pow x0 2)", None).unwrap();
        let t = Trajectory {
            points: vec![vec![0.5]; 3],
            values: vec![0.25; 3],
            termination: Termination::MaxIter,
            segment_max: vec![0.25; 2],
            eta: 0.1,
        };
        let c = check_contract(&t, &f, 1e-3, 0.1, 16, 0.0).unwrap();
        assert!(!c.result_stationary);
        assert!((c.worst_gf + 1.0).abs() < 1e-15);
    }
}
