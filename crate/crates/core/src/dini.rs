//! One-sided directional derivatives, the stationarity gauge `G_f` and
//! δ-stationarity tests.
//!
//! Derivatives are propagated in forward mode along the staged form. A stage
//! sitting on its kink (`|z_j| ≤ ζ`) contributes `|dz_j|`, every other stage
//! the smooth rate `sign(z_j)·dz_j`. The result is the exact Dini derivative
//! whenever the kinks are located exactly; the band `(0, ζ]` is reported back so
//! callers can see when a near-kink was snapped.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::expr::{AbsMode, CanonicalProgram, Expr};

/// A point and a direction, asking for `∂f(x)/∂s` (`normalized`) or `Df(x, x+s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalQuery {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub normalized: bool,
    /// Kink band ζ.
    pub zeta: f64,
}

impl DirectionalQuery {
    /// Unit-rate query `∂f(x)/∂s` with ζ = 0.
    pub fn new(x: Vec<f64>, s: Vec<f64>) -> Self {
        DirectionalQuery {
            x,
            s,
            normalized: true,
            zeta: 0.0,
        }
    }

    /// Query for `Df(x, x+s)`, which scales with `‖s‖`.
    pub fn raw(x: Vec<f64>, s: Vec<f64>) -> Self {
        DirectionalQuery {
            x,
            s,
            normalized: false,
            zeta: 0.0,
        }
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }
}

/// A directional derivative together with the stages that were within ζ of a kink
/// without being exactly on it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiniValue {
    pub value: f64,
    pub kink_stages: Vec<usize>,
    pub snapped_stages: Vec<usize>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn validate(expr: &Expr, q: &DirectionalQuery) -> Result<()> {
    expr.domain().check(&q.x)?;
    if q.s.len() != expr.dim() {
        return Err(Error::Dimension {
            expected: expr.dim(),
            got: q.s.len(),
        });
    }
    let n = norm(&q.s);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Argument(
            "direction must be finite and non-zero".into(),
        ));
    }
    if !expr.domain().is_feasible_direction(&q.x, &q.s) {
        return Err(Error::InfeasibleDirection {
            point: q.x.clone(),
            direction: q.s.clone(),
        });
    }
    Ok(())
}

/// Exact Dini derivative, with kink diagnostics.
pub fn dini_directional_detail(expr: &Expr, q: &DirectionalQuery) -> Result<DiniValue> {
    validate(expr, q)?;
    let prog = expr.canonical();
    let values = prog.tape_values(&q.x, AbsMode::Abs)?;
    let d = prog.tangents(&values, &q.s, q.zeta);
    let mut value = d[prog.output_node()];
    if q.normalized {
        value /= norm(&q.s);
    }
    let kink_stages = prog.kink_stages(&values, q.zeta);
    let snapped_stages = kink_stages
        .iter()
        .copied()
        .filter(|&j| values[prog.stage_nodes()[j]] != 0.0)
        .collect();
    Ok(DiniValue {
        value,
        kink_stages,
        snapped_stages,
    })
}

/// Exact Dini derivative `∂f(x)/∂s`, or `Df(x, x+s)` for a raw query.
pub fn dini_directional(expr: &Expr, q: &DirectionalQuery) -> Result<f64> {
    dini_directional_detail(expr, q).map(|d| d.value)
}

/// How `G_f` handles points where several kinks meet in two or more dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionSampler {
    /// Exact arc decomposition in 2-D; sampling with [`DirectionSampler::default_count`] directions beyond.
    #[default]
    Auto,
    /// Always sample this many unit directions (plus the coordinate axes).
    Sampled { count: usize },
}

impl DirectionSampler {
    /// Default sample count for dimension `n`.
    pub fn default_count(n: usize) -> usize {
        match n {
            0..=2 => 256,
            3 => 1024,
            _ => 2048,
        }
    }
}

/// Options shared by [`gf`] and [`is_delta_stationary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfOptions {
    pub sampler: DirectionSampler,
    pub zeta: f64,
}

impl Default for GfOptions {
    fn default() -> Self {
        GfOptions {
            sampler: DirectionSampler::Auto,
            zeta: 0.0,
        }
    }
}

impl GfOptions {
    pub fn with_zeta(zeta: f64) -> Self {
        GfOptions {
            zeta,
            ..Default::default()
        }
    }
}

/// One-sided derivatives in one dimension. `None` where the side is outside the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSided {
    /// `f′₊(x)`
    pub right: Option<f64>,
    /// `f′₋(x) = -∂f(x)/∂(-1)`
    pub left: Option<f64>,
}

/// Estimate of `G_f(x) = inf_{‖s‖=1} ∂f(x)/∂s` over feasible directions.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityVerdict {
    pub gf_estimate: f64,
    /// The estimate equals `G_f(x)` rather than an upper bound.
    pub decisive: bool,
    pub directions_used: usize,
    /// A unit direction achieving the estimate.
    pub direction: Vec<f64>,
    pub certificate: Option<OneSided>,
}

/// The stationarity gauge at `x`.
pub fn gf(expr: &Expr, x: &[f64], opts: &GfOptions) -> Result<StationarityVerdict> {
    expr.domain().check(x)?;
    let prog = expr.canonical();
    let values = prog.tape_values(x, AbsMode::Abs)?;
    let n = expr.dim();
    if n == 1 {
        return Ok(one_dimensional(expr, prog, &values, x, opts.zeta));
    }
    let kinks = prog.kink_stages(&values, opts.zeta);
    if kinks.is_empty() {
        let signs: Vec<i8> = prog.stage_nodes()[..prog.abs_stage_count()]
            .iter()
            .map(|&node| if values[node] > 0.0 { 1 } else { -1 })
            .collect();
        let (_, grad) = prog.eval_branch(&signs, x)?;
        return Ok(smooth_gauge(expr, x, &grad));
    }
    match opts.sampler {
        DirectionSampler::Auto if n == 2 => Ok(planar_exact(expr, prog, &values, x, opts.zeta)),
        DirectionSampler::Auto => Ok(sampled(
            expr,
            prog,
            &values,
            x,
            opts.zeta,
            DirectionSampler::default_count(n),
        )),
        DirectionSampler::Sampled { count } => {
            Ok(sampled(expr, prog, &values, x, opts.zeta, count.max(1)))
        }
    }
}

fn rate(prog: &CanonicalProgram, values: &[f64], s: &[f64], zeta: f64) -> f64 {
    prog.tangents(values, s, zeta)[prog.output_node()]
}

fn one_dimensional(
    expr: &Expr,
    prog: &CanonicalProgram,
    values: &[f64],
    x: &[f64],
    zeta: f64,
) -> StationarityVerdict {
    let dom = expr.domain();
    let right = dom
        .is_feasible_direction(x, &[1.0])
        .then(|| rate(prog, values, &[1.0], zeta));
    let left = dom
        .is_feasible_direction(x, &[-1.0])
        .then(|| -rate(prog, values, &[-1.0], zeta));
    let mut best = (f64::INFINITY, vec![1.0]);
    if let Some(r) = right {
        best = (r, vec![1.0]);
    }
    if let Some(l) = left {
        if -l < best.0 {
            best = (-l, vec![-1.0]);
        }
    }
    StationarityVerdict {
        gf_estimate: best.0,
        decisive: true,
        directions_used: usize::from(right.is_some()) + usize::from(left.is_some()),
        direction: best.1,
        certificate: Some(OneSided { right, left }),
    }
}

/// `inf g·s` over unit `s` in the first-order feasible cone of the box at `x`.
fn smooth_gauge(expr: &Expr, x: &[f64], grad: &[f64]) -> StationarityVerdict {
    let dom = expr.domain();
    let n = x.len();
    let at_lo = |i: usize| x[i] <= dom.lo()[i];
    let at_hi = |i: usize| x[i] >= dom.hi()[i];
    let projected: Vec<f64> = (0..n)
        .map(|i| {
            let v = -grad[i];
            if (at_lo(i) && v < 0.0) || (at_hi(i) && v > 0.0) {
                0.0
            } else {
                v
            }
        })
        .collect();
    let len = norm(&projected);
    let (value, direction) = if len > 0.0 {
        (-len, projected.iter().map(|v| v / len).collect())
    } else if let Some(i) = (0..n).find(|&i| !(at_lo(i) || at_hi(i)) || grad[i] == 0.0) {
        let mut e = vec![0.0; n];
        e[i] = if at_hi(i) { -1.0 } else { 1.0 };
        (0.0, e)
    } else {
        let i = (0..n)
            .min_by(|&a, &b| grad[a].abs().total_cmp(&grad[b].abs()))
            .expect("n ≥ 1");
        let mut e = vec![0.0; n];
        e[i] = if at_lo(i) { 1.0 } else { -1.0 };
        (grad[i].abs(), e)
    };
    StationarityVerdict {
        gf_estimate: value,
        decisive: true,
        directions_used: 0,
        direction,
        certificate: None,
    }
}

fn unit(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

/// Linear map `c` with `c·u(θ) = v(θ)` on an arc, fitted from two interior angles.
fn fit_linear(a: f64, b: f64, eval: &mut impl FnMut(&[f64]) -> f64) -> [f64; 2] {
    let (t1, t2) = (a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0);
    let (u1, u2) = (unit(t1), unit(t2));
    let (v1, v2) = (eval(&u1), eval(&u2));
    let det = u1[0] * u2[1] - u1[1] * u2[0];
    [
        (v1 * u2[1] - v2 * u1[1]) / det,
        (u1[0] * v2 - u2[0] * v1) / det,
    ]
}

fn dot(c: [f64; 2], u: [f64; 2]) -> f64 {
    c[0] * u[0] + c[1] * u[1]
}

/// Exact `G_f` in two dimensions.
///
/// The directional derivative is positively homogeneous and piecewise linear in
/// the direction, with breaks only where some kink stage's rate changes sign.
/// Starting from the feasible quadrants, each kink stage (in evaluation order)
/// is linear on every current arc, so its zero can be located and the arc split
/// there. On the final arcs the output rate is linear and its minimum over the
/// unit arc sits at an endpoint or at the normalized negative coefficient.
fn planar_exact(
    expr: &Expr,
    prog: &CanonicalProgram,
    values: &[f64],
    x: &[f64],
    zeta: f64,
) -> StationarityVerdict {
    let dom = expr.domain();
    let mut arcs: Vec<(f64, f64)> = (0..4)
        .map(|q| (q as f64 * FRAC_PI_2, (q + 1) as f64 * FRAC_PI_2))
        .filter(|(a, b)| dom.is_feasible_direction(x, &unit(0.5 * (a + b))))
        .collect();
    let mut used = 0usize;
    let stages = prog.kink_stages(values, zeta);
    for &j in &stages {
        let node = prog.stage_nodes()[j];
        let mut split = Vec::with_capacity(arcs.len() + 2);
        for &(a, b) in &arcs {
            let mut eval = |s: &[f64]| {
                used += 1;
                prog.tangents(values, s, zeta)[node]
            };
            let c = fit_linear(a, b, &mut eval);
            let (ea, eb) = (dot(c, unit(a)), dot(c, unit(b)));
            if ea * eb < 0.0 {
                let base = c[1].atan2(c[0]) + FRAC_PI_2;
                let root = [base - 2.0 * PI, base - PI, base, base + PI, base + 2.0 * PI]
                    .into_iter()
                    .find(|t| *t > a && *t < b);
                if let Some(t) = root {
                    split.push((a, t));
                    split.push((t, b));
                    continue;
                }
            }
            split.push((a, b));
        }
        arcs = split;
    }
    let mut best = (f64::INFINITY, vec![1.0, 0.0]);
    let consider = |v: f64, u: [f64; 2], best: &mut (f64, Vec<f64>)| {
        if v < best.0 {
            *best = (v, u.to_vec());
        }
    };
    for &(a, b) in &arcs {
        for t in [a, b] {
            let u = unit(t);
            used += 1;
            consider(rate(prog, values, &u, zeta), u, &mut best);
        }
        let mut eval = |s: &[f64]| {
            used += 1;
            rate(prog, values, s, zeta)
        };
        let c = fit_linear(a, b, &mut eval);
        let len = (c[0] * c[0] + c[1] * c[1]).sqrt();
        if len > 0.0 {
            let t0 = (-c[1]).atan2(-c[0]);
            if let Some(t) = [t0 - 2.0 * PI, t0, t0 + 2.0 * PI]
                .into_iter()
                .find(|t| *t >= a && *t <= b)
            {
                let u = unit(t);
                used += 1;
                consider(rate(prog, values, &u, zeta), u, &mut best);
            }
        }
    }
    StationarityVerdict {
        gf_estimate: best.0,
        decisive: true,
        directions_used: used,
        direction: best.1,
        certificate: None,
    }
}

/// Candidate unit directions for sampling: axes, a low-discrepancy spread and,
/// in four or more dimensions, seeded Gaussian directions.
pub fn sample_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(count + 2 * n);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            dirs.push(e);
        }
    }
    match n {
        1 => {}
        2 => {
            for k in 0..count {
                let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                dirs.push(unit(t).to_vec());
            }
        }
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * k as f64;
                dirs.push(vec![r * t.cos(), r * t.sin(), z]);
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            while dirs.len() < count + 2 * n {
                let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let len = norm(&v);
                if len > 1e-12 {
                    dirs.push(v.into_iter().map(|t| t / len).collect());
                }
            }
        }
    }
    dirs
}

fn sampled(
    expr: &Expr,
    prog: &CanonicalProgram,
    values: &[f64],
    x: &[f64],
    zeta: f64,
    count: usize,
) -> StationarityVerdict {
    let dom = expr.domain();
    let mut candidates = sample_directions(x.len(), count);
    // Steepest-descent directions of the adjacent branches are good guesses.
    if let Ok(sv) = prog.sign_vector(x, zeta) {
        for s in sv.completions().into_iter().take(64) {
            if let Ok((_, g)) = prog.eval_branch(&s, x) {
                let len = norm(&g);
                if len > 0.0 {
                    candidates.push(g.iter().map(|t| -t / len).collect());
                }
            }
        }
    }
    let mut used = 0;
    let mut best = (f64::INFINITY, candidates[0].clone());
    for s in candidates {
        if !dom.is_feasible_direction(x, &s) {
            continue;
        }
        used += 1;
        let v = rate(prog, values, &s, zeta);
        if v < best.0 {
            best = (v, s);
        }
    }
    StationarityVerdict {
        gf_estimate: best.0,
        decisive: false,
        directions_used: used,
        direction: best.1,
        certificate: None,
    }
}

/// Answer of a δ-stationarity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    pub fn as_str(self) -> &'static str {
        match self {
            Tri::Yes => "yes",
            Tri::No => "no",
            Tri::Unknown => "unknown",
        }
    }
}

impl std::fmt::Display for Tri {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Turns a verdict into the δ-stationarity answer.
pub fn classify(verdict: &StationarityVerdict, delta: f64) -> Tri {
    if verdict.gf_estimate < -delta {
        Tri::No
    } else if verdict.decisive {
        Tri::Yes
    } else {
        Tri::Unknown
    }
}

/// Whether every feasible direction has `∂f(x)/∂s ≥ -δ`.
pub fn is_delta_stationary(expr: &Expr, x: &[f64], delta: f64, opts: &GfOptions) -> Result<Tri> {
    if !(delta > 0.0) {
        return Err(Error::Argument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(classify(&gf(expr, x, opts)?, delta))
}

/// Geometric step schedule `α_i = α₀·ratio^i` for [`fd_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSchedule {
    pub alpha0: f64,
    pub ratio: f64,
    pub steps: usize,
    pub tol: f64,
}

impl Default for FdSchedule {
    fn default() -> Self {
        FdSchedule {
            alpha0: 1e-3,
            ratio: 0.5,
            steps: 20,
            tol: 1e-7,
        }
    }
}

impl FdSchedule {
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(move |i| self.alpha0 * self.ratio.powi(i as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    /// Step at which the estimate settled (or the last step tried).
    pub alpha: f64,
    pub converged: bool,
}

/// One-sided difference quotients along a shrinking schedule.
pub fn fd_oracle(expr: &Expr, q: &DirectionalQuery, schedule: &FdSchedule) -> Result<FdEstimate> {
    validate(expr, q)?;
    if !(schedule.alpha0 > 0.0
        && schedule.ratio > 0.0
        && schedule.ratio < 1.0
        && schedule.steps >= 2)
    {
        return Err(Error::Argument(
            "schedule needs alpha0 > 0, 0 < ratio < 1 and at least 2 steps".into(),
        ));
    }
    let f0 = expr.evaluate(&q.x)?;
    let scale = if q.normalized { norm(&q.s) } else { 1.0 };
    let mut prev: Option<f64> = None;
    let mut last = (f64::NAN, schedule.alpha0);
    for alpha in schedule.alphas() {
        let y: Vec<f64> = q.x.iter().zip(&q.s).map(|(a, b)| a + alpha * b).collect();
        let est = (expr.evaluate(&y)? - f0) / alpha / scale;
        if let Some(p) = prev {
            if (est - p).abs() <= schedule.tol {
                return Ok(FdEstimate {
                    value: est,
                    alpha,
                    converged: true,
                });
            }
        }
        prev = Some(est);
        last = (est, alpha);
    }
    Ok(FdEstimate {
        value: last.0,
        alpha: last.1,
        converged: false,
    })
}
