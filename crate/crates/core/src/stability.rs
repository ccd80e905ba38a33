//! Grid-estimated convergence-stability certificates.
//!
//! For a candidate minimiser `x*` and radius `r` the certificate records
//!
//! * `λ₀ = ½(min_{0.8r ≤ ‖x−x*‖ ≤ 0.9r} f(x) − f(x*))`, and
//! * `r₁`, the largest radius in `(0, 0.8r]` on which `f ≤ f(x*) + λ₀`.
//!
//! Both are computed on a grid and are estimates at its resolution, not bounds.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::GridSpec;

/// Inner and outer annulus fractions.
pub const ANNULUS: (f64, f64) = (0.8, 0.9);

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub x_star: Vec<f64>,
    pub r: f64,
    pub lambda0: f64,
    pub r1: f64,
    pub annulus_min: f64,
    /// Grid spacing.
    pub h: f64,
    /// Largest branch-gradient norm seen in the ball.
    pub lipschitz: f64,
    pub f_star: f64,
}

impl StabilityCertificate {
    /// A hand-made certificate, for experiments that deliberately bypass [`certify`].
    pub fn manual(x_star: Vec<f64>, r: f64, lambda0: f64, r1: f64) -> Self {
        StabilityCertificate {
            x_star,
            r,
            lambda0,
            r1,
            annulus_min: f64::NAN,
            h: f64::NAN,
            lipschitz: f64::NAN,
            f_star: f64::NAN,
        }
    }

    /// Flat `key=value` record, one pair per line.
    pub fn to_record(&self) -> String {
        self.to_string()
    }
}

fn join(x: &[f64]) -> String {
    x.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for StabilityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x_star={}", join(&self.x_star))?;
        writeln!(f, "r={}", self.r)?;
        writeln!(f, "lambda0={}", self.lambda0)?;
        writeln!(f, "r1={}", self.r1)?;
        writeln!(f, "h={}", self.h)?;
        writeln!(f, "refused=false")?;
        writeln!(f, "annulus_min={}", self.annulus_min)?;
        writeln!(f, "f_star={}", self.f_star)?;
        writeln!(f, "lipschitz={}", self.lipschitz)?;
        writeln!(f, "rigor=grid-estimate")
    }
}

/// Record written when certification is refused.
pub fn refusal_record(x_star: &[f64], r: f64, h: f64, err: &Error) -> String {
    let mut s = format!("x_star={}\nr={r}\n", join(x_star));
    if let Error::CertificationRefused {
        annulus_min,
        f_star,
        point,
    } = err
    {
        s.push_str(&format!(
            "lambda0={}\nr1=\nh={h}\nrefused=true\nannulus_min={annulus_min}\nf_star={f_star}\nviolating_point={}\n",
            (annulus_min - f_star) / 2.0,
            join(point)
        ));
    } else {
        s.push_str(&format!(
            "lambda0=\nr1=\nh={h}\nrefused=true\nreason={err}\n"
        ));
    }
    s.push_str("rigor=grid-estimate\n");
    s
}

/// Reads a record produced by [`StabilityCertificate::to_record`].
pub fn parse_record(text: &str) -> Result<StabilityCertificate> {
    let mut fields = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            column: 1,
            message: format!("expected key=value, found `{line}`"),
        })?;
        fields.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    if fields.get("refused").is_some_and(|(_, v)| v == "true") {
        return Err(Error::Argument(
            "record describes a refused certification".into(),
        ));
    }
    let num = |key: &str| -> Result<f64> {
        let (line, v) = fields.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            column: 0,
            message: format!("missing key `{key}`"),
        })?;
        v.parse::<f64>().map_err(|_| Error::Parse {
            line: *line,
            column: key.len() + 2,
            message: format!("bad number `{v}`"),
        })
    };
    let (xl, xs) = fields.get("x_star").ok_or_else(|| Error::Parse {
        line: 0,
        column: 0,
        message: "missing key `x_star`".into(),
    })?;
    let x_star = xs
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Parse {
            line: *xl,
            column: 8,
            message: format!("bad point `{xs}`"),
        })?;
    let opt = |key: &str| {
        if fields.contains_key(key) {
            num(key)
        } else {
            Ok(f64::NAN)
        }
    };
    Ok(StabilityCertificate {
        x_star,
        r: num("r")?,
        lambda0: num("lambda0")?,
        r1: num("r1")?,
        h: num("h")?,
        annulus_min: opt("annulus_min")?,
        lipschitz: opt("lipschitz")?,
        f_star: opt("f_star")?,
    })
}

struct Sample {
    point: Vec<f64>,
    dist: f64,
    value: f64,
}

fn sample_ball(expr: &Expr, x_star: &[f64], r: f64, grid: &GridSpec) -> Result<Vec<Sample>> {
    expr.domain().check(x_star)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Argument(format!("radius must be positive, got {r}")));
    }
    grid.check_within(expr.domain())?;
    let reach = r * (1.0 + 1e-12);
    let pts: Vec<Vec<f64>> = grid
        .points_in(expr.domain())
        .into_iter()
        .filter(|p| distance(p, x_star) <= reach)
        .collect();
    let mut samples = pts
        .into_par_iter()
        .map(|p| {
            let value = expr.evaluate(&p)?;
            Ok(Sample {
                dist: distance(&p, x_star),
                point: p,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    samples.sort_by(|a, b| a.dist.total_cmp(&b.dist));
    Ok(samples)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Largest gradient norm of the active branch over the sampled points.
fn lipschitz_estimate(expr: &Expr, samples: &[Sample]) -> f64 {
    let prog = expr.canonical();
    samples
        .par_iter()
        .filter_map(|s| {
            let signs: Vec<i8> = prog
                .sign_vector(&s.point, 0.0)
                .ok()?
                .signs
                .iter()
                .map(|&v| if v == 0 { 1 } else { v })
                .collect();
            let (_, g) = prog.eval_branch(&signs, &s.point).ok()?;
            Some(g.iter().map(|t| t * t).sum::<f64>().sqrt())
        })
        .reduce(|| 0.0, f64::max)
}

/// Issues a certificate for `x*` at radius `r`, or refuses when the sampled
/// annulus minimum does not exceed `f(x*)`.
pub fn certify(
    expr: &Expr,
    x_star: &[f64],
    r: f64,
    grid: &GridSpec,
) -> Result<StabilityCertificate> {
    let samples = sample_ball(expr, x_star, r, grid)?;
    let h = grid.spacing();
    let f_star = expr.evaluate(x_star)?;
    let slack = 1e-12 * r;
    let (lo, hi) = (ANNULUS.0 * r - slack, ANNULUS.1 * r + slack);
    let annulus = samples
        .iter()
        .filter(|s| s.dist >= lo && s.dist <= hi)
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| {
            Error::Argument(format!(
                "no grid point in the annulus [{lo}, {hi}]; refine the grid"
            ))
        })?;
    let annulus_min = annulus.value;
    let lambda0 = (annulus_min - f_star) / 2.0;
    if !(lambda0 > 0.0) {
        return Err(Error::CertificationRefused {
            annulus_min,
            f_star,
            point: annulus.point.clone(),
        });
    }
    let level = f_star + lambda0;
    // samples are sorted by distance, so a ball's grid points form a prefix
    let first_bad = samples
        .iter()
        .position(|s| s.value > level)
        .unwrap_or(samples.len());
    let holds = |radius: f64| samples.partition_point(|s| s.dist <= radius) <= first_bad;
    let cap = ANNULUS.0 * r;
    let (mut good, mut bad) = (0.0, cap);
    if holds(cap) {
        good = cap;
    } else {
        while bad - good > h {
            let mid = 0.5 * (good + bad);
            if holds(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
    }
    let verified = samples.partition_point(|s| s.dist <= good);
    let r1 = samples[..verified]
        .iter()
        .map(|s| s.dist)
        .fold(0.0, f64::max)
        .min(cap);
    if !(r1 > 0.0) {
        return Err(Error::Argument(
            "no grid point besides x* satisfies the sublevel condition; refine the grid".into(),
        ));
    }
    Ok(StabilityCertificate {
        x_star: x_star.to_vec(),
        r,
        lambda0,
        r1,
        annulus_min,
        h,
        lipschitz: lipschitz_estimate(expr, &samples),
        f_star,
    })
}

/// Grid evidence for `x*` being the unique minimiser in `B(x*, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniqueMinReport {
    /// `min (f(x) − f(x*))` over grid points at distance at least `h`.
    pub margin: f64,
    pub argmin: Vec<f64>,
    pub h: f64,
    pub points_checked: usize,
}

impl UniqueMinReport {
    pub fn is_unique(&self) -> bool {
        self.margin > 0.0
    }
}

pub fn verify_unique_min(
    expr: &Expr,
    x_star: &[f64],
    r: f64,
    grid: &GridSpec,
) -> Result<UniqueMinReport> {
    let samples = sample_ball(expr, x_star, r, grid)?;
    let h = grid.spacing();
    let f_star = expr.evaluate(x_star)?;
    let outside: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.dist >= h * (1.0 - 1e-9))
        .collect();
    let best = outside
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Argument("no grid point outside B(x*, h)".into()))?;
    Ok(UniqueMinReport {
        margin: best.value - f_star,
        argmin: best.point.clone(),
        h,
        points_checked: outside.len(),
    })
}
