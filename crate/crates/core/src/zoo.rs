//! Catalogue of example functions with reference facts.
//!
//! Each fact names the operation that checks it, so [`verify_entry`] can run
//! the whole catalogue mechanically.

use std::f64::consts::PI;

use crate::dini::{self, DirectionalQuery, GfOptions, Tri};
use crate::error::{Error, Result};
use crate::expr::{BoxDomain, Expr, ExprBuilder, Special};
use crate::grid::GridSpec;
use crate::quadrature;
use crate::scan;
use crate::stability;

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    /// Quoted from the published analysis of the example.
    Published,
    /// Worked out independently (by hand or by an independent numerical method).
    Derived,
    Trivial,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Published => "published",
            Provenance::Derived => "derived",
            Provenance::Trivial => "trivial",
        }
    }
}

/// One-dimensional side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `f′₊(x)`
    Right,
    /// `f′₋(x)`
    Left,
}

/// A checkable claim.
#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// One-sided derivative at a 1-D point equals `expected`.
    OneSided {
        x: f64,
        side: Side,
        expected: f64,
        relative: bool,
    },
    /// `G_f(x)` equals `expected` and the verdict is decisive.
    Gauge { x: Vec<f64>, expected: f64 },
    /// `f(x)` equals `expected`; `quadrature` marks a reference computed by quadrature.
    Value {
        x: Vec<f64>,
        expected: f64,
        quadrature: bool,
    },
    /// The one-sided derivative has the given strict sign at `samples` evenly spaced
    /// interior points of `(lo, hi)`.
    SignOnInterval {
        lo: f64,
        hi: f64,
        side: Side,
        positive: bool,
        samples: usize,
    },
    /// The largest `|x - center|` over grid points flagged δ-stationary equals `expected`
    /// up to one grid step.
    StationarySetRadius {
        center: f64,
        delta: f64,
        step: f64,
        expected: f64,
    },
    /// Every grid point flagged δ-stationary lies in `[lo, hi]` (or `(lo, hi)` when not `closed`).
    StationarySetInside {
        delta: f64,
        step: f64,
        lo: f64,
        hi: f64,
        closed: bool,
    },
    /// Grid evidence that `x*` is the unique minimiser on `B(x*, r)`.
    UniqueMinimum { x_star: Vec<f64>, r: f64, step: f64 },
    /// The value census at δ = 1e-6 has this many clusters.
    CensusClusters { step: f64, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fact {
    pub label: String,
    pub provenance: Provenance,
    pub check: Check,
}

impl Fact {
    fn new(label: impl Into<String>, provenance: Provenance, check: Check) -> Self {
        Fact {
            label: label.into(),
            provenance,
            check,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub expr: Expr,
    /// Suggested centre and radius for certification.
    pub x_star: Vec<f64>,
    pub r: f64,
    pub facts: Vec<Fact>,
}

impl ZooEntry {
    pub fn domain(&self) -> &BoxDomain {
        self.expr.domain()
    }

    pub fn is_analytic(&self) -> bool {
        self.expr.is_analytic()
    }
}

pub const NAMES: [&str; 7] = [
    "quad",
    "abs1d",
    "double_abs",
    "two_pits",
    "cross_abs2d",
    "diff_cx",
    "smooth_cx",
];

/// Builds the named entry.
pub fn get(name: &str) -> Result<ZooEntry> {
    match name {
        "quad" => Ok(quad()),
        "abs1d" => Ok(abs1d()),
        "double_abs" => Ok(double_abs()),
        "two_pits" => Ok(two_pits()),
        "cross_abs2d" => Ok(cross_abs2d()),
        "diff_cx" => Ok(diff_cx()),
        "smooth_cx" => Ok(smooth_cx()),
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

pub fn all() -> Vec<ZooEntry> {
    NAMES
        .iter()
        .map(|n| get(n).expect("catalogue names are valid"))
        .collect()
}

fn interval(lo: f64, hi: f64) -> BoxDomain {
    BoxDomain::interval(lo, hi).expect("static bounds")
}

fn quad() -> ZooEntry {
    let mut b = ExprBuilder::new(1);
    let x = b.var(0);
    let f = b.pow(x, 2);
    let expr = b.finish(f, interval(-1.0, 1.0)).expect("static expression");
    let mut facts = Vec::new();
    for delta in [0.1, 0.01] {
        facts.push(Fact::new(
            format!(
                "delta-stationary set is [-{0}/2, {0}/2] at delta={0}",
                delta
            ),
            Provenance::Published,
            Check::StationarySetRadius {
                center: 0.0,
                delta,
                step: 1e-4,
                expected: delta / 2.0,
            },
        ));
    }
    facts.push(Fact::new(
        "G_f(0.3) = -0.6",
        Provenance::Published,
        Check::Gauge {
            x: vec![0.3],
            expected: -0.6,
        },
    ));
    facts.push(Fact::new(
        "f(0) = 0",
        Provenance::Trivial,
        Check::Value {
            x: vec![0.0],
            expected: 0.0,
            quadrature: false,
        },
    ));
    facts.push(Fact::new(
        "single stationary value",
        Provenance::Trivial,
        Check::CensusClusters {
            step: 1e-3,
            expected: 1,
        },
    ));
    ZooEntry {
        name: "quad",
        description: "x^2",
        expr,
        x_star: vec![0.0],
        r: 1.0,
        facts,
    }
}

fn abs1d() -> ZooEntry {
    let mut b = ExprBuilder::new(1);
    let x = b.var(0);
    let f = b.abs(x);
    let expr = b.finish(f, interval(-1.0, 1.0)).expect("static expression");
    let facts = vec![
        Fact::new(
            "f'+(0) = 1",
            Provenance::Trivial,
            Check::OneSided {
                x: 0.0,
                side: Side::Right,
                expected: 1.0,
                relative: false,
            },
        ),
        Fact::new(
            "f'-(0) = -1",
            Provenance::Trivial,
            Check::OneSided {
                x: 0.0,
                side: Side::Left,
                expected: -1.0,
                relative: false,
            },
        ),
        Fact::new(
            "G_f(0) = 1",
            Provenance::Trivial,
            Check::Gauge {
                x: vec![0.0],
                expected: 1.0,
            },
        ),
        Fact::new(
            "single stationary value",
            Provenance::Trivial,
            Check::CensusClusters {
                step: 1e-3,
                expected: 1,
            },
        ),
    ];
    ZooEntry {
        name: "abs1d",
        description: "|x|",
        expr,
        x_star: vec![0.0],
        r: 1.0,
        facts,
    }
}

fn double_abs() -> ZooEntry {
    let mut b = ExprBuilder::new(1);
    let x = b.var(0);
    let p = b.shift(x, 1.0);
    let m = b.shift(x, -1.0);
    let (ap, am) = (b.abs(p), b.abs(m));
    let f = b.sum(&[ap, am]);
    let expr = b.finish(f, interval(-2.0, 2.0)).expect("static expression");
    let facts = vec![
        Fact::new(
            "f(0.5) = 2",
            Provenance::Published,
            Check::Value {
                x: vec![0.5],
                expected: 2.0,
                quadrature: false,
            },
        ),
        Fact::new(
            "delta-stationary points with delta=1 lie in [-1, 1]",
            Provenance::Derived,
            Check::StationarySetInside {
                delta: 1.0,
                step: 1e-3,
                lo: -1.0,
                hi: 1.0,
                closed: true,
            },
        ),
        Fact::new(
            "G_f(1) = 0, the end of the flat bottom is stationary",
            Provenance::Derived,
            Check::Gauge {
                x: vec![1.0],
                expected: 0.0,
            },
        ),
        Fact::new(
            "f'+(1) = 2",
            Provenance::Derived,
            Check::OneSided {
                x: 1.0,
                side: Side::Right,
                expected: 2.0,
                relative: false,
            },
        ),
        Fact::new(
            "f'-(1) = 0",
            Provenance::Derived,
            Check::OneSided {
                x: 1.0,
                side: Side::Left,
                expected: 0.0,
                relative: false,
            },
        ),
        Fact::new(
            "single stationary value",
            Provenance::Derived,
            Check::CensusClusters {
                step: 1e-2,
                expected: 1,
            },
        ),
    ];
    ZooEntry {
        name: "double_abs",
        description: "|x+1| + |x-1|",
        expr,
        x_star: vec![0.0],
        r: 1.0,
        facts,
    }
}

fn two_pits() -> ZooEntry {
    let mut b = ExprBuilder::new(1);
    let x = b.var(0);
    let p = b.shift(x, 1.0);
    let m = b.shift(x, -1.0);
    let (p2, m2) = (b.pow(p, 2), b.pow(m, 2));
    let f = b.min(&[m2, p2]);
    let expr = b.finish(f, interval(-3.0, 3.0)).expect("static expression");
    let facts = vec![
        Fact::new(
            "G_f(1) = 0",
            Provenance::Derived,
            Check::Gauge {
                x: vec![1.0],
                expected: 0.0,
            },
        ),
        Fact::new(
            "G_f(-1) = 0",
            Provenance::Derived,
            Check::Gauge {
                x: vec![-1.0],
                expected: 0.0,
            },
        ),
        Fact::new(
            "f'+(0) = -2",
            Provenance::Derived,
            Check::OneSided {
                x: 0.0,
                side: Side::Right,
                expected: -2.0,
                relative: false,
            },
        ),
        Fact::new(
            "f'-(0) = 2",
            Provenance::Derived,
            Check::OneSided {
                x: 0.0,
                side: Side::Left,
                expected: 2.0,
                relative: false,
            },
        ),
        Fact::new(
            "both minima share the value 0",
            Provenance::Derived,
            Check::CensusClusters {
                step: 1e-2,
                expected: 1,
            },
        ),
    ];
    ZooEntry {
        name: "two_pits",
        description: "min{(x-1)^2, (x+1)^2}",
        expr,
        x_star: vec![1.0],
        r: 1.0,
        facts,
    }
}

fn cross_abs2d() -> ZooEntry {
    let mut b = ExprBuilder::new(2);
    let (x, y) = (b.var(0), b.var(1));
    let (ax, ay) = (b.abs(x), b.abs(y));
    let f = b.sum(&[ax, ay]);
    let expr = b
        .finish(f, BoxDomain::cube(2, -1.0, 1.0).expect("static bounds"))
        .expect("static expression");
    let facts = vec![
        Fact::new(
            "G_f(0, 0) = 1",
            Provenance::Derived,
            Check::Gauge {
                x: vec![0.0, 0.0],
                expected: 1.0,
            },
        ),
        Fact::new(
            "G_f(0, 0.5) = -1",
            Provenance::Derived,
            Check::Gauge {
                x: vec![0.0, 0.5],
                expected: -1.0,
            },
        ),
        Fact::new(
            "G_f(0.3, -0.2) = -sqrt(2)",
            Provenance::Derived,
            Check::Gauge {
                x: vec![0.3, -0.2],
                expected: -2f64.sqrt(),
            },
        ),
    ];
    ZooEntry {
        name: "cross_abs2d",
        description: "|x0| + |x1|",
        expr,
        x_star: vec![0.0, 0.0],
        r: 1.0,
        facts,
    }
}

/// `min{0, x² sin(1/x)} - ∫₀ˣ 2u sin(1/u) du + |x|`
fn diff_cx() -> ZooEntry {
    let mut b = ExprBuilder::new(1);
    let x = b.var(0);
    let h = b.special(Special::SinOfReciprocal, x);
    let zero = b.constant(0.0);
    let m = b.min(&[zero, h]);
    let g = b.special(Special::IntegralG1, x);
    let ng = b.neg(g);
    let ax = b.abs(x);
    let f = b.sum(&[m, ng, ax]);
    let expr = b
        .finish(f, interval(-1.0 / PI - 0.05, 1.0 / PI + 0.05))
        .expect("static expression");

    let one_sided = |x: f64, side, expected| Check::OneSided {
        x,
        side,
        expected,
        relative: false,
    };
    let mut facts = vec![
        Fact::new(
            "f'+(0) = 1",
            Provenance::Published,
            one_sided(0.0, Side::Right, 1.0),
        ),
        Fact::new(
            "f'-(0) = -1",
            Provenance::Published,
            one_sided(0.0, Side::Left, -1.0),
        ),
    ];
    for k in 1..=5 {
        let kf = f64::from(k);
        let x = 1.0 / (2.0 * kf * PI);
        facts.push(Fact::new(
            format!("f'-(1/(2*{k}pi)) = 1"),
            Provenance::Published,
            one_sided(x, Side::Left, 1.0),
        ));
        facts.push(Fact::new(
            format!("f'+(1/(2*{k}pi)) = 0"),
            Provenance::Published,
            one_sided(x, Side::Right, 0.0),
        ));
        let x = 1.0 / ((2.0 * kf - 1.0) * PI);
        facts.push(Fact::new(
            format!("f'-(1/({}pi)) = 2", 2 * k - 1),
            Provenance::Published,
            one_sided(x, Side::Left, 2.0),
        ));
        facts.push(Fact::new(
            format!("f'+(1/({}pi)) = 1", 2 * k - 1),
            Provenance::Published,
            one_sided(x, Side::Right, 1.0),
        ));
        for t in [0.1, 0.3, 0.5, 1.0] {
            let x = 1.0 / (2.0 * kf * PI - t);
            let expected = 1.0 - f64::cos(t);
            for side in [Side::Left, Side::Right] {
                facts.push(Fact::new(
                    format!(
                        "f'(1/(2*{k}pi - {t})) = 1 - cos({t}) [{}]",
                        if side == Side::Left { "left" } else { "right" }
                    ),
                    Provenance::Published,
                    one_sided(x, side, expected),
                ));
            }
        }
    }
    facts.push(Fact::new(
        "f'- > 0 on (0, 1/pi)",
        Provenance::Published,
        Check::SignOnInterval {
            lo: 0.0,
            hi: 1.0 / PI,
            side: Side::Left,
            positive: true,
            samples: 4000,
        },
    ));
    facts.push(Fact::new(
        "f'+ < 0 on (-1/pi, 0)",
        Provenance::Derived,
        Check::SignOnInterval {
            lo: -1.0 / PI,
            hi: 0.0,
            side: Side::Right,
            positive: false,
            samples: 4000,
        },
    ));
    facts.push(Fact::new(
        "0 is the unique minimiser on B(0, 1/pi)",
        Provenance::Published,
        Check::UniqueMinimum {
            x_star: vec![0.0],
            r: 1.0 / PI,
            step: 1e-4,
        },
    ));
    let x = 1.0 / PI;
    facts.push(Fact::new(
        "f(1/pi) = 1/pi - g(1/pi)",
        Provenance::Derived,
        Check::Value {
            x: vec![x],
            expected: x - quadrature::integral_g1(x, 1e-10),
            quadrature: true,
        },
    ));
    ZooEntry {
        name: "diff_cx",
        description: "min{0, x^2 sin(1/x)} - int_0^x 2u sin(1/u) du + |x|",
        expr,
        x_star: vec![0.0],
        r: 1.0 / PI,
        facts,
    }
}

/// `min{0, h(|x|)} - g(|x|)` with `h(x) = e^{-1/x} sin(1/x)` and
/// `g(x) = ∫₀ˣ u⁻² e^{-1/u}(sin(1/u) - 1) du`.
fn smooth_cx() -> ZooEntry {
    let mut b = ExprBuilder::new(1);
    let x = b.var(0);
    let ax = b.abs(x);
    let h = b.special(Special::CauchyEnvelope, ax);
    let zero = b.constant(0.0);
    let m = b.min(&[zero, h]);
    let g = b.special(Special::IntegralG2, ax);
    let ng = b.neg(g);
    let f = b.sum(&[m, ng]);
    let expr = b.finish(f, interval(-1.0, 1.0)).expect("static expression");

    let rel = |x: f64, side, expected| Check::OneSided {
        x,
        side,
        expected,
        relative: true,
    };
    let damped = |x: f64| (-1.0 / x).exp() / (x * x);
    let mut facts = vec![
        Fact::new(
            "f'+(0) = 0",
            Provenance::Derived,
            Check::OneSided {
                x: 0.0,
                side: Side::Right,
                expected: 0.0,
                relative: false,
            },
        ),
        Fact::new(
            "f'-(0) = 0",
            Provenance::Derived,
            Check::OneSided {
                x: 0.0,
                side: Side::Left,
                expected: 0.0,
                relative: false,
            },
        ),
    ];
    for k in 1..=5 {
        let kf = f64::from(k);
        let x = 1.0 / (2.0 * kf * PI);
        facts.push(Fact::new(
            format!("f'-(1/(2*{k}pi)) = x^-2 e^(-1/x)"),
            Provenance::Published,
            rel(x, Side::Left, damped(x)),
        ));
        let x = 1.0 / ((2.0 * kf - 1.0) * PI);
        facts.push(Fact::new(
            format!("f'-(1/({}pi)) = 2 x^-2 e^(-1/x)", 2 * k - 1),
            Provenance::Published,
            rel(x, Side::Left, 2.0 * damped(x)),
        ));
        for t in [0.1, 0.5, 1.0] {
            let a: f64 = 2.0 * kf * PI - t;
            let expected = a * a * (-a).exp() * (1.0 - f64::cos(t));
            facts.push(Fact::new(
                format!("f'(1/(2*{k}pi - {t})) = a^2 e^(-a) (1 - cos {t})"),
                Provenance::Published,
                rel(1.0 / a, Side::Right, expected),
            ));
        }
    }
    facts.push(Fact::new(
        "f'- > 0 on (0.01, 1)",
        Provenance::Published,
        Check::SignOnInterval {
            lo: 0.01,
            hi: 1.0,
            side: Side::Left,
            positive: true,
            samples: 4000,
        },
    ));
    ZooEntry {
        name: "smooth_cx",
        description:
            "min{0, h(|x|)} - g(|x|), h(x) = exp(-1/x) sin(1/x), g' = x^-2 exp(-1/x)(sin(1/x) - 1)",
        expr,
        x_star: vec![0.0],
        r: 1.0,
        facts,
    }
}

/// Kink band used when checking facts at points that are kinks in exact arithmetic.
pub const FACT_ZETA: f64 = 1e-12;

/// Outcome of one fact.
#[derive(Debug, Clone, PartialEq)]
pub struct FactOutcome {
    pub label: String,
    pub provenance: Provenance,
    pub computed: f64,
    pub reference: f64,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryReport {
    pub name: String,
    pub outcomes: Vec<FactOutcome>,
}

impl EntryReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn published_facts_pass(&self) -> bool {
        self.outcomes
            .iter()
            .filter(|o| o.provenance == Provenance::Published)
            .all(|o| o.pass)
    }
}

fn one_sided(expr: &Expr, x: f64, side: Side) -> Result<f64> {
    let s = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let q = DirectionalQuery::new(vec![x], vec![s]).with_zeta(FACT_ZETA);
    let d = dini::dini_directional(expr, &q)?;
    Ok(match side {
        Side::Right => d,
        Side::Left => -d,
    })
}

/// Grid with spacing `step` over the whole domain, anchored at `center`.
fn anchored_grid(expr: &Expr, center: &[f64], step: f64) -> Result<GridSpec> {
    let dom = expr.domain();
    let reach = dom
        .lo()
        .iter()
        .zip(dom.hi())
        .map(|(a, b)| b - a)
        .fold(0.0, f64::max);
    Ok(GridSpec::around(center, reach, step, dom)?.with_zeta(FACT_ZETA))
}

fn run_check(expr: &Expr, check: &Check, tol: f64) -> Result<(f64, f64, f64, f64, bool)> {
    let compare = |computed: f64, reference: f64, tol: f64, relative: bool| {
        let scale = if relative {
            reference.abs().max(f64::MIN_POSITIVE)
        } else {
            1.0 + reference.abs()
        };
        let residual = (computed - reference).abs() / scale;
        (computed, reference, residual, tol, residual <= tol)
    };
    Ok(match check {
        Check::OneSided {
            x,
            side,
            expected,
            relative,
        } => compare(one_sided(expr, *x, *side)?, *expected, tol, *relative),
        Check::Gauge { x, expected } => {
            let v = dini::gf(expr, x, &GfOptions::with_zeta(FACT_ZETA))?;
            let (c, r, res, t, pass) = compare(v.gf_estimate, *expected, tol, false);
            (c, r, res, t, pass && v.decisive)
        }
        Check::Value {
            x,
            expected,
            quadrature,
        } => {
            let t = if *quadrature { tol.max(1e-7) } else { tol };
            compare(expr.evaluate(x)?, *expected, t, false)
        }
        Check::SignOnInterval {
            lo,
            hi,
            side,
            positive,
            samples,
        } => {
            let mut extreme = if *positive {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            for i in 1..=*samples {
                let x = lo + (hi - lo) * i as f64 / (*samples + 1) as f64;
                let d = one_sided(expr, x, *side)?;
                extreme = if *positive {
                    extreme.min(d)
                } else {
                    extreme.max(d)
                };
            }
            let pass = if *positive {
                extreme > 0.0
            } else {
                extreme < 0.0
            };
            (extreme, 0.0, 0.0, 0.0, pass)
        }
        Check::StationarySetRadius {
            center,
            delta,
            step,
            expected,
        } => {
            let grid = anchored_grid(expr, &[*center], *step)?;
            let hits = scan::delta_scan(expr, &grid, *delta)?;
            let sup = hits
                .iter()
                .map(|p| (p.point[0] - center).abs())
                .fold(0.0, f64::max);
            let residual = (sup - expected).abs();
            let allowed = step * (1.0 + 1e-9);
            (
                sup,
                *expected,
                residual,
                allowed,
                residual <= allowed && hits.iter().all(|p| p.verdict == Tri::Yes),
            )
        }
        Check::StationarySetInside {
            delta,
            step,
            lo,
            hi,
            closed,
        } => {
            let grid = anchored_grid(expr, &[0.5 * (lo + hi)], *step)?;
            let hits = scan::delta_scan(expr, &grid, *delta)?;
            let mid = 0.5 * (lo + hi);
            let reach = hits
                .iter()
                .map(|p| (p.point[0] - mid).abs())
                .fold(0.0, f64::max);
            let inside = |x: f64| {
                if *closed {
                    x >= *lo && x <= *hi
                } else {
                    x > *lo && x < *hi
                }
            };
            let pass = !hits.is_empty() && hits.iter().all(|p| inside(p.point[0]));
            (reach, 0.5 * (hi - lo), 0.0, 0.0, pass)
        }
        Check::UniqueMinimum { x_star, r, step } => {
            let grid = GridSpec::around(x_star, *r, *step, expr.domain())?;
            let rep = stability::verify_unique_min(expr, x_star, *r, &grid)?;
            (rep.margin, 0.0, 0.0, 0.0, rep.is_unique())
        }
        Check::CensusClusters { step, expected } => {
            let dom = expr.domain();
            let center: Vec<f64> = dom
                .lo()
                .iter()
                .zip(dom.hi())
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let grid = anchored_grid(expr, &center, *step)?;
            let c = scan::value_census(expr, &grid, scan::CENSUS_DELTA, None)?;
            let n = c.clusters.len();
            (
                n as f64,
                *expected as f64,
                (n as f64 - *expected as f64).abs(),
                0.0,
                n == *expected,
            )
        }
    })
}

/// Runs every fact of `entry`. `tol` applies to numeric comparisons; facts whose
/// reference comes from quadrature use at least `1e-7`.
pub fn verify_entry(entry: &ZooEntry, tol: f64) -> Result<EntryReport> {
    let outcomes = entry
        .facts
        .iter()
        .map(|fact| {
            let (computed, reference, residual, tol, pass) =
                run_check(&entry.expr, &fact.check, tol)?;
            Ok(FactOutcome {
                label: fact.label.clone(),
                provenance: fact.provenance,
                computed,
                reference,
                residual,
                tol,
                pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EntryReport {
        name: entry.name.to_string(),
        outcomes,
    })
}
