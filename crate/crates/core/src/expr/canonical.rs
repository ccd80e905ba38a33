//! Staged absolute-value form.
//!
//! Every `max`/`min` is rewritten with `max{a,b} = (|a-b| + a + b)/2` and
//! `min{a,b} = -max{-a,-b}` (k-ary nodes are left-nested), and every `|·|` becomes
//! a stage boundary. The result is a tape of abs-free operations plus a list of
//! stage outputs `z_1 … z_m`: the tape may read `|z_j|` for `j < m` through
//! [`Op::AbsOf`], and `z_m` is the function value.
//!
//! Replacing each `|z_j|` by `s_j·z_j` for a fixed sign pattern `s` gives the
//! branch function `f^s`, which agrees with `f` wherever the signs of `z_j` are
//! compatible with `s`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use super::{Expr, Node, Primitive};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// One abs-free tape operation. Operands are tape indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Const(f64),
    Var(usize),
    Affine {
        weights: Vec<f64>,
        bias: f64,
    },
    Apply(Primitive, usize),
    Sum(Vec<usize>),
    Product(Vec<usize>),
    Neg(usize),
    Scale(f64, usize),
    /// `|z_j|` for abs stage `j` (0-based).
    AbsOf(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalProgram {
    dim: usize,
    ops: Vec<Op>,
    /// Tape index of each stage output; the last entry is the function value.
    stages: Vec<usize>,
}

/// How `|z_j|` is read while evaluating the tape.
#[derive(Debug, Clone, Copy)]
pub(crate) enum AbsMode<'a> {
    Abs,
    Branch(&'a [i8]),
}

struct Lowering<'a> {
    expr: &'a Expr,
    ops: Vec<Op>,
    stages: Vec<usize>,
    map: Vec<usize>,
}

impl Lowering<'_> {
    fn push(&mut self, op: Op) -> usize {
        self.ops.push(op);
        self.ops.len() - 1
    }

    fn abs_stage(&mut self, z: usize) -> usize {
        self.stages.push(z);
        let j = self.stages.len() - 1;
        self.push(Op::AbsOf(j))
    }

    /// `(|a-b| + a + b)/2`
    fn max2(&mut self, a: usize, b: usize) -> usize {
        let nb = self.push(Op::Neg(b));
        let diff = self.push(Op::Sum(vec![a, nb]));
        let abs = self.abs_stage(diff);
        let total = self.push(Op::Sum(vec![abs, a, b]));
        self.push(Op::Scale(0.5, total))
    }

    /// `-max{-a, -b}`
    fn min2(&mut self, a: usize, b: usize) -> usize {
        let na = self.push(Op::Neg(a));
        let nb = self.push(Op::Neg(b));
        let m = self.max2(na, nb);
        self.push(Op::Neg(m))
    }

    fn lower(mut self) -> CanonicalProgram {
        for node in self.expr.nodes() {
            let m = |c: &super::NodeId, map: &[usize]| map[c.0];
            let idx = match node {
                Node::Const(c) => self.push(Op::Const(*c)),
                Node::Var(k) => self.push(Op::Var(*k)),
                Node::Affine { weights, bias } => self.push(Op::Affine {
                    weights: weights.clone(),
                    bias: *bias,
                }),
                Node::Apply(p, c) => {
                    let a = m(c, &self.map);
                    self.push(Op::Apply(*p, a))
                }
                Node::Sum(cs) => {
                    let args = cs.iter().map(|c| m(c, &self.map)).collect();
                    self.push(Op::Sum(args))
                }
                Node::Product(cs) => {
                    let args = cs.iter().map(|c| m(c, &self.map)).collect();
                    self.push(Op::Product(args))
                }
                Node::Neg(c) => {
                    let a = m(c, &self.map);
                    self.push(Op::Neg(a))
                }
                Node::Scale(k, c) => {
                    let a = m(c, &self.map);
                    self.push(Op::Scale(*k, a))
                }
                Node::Abs(c) => {
                    let a = m(c, &self.map);
                    self.abs_stage(a)
                }
                Node::Max(cs) | Node::Min(cs) => {
                    let is_max = matches!(node, Node::Max(_));
                    let mut acc = m(&cs[0], &self.map);
                    for c in &cs[1..] {
                        let b = m(c, &self.map);
                        acc = if is_max {
                            self.max2(acc, b)
                        } else {
                            self.min2(acc, b)
                        };
                    }
                    acc
                }
            };
            self.map.push(idx);
        }
        let out = *self.map.last().expect("non-empty expression");
        self.stages.push(out);
        CanonicalProgram {
            dim: self.expr.dim(),
            ops: self.ops,
            stages: self.stages,
        }
    }
}

/// Lowers `expr` into staged form. Pure; [`Expr::canonical`] caches the result.
pub fn to_canonical(expr: &Expr) -> CanonicalProgram {
    Lowering {
        expr,
        ops: Vec::new(),
        stages: Vec::new(),
        map: Vec::with_capacity(expr.nodes().len()),
    }
    .lower()
}

impl CanonicalProgram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stages `m` (abs stages plus the output stage).
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// Number of abs stages, `m - 1` (the length of every sign vector).
    pub fn abs_stage_count(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn stage_nodes(&self) -> &[usize] {
        &self.stages
    }

    /// No stage contains abs/max/min: the tape only has `AbsOf` reads of earlier stages.
    pub fn is_well_staged(&self) -> bool {
        self.ops.iter().enumerate().all(|(i, op)| match op {
            Op::AbsOf(j) => *j + 1 < self.stages.len() && self.stages[*j] < i,
            _ => true,
        })
    }

    pub(crate) fn tape_values(&self, x: &[f64], mode: AbsMode<'_>) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut v: Vec<f64> = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let val = match op {
                Op::Const(c) => *c,
                Op::Var(k) => x[*k],
                Op::Affine { weights, bias } => {
                    bias + weights.iter().zip(x).map(|(w, t)| w * t).sum::<f64>()
                }
                Op::Apply(p, a) => p.value(v[*a]).map_err(|reason| Error::Evaluation {
                    node: i,
                    what: p.name(),
                    reason,
                })?,
                Op::Sum(args) => args.iter().map(|a| v[*a]).sum(),
                Op::Product(args) => args.iter().map(|a| v[*a]).product(),
                Op::Neg(a) => -v[*a],
                Op::Scale(k, a) => k * v[*a],
                Op::AbsOf(j) => {
                    let z = v[self.stages[*j]];
                    match mode {
                        AbsMode::Abs => z.abs(),
                        AbsMode::Branch(s) => f64::from(s[*j]) * z,
                    }
                }
            };
            v.push(val);
        }
        Ok(v)
    }

    /// `f(x)` through the staged evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let v = self.tape_values(x, AbsMode::Abs)?;
        Ok(v[*self.stages.last().expect("output stage")])
    }

    /// Stage values `z_1(x) … z_m(x)`.
    pub fn stage_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.tape_values(x, AbsMode::Abs)?;
        Ok(self.stages.iter().map(|&s| v[s]).collect())
    }

    /// `σ(x)` with entries `|z_i| ≤ ζ` classified 0 and flagged ambiguous.
    pub fn sign_vector(&self, x: &[f64], zeta: f64) -> Result<SignVector> {
        let z = self.stage_values(x)?;
        Ok(SignVector::classify(&z[..z.len() - 1], zeta))
    }

    /// Value and gradient of the branch function `f^s` at `x`.
    ///
    /// `x` need not lie in the region of `s`; the branch is evaluated as an analytic
    /// function wherever its primitives are defined.
    pub fn eval_branch(&self, signs: &[i8], x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if signs.len() != self.abs_stage_count() {
            return Err(Error::Dimension {
                expected: self.abs_stage_count(),
                got: signs.len(),
            });
        }
        if signs.iter().any(|s| !(-1..=1).contains(s)) {
            return Err(Error::Argument("sign entries must be -1, 0 or +1".into()));
        }
        let v = self.tape_values(x, AbsMode::Branch(signs))?;
        let out = *self.stages.last().expect("output stage");
        let mut adj = vec![0.0; self.ops.len()];
        adj[out] = 1.0;
        let mut grad = vec![0.0; self.dim];
        for i in (0..=out).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            match &self.ops[i] {
                Op::Const(_) => {}
                Op::Var(k) => grad[*k] += a,
                Op::Affine { weights, .. } => {
                    for (g, w) in grad.iter_mut().zip(weights) {
                        *g += a * w;
                    }
                }
                Op::Apply(p, c) => adj[*c] += a * p.derivative(v[*c]),
                Op::Sum(args) => {
                    for c in args {
                        adj[*c] += a;
                    }
                }
                Op::Product(args) => {
                    for (k, c) in args.iter().enumerate() {
                        let others: f64 = args
                            .iter()
                            .enumerate()
                            .filter(|(l, _)| *l != k)
                            .map(|(_, d)| v[*d])
                            .product();
                        adj[*c] += a * others;
                    }
                }
                Op::Neg(c) => adj[*c] -= a,
                Op::Scale(k, c) => adj[*c] += a * k,
                Op::AbsOf(j) => adj[self.stages[*j]] += a * f64::from(signs[*j]),
            }
        }
        Ok((v[out], grad))
    }

    /// Forward-mode tangents of every tape entry along `dir`, given abs-mode
    /// `values` from [`Self::tape_values`].
    ///
    /// A stage with `|z_j| ≤ ζ` is treated as sitting on its kink and contributes
    /// the one-sided rate `|dz_j|`; otherwise `sign(z_j)·dz_j`.
    pub(crate) fn tangents(&self, values: &[f64], dir: &[f64], zeta: f64) -> Vec<f64> {
        let mut d: Vec<f64> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let t = match op {
                Op::Const(_) => 0.0,
                Op::Var(k) => dir[*k],
                Op::Affine { weights, .. } => weights.iter().zip(dir).map(|(w, s)| w * s).sum(),
                Op::Apply(p, c) => {
                    let dc = d[*c];
                    if dc == 0.0 {
                        0.0
                    } else {
                        p.derivative(values[*c]) * dc
                    }
                }
                Op::Sum(args) => args.iter().map(|a| d[*a]).sum(),
                Op::Product(args) => {
                    let mut acc = 0.0;
                    for (k, c) in args.iter().enumerate() {
                        if d[*c] == 0.0 {
                            continue;
                        }
                        let others: f64 = args
                            .iter()
                            .enumerate()
                            .filter(|(l, _)| *l != k)
                            .map(|(_, e)| values[*e])
                            .product();
                        acc += d[*c] * others;
                    }
                    acc
                }
                Op::Neg(a) => -d[*a],
                Op::Scale(k, a) => k * d[*a],
                Op::AbsOf(j) => {
                    let node = self.stages[*j];
                    let (z, dz) = (values[node], d[node]);
                    if z.abs() <= zeta {
                        dz.abs()
                    } else {
                        z.signum() * dz
                    }
                }
            };
            d.push(t);
        }
        d
    }

    /// Indices of abs stages within `ζ` of their kink at the given tape values.
    pub(crate) fn kink_stages(&self, values: &[f64], zeta: f64) -> Vec<usize> {
        self.stages[..self.stages.len() - 1]
            .iter()
            .enumerate()
            .filter(|(_, &n)| values[n].abs() <= zeta)
            .map(|(j, _)| j)
            .collect()
    }

    pub(crate) fn output_node(&self) -> usize {
        *self.stages.last().expect("output stage")
    }

    /// Every sign pattern realised on the grid, with the first grid point realising it.
    pub fn discover_regions(&self, expr: &Expr, grid: &GridSpec) -> Result<RegionMap> {
        if grid.is_empty() {
            return Err(Error::Argument("empty grid".into()));
        }
        grid.check_within(expr.domain())?;
        let points = grid.points_in(expr.domain());
        let signs: Vec<SignVector> = points
            .par_iter()
            .map(|p| self.sign_vector(p, grid.zeta))
            .collect::<Result<Vec<_>>>()?;
        let mut regions: BTreeMap<Vec<i8>, Region> = BTreeMap::new();
        for (p, s) in points.into_iter().zip(signs) {
            regions
                .entry(s.signs)
                .and_modify(|r| r.count += 1)
                .or_insert(Region {
                    witness: p,
                    count: 1,
                });
        }
        Ok(RegionMap {
            regions,
            resolution: grid.resolution_bound(),
        })
    }
}

/// Sign pattern σ(x) of the abs stages.
#[derive(Debug, Clone, PartialEq)]
pub struct SignVector {
    pub signs: Vec<i8>,
    /// Entries with `|z_i| ≤ ζ`.
    pub ambiguous: Vec<bool>,
    pub zeta: f64,
}

impl SignVector {
    pub fn classify(z: &[f64], zeta: f64) -> Self {
        let ambiguous: Vec<bool> = z.iter().map(|v| v.abs() <= zeta).collect();
        let signs = z
            .iter()
            .zip(&ambiguous)
            .map(|(v, amb)| {
                if *amb {
                    0
                } else if *v > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        SignVector {
            signs,
            ambiguous,
            zeta,
        }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// True when no entry is zero: `x` lies in the interior region `Q_s`.
    pub fn is_full(&self) -> bool {
        self.signs.iter().all(|s| *s != 0)
    }

    /// All ±1 patterns obtained by filling the zero entries.
    pub fn completions(&self) -> Vec<Vec<i8>> {
        let zeros: Vec<usize> = (0..self.len()).filter(|&i| self.signs[i] == 0).collect();
        (0..1u64 << zeros.len())
            .map(|mask| {
                let mut s = self.signs.clone();
                for (bit, &i) in zeros.iter().enumerate() {
                    s[i] = if mask >> bit & 1 == 1 { 1 } else { -1 };
                }
                s
            })
            .collect()
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_pattern(&self.signs))
    }
}

/// `(+,-,0)` style rendering of a sign pattern.
pub fn format_pattern(signs: &[i8]) -> String {
    let parts: Vec<&str> = signs
        .iter()
        .map(|s| match s {
            1 => "+",
            -1 => "-",
            _ => "0",
        })
        .collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub witness: Vec<f64>,
    pub count: usize,
}

/// Sign patterns found on a grid. Patterns not realised on the grid may be missing;
/// `resolution` bounds how far an unseen region can hide from every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub regions: BTreeMap<Vec<i8>, Region>,
    pub resolution: f64,
}

impl RegionMap {
    pub fn patterns(&self) -> Vec<Vec<i8>> {
        self.regions.keys().cloned().collect()
    }

    pub fn contains(&self, signs: &[i8]) -> bool {
        self.regions.contains_key(signs)
    }

    pub fn total_points(&self) -> usize {
        self.regions.values().map(|r| r.count).sum()
    }
}
