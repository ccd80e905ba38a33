//! Functions built from analytic primitives, `abs`, `max` and `min`.
//!
//! An [`Expr`] is a flat DAG: every node refers only to nodes that precede it,
//! and the last node is the output. Evaluation walks the nodes once.
//! [`Expr::canonical`] lowers the DAG into the staged absolute-value form used by
//! the sign-pattern and Dini machinery (see [`canonical`]).

pub mod canonical;
pub mod dsl;
pub mod special;

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
pub(crate) use canonical::AbsMode;
pub use canonical::{CanonicalProgram, RegionMap, SignVector};
pub use special::Special;

/// Index of a node inside an [`Expr`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// Unary analytic (or declared non-analytic) primitives applied to a sub-expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// Integer power `e^k`. Negative powers are undefined at 0.
    Pow(i32),
    Sin,
    Cos,
    Exp,
    /// `1/e`, refused when `|e|` falls below [`RECIP_GUARD`].
    Recip,
    Special(Special),
}

/// Smallest magnitude accepted by [`Primitive::Recip`].
pub const RECIP_GUARD: f64 = 1e-300;

impl Primitive {
    pub fn is_analytic(self) -> bool {
        !matches!(self, Primitive::Special(_))
    }

    pub fn name(self) -> String {
        match self {
            Primitive::Pow(k) => format!("pow {k}"),
            Primitive::Sin => "sin".into(),
            Primitive::Cos => "cos".into(),
            Primitive::Exp => "exp".into(),
            Primitive::Recip => "recip".into(),
            Primitive::Special(s) => format!("special {}", s.name()),
        }
    }

    /// Value at `t`, or a reason string when `t` is outside the primitive's domain.
    pub fn value(self, t: f64) -> std::result::Result<f64, String> {
        let v = match self {
            Primitive::Pow(k) => {
                if k < 0 && t == 0.0 {
                    return Err("negative power of zero".into());
                }
                t.powi(k)
            }
            Primitive::Sin => t.sin(),
            Primitive::Cos => t.cos(),
            Primitive::Exp => t.exp(),
            Primitive::Recip => {
                if t.abs() < RECIP_GUARD {
                    return Err(format!("reciprocal of {t:e}"));
                }
                1.0 / t
            }
            Primitive::Special(s) => s.value(t),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite result at argument {t:e}"))
        }
    }

    /// Exact first derivative at `t` (the caller has already checked the domain).
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Primitive::Pow(0) => 0.0,
            Primitive::Pow(k) => f64::from(k) * t.powi(k - 1),
            Primitive::Sin => t.cos(),
            Primitive::Cos => -t.sin(),
            Primitive::Exp => t.exp(),
            Primitive::Recip => -1.0 / (t * t),
            Primitive::Special(s) => s.derivative(t),
        }
    }
}

/// One node of an [`Expr`].
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Affine { weights: Vec<f64>, bias: f64 },
    Apply(Primitive, NodeId),
    Sum(Vec<NodeId>),
    Product(Vec<NodeId>),
    Neg(NodeId),
    Scale(f64, NodeId),
    Abs(NodeId),
    Max(Vec<NodeId>),
    Min(Vec<NodeId>),
}

impl Node {
    fn children(&self) -> Vec<NodeId> {
        match self {
            Node::Const(_) | Node::Var(_) | Node::Affine { .. } => vec![],
            Node::Apply(_, c) | Node::Neg(c) | Node::Scale(_, c) | Node::Abs(c) => vec![*c],
            Node::Sum(cs) | Node::Product(cs) | Node::Max(cs) | Node::Min(cs) => cs.clone(),
        }
    }
}

/// Axis-aligned box `[lo₀, hi₀] × … × [lo_{n-1}, hi_{n-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Argument(
                "box bounds must be non-empty and of equal length".into(),
            ));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::Argument(format!(
                    "bad bounds on axis {i}: [{a}, {b}]"
                )));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        BoxDomain::new(vec![lo; n], vec![hi; n])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        BoxDomain::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| a <= v && v <= b)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (axis, (v, (a, b))) in x.iter().zip(self.lo.iter().zip(&self.hi)).enumerate() {
            if !(a <= v && v <= b) {
                return Err(Error::OutsideDomain {
                    point: x.to_vec(),
                    axis,
                });
            }
        }
        Ok(())
    }

    /// Clamp `x` into the box, coordinate by coordinate.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (a, b)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*a, *b);
        }
    }

    /// Whether moving from `x` along `s` stays in the box for some positive step.
    pub fn is_feasible_direction(&self, x: &[f64], s: &[f64]) -> bool {
        x.iter()
            .zip(s)
            .zip(self.lo.iter().zip(&self.hi))
            .all(|((xi, si), (a, b))| !((*xi <= *a && *si < 0.0) || (*xi >= *b && *si > 0.0)))
    }
}

impl fmt::Display for BoxDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| format!("[{a}, {b}]"))
            .collect();
        f.write_str(&parts.join(" x "))
    }
}

/// A function `f: Ω → ℝ` in the piecewise-analytic class.
#[derive(Debug, Clone)]
pub struct Expr {
    nodes: Vec<Node>,
    dim: usize,
    domain: BoxDomain,
    analytic: bool,
    canonical: OnceLock<CanonicalProgram>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.dim == other.dim && self.domain == other.domain
    }
}

impl Expr {
    /// Builds an expression from nodes in topological order; the last node is the output.
    pub fn from_nodes(nodes: Vec<Node>, domain: BoxDomain) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Malformed("expression has no nodes".into()));
        }
        let dim = domain.dim();
        let mut analytic = true;
        for (i, node) in nodes.iter().enumerate() {
            for c in node.children() {
                if c.0 >= i {
                    return Err(Error::Malformed(format!(
                        "node {i} refers to later node {}",
                        c.0
                    )));
                }
            }
            match node {
                Node::Var(k) if *k >= dim => {
                    return Err(Error::Malformed(format!(
                        "variable x{k} exceeds dimension {dim}"
                    )));
                }
                Node::Affine { weights, .. } if weights.len() != dim => {
                    return Err(Error::Malformed(format!(
                        "affine node {i} has {} weights, need {dim}",
                        weights.len()
                    )));
                }
                Node::Sum(cs) | Node::Product(cs) | Node::Max(cs) | Node::Min(cs)
                    if cs.is_empty() =>
                {
                    return Err(Error::Malformed(format!("node {i} has no arguments")));
                }
                Node::Apply(p, _) if !p.is_analytic() => analytic = false,
                _ => {}
            }
        }
        Ok(Expr {
            nodes,
            dim,
            domain,
            analytic,
            canonical: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Same function on a different box (must have the same dimension).
    pub fn with_domain(&self, domain: BoxDomain) -> Result<Self> {
        if domain.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: domain.dim(),
            });
        }
        Expr::from_nodes(self.nodes.clone(), domain)
    }

    /// False when any node applies a declared non-analytic primitive.
    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn output(&self) -> NodeId {
        NodeId(self.nodes.len() - 1)
    }

    /// The staged absolute-value form, built on first use and cached.
    pub fn canonical(&self) -> &CanonicalProgram {
        self.canonical.get_or_init(|| canonical::to_canonical(self))
    }

    /// `f(x)`, evaluated directly on the DAG.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.domain.check(x)?;
        self.evaluate_unchecked(x)
    }

    /// `f(x)` without the domain check (primitive domain errors are still reported).
    pub fn evaluate_unchecked(&self, x: &[f64]) -> Result<f64> {
        let mut vals = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let v = match node {
                Node::Const(c) => *c,
                Node::Var(k) => x[*k],
                Node::Affine { weights, bias } => {
                    bias + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
                }
                Node::Apply(p, c) => p.value(vals[c.0]).map_err(|reason| Error::Evaluation {
                    node: i,
                    what: p.name(),
                    reason,
                })?,
                Node::Sum(cs) => cs.iter().map(|c| vals[c.0]).sum(),
                Node::Product(cs) => cs.iter().map(|c| vals[c.0]).product(),
                Node::Neg(c) => -vals[c.0],
                Node::Scale(k, c) => k * vals[c.0],
                Node::Abs(c) => vals[c.0].abs(),
                Node::Max(cs) => cs
                    .iter()
                    .map(|c| vals[c.0])
                    .fold(f64::NEG_INFINITY, f64::max),
                Node::Min(cs) => cs.iter().map(|c| vals[c.0]).fold(f64::INFINITY, f64::min),
            };
            vals.push(v);
        }
        Ok(*vals.last().expect("non-empty"))
    }
}

/// Incremental construction of an [`Expr`].
///
/// ```
/// use dinistat::expr::{BoxDomain, ExprBuilder};
/// let mut b = ExprBuilder::new(1);
/// let x = b.var(0);
/// let one = b.constant(1.0);
/// let p = b.sum(&[x, one]);
/// let minus_one = b.neg(one);
/// let m = b.sum(&[x, minus_one]);
/// let (ap, am) = (b.abs(p), b.abs(m));
/// let f = b.sum(&[ap, am]);
/// let expr = b.finish(f, BoxDomain::interval(-2.0, 2.0).unwrap()).unwrap();
/// assert_eq!(expr.evaluate(&[0.5]).unwrap(), 2.0);
/// ```
#[derive(Debug, Clone, Default)]
pub struct ExprBuilder {
    nodes: Vec<Node>,
    dim: usize,
}

impl ExprBuilder {
    pub fn new(dim: usize) -> Self {
        ExprBuilder {
            nodes: Vec::new(),
            dim,
        }
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, c: f64) -> NodeId {
        self.push(Node::Const(c))
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        self.push(Node::Var(i))
    }

    pub fn affine(&mut self, weights: Vec<f64>, bias: f64) -> NodeId {
        self.push(Node::Affine { weights, bias })
    }

    pub fn apply(&mut self, p: Primitive, arg: NodeId) -> NodeId {
        self.push(Node::Apply(p, arg))
    }

    pub fn pow(&mut self, arg: NodeId, k: i32) -> NodeId {
        self.apply(Primitive::Pow(k), arg)
    }

    pub fn special(&mut self, s: Special, arg: NodeId) -> NodeId {
        self.apply(Primitive::Special(s), arg)
    }

    pub fn sum(&mut self, args: &[NodeId]) -> NodeId {
        self.push(Node::Sum(args.to_vec()))
    }

    pub fn product(&mut self, args: &[NodeId]) -> NodeId {
        self.push(Node::Product(args.to_vec()))
    }

    pub fn neg(&mut self, arg: NodeId) -> NodeId {
        self.push(Node::Neg(arg))
    }

    pub fn scale(&mut self, k: f64, arg: NodeId) -> NodeId {
        self.push(Node::Scale(k, arg))
    }

    pub fn abs(&mut self, arg: NodeId) -> NodeId {
        self.push(Node::Abs(arg))
    }

    pub fn max(&mut self, args: &[NodeId]) -> NodeId {
        self.push(Node::Max(args.to_vec()))
    }

    pub fn min(&mut self, args: &[NodeId]) -> NodeId {
        self.push(Node::Min(args.to_vec()))
    }

    /// `arg + c`.
    pub fn shift(&mut self, arg: NodeId, c: f64) -> NodeId {
        let k = self.constant(c);
        self.sum(&[arg, k])
    }

    /// Finishes with `root` as output. Nodes not reachable from `root` are dropped.
    pub fn finish(self, root: NodeId, domain: BoxDomain) -> Result<Expr> {
        if domain.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: domain.dim(),
            });
        }
        if root.0 >= self.nodes.len() {
            return Err(Error::Malformed(format!("root {} does not exist", root.0)));
        }
        let mut keep = vec![false; root.0 + 1];
        keep[root.0] = true;
        for i in (0..=root.0).rev() {
            if keep[i] {
                for c in self.nodes[i].children() {
                    keep[c.0] = true;
                }
            }
        }
        let mut remap = vec![usize::MAX; root.0 + 1];
        let mut nodes = Vec::new();
        for (i, node) in self.nodes.into_iter().take(root.0 + 1).enumerate() {
            if !keep[i] {
                continue;
            }
            let m = |c: &NodeId| NodeId(remap[c.0]);
            let node = match node {
                Node::Apply(p, c) => Node::Apply(p, m(&c)),
                Node::Neg(c) => Node::Neg(m(&c)),
                Node::Scale(k, c) => Node::Scale(k, m(&c)),
                Node::Abs(c) => Node::Abs(m(&c)),
                Node::Sum(cs) => Node::Sum(cs.iter().map(m).collect()),
                Node::Product(cs) => Node::Product(cs.iter().map(m).collect()),
                Node::Max(cs) => Node::Max(cs.iter().map(m).collect()),
                Node::Min(cs) => Node::Min(cs.iter().map(m).collect()),
                leaf => leaf,
            };
            remap[i] = nodes.len();
            nodes.push(node);
        }
        Expr::from_nodes(nodes, domain)
    }
}
