//! Signal temporal logic syntax.
//!
//! A [`Formula`] is an immutable arena of [`Node`]s stored in post-order:
//! children always precede their parents and the root is the last node.
//! A node's index in the arena is its node-id, so ids are dense, distinct
//! and enumerated deterministically, which is what the work-list monitor
//! keys its buffers on.

mod parse;
mod predicate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_formula, ParseError, PredicateNames};
pub use predicate::{MarginFn, PredicateBinding, PredicateTable};

/// Index of a node inside its [`Formula`].
pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("interval lower bound {lo} exceeds upper bound {hi}")]
    Inverted { lo: usize, hi: usize },
    #[error("interval bound {0} s is not a whole number of {1} s timesteps")]
    NotWholeSteps(f64, f64),
    #[error("interval bound {0} is negative or not finite")]
    Negative(f64),
}

/// Upper end of an interval or a time horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bound {
    Finite(usize),
    Unbounded,
}

impl Bound {
    pub fn finite(self) -> Option<usize> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    /// Saturating addition; `Unbounded` absorbs.
    pub fn plus(self, other: Bound) -> Bound {
        match (self, other) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(a.saturating_add(b)),
            _ => Bound::Unbounded,
        }
    }

    pub fn max(self, other: Bound) -> Bound {
        match (self, other) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(a.max(b)),
            _ => Bound::Unbounded,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::Unbounded => f.write_str("inf"),
        }
    }
}

/// Discrete-time interval `[lo, hi]` measured in timesteps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: usize,
    hi: Bound,
}

impl Interval {
    pub fn new(lo: usize, hi: Bound) -> Result<Self, IntervalError> {
        if let Bound::Finite(h) = hi {
            if lo > h {
                return Err(IntervalError::Inverted { lo, hi: h });
            }
        }
        Ok(Interval { lo, hi })
    }

    /// `[lo, hi]`. Panics if `lo > hi`; use [`Interval::new`] for untrusted input.
    pub fn bounded(lo: usize, hi: usize) -> Self {
        Interval::new(lo, Bound::Finite(hi)).expect("inverted interval")
    }

    pub fn unbounded(lo: usize) -> Self {
        Interval { lo, hi: Bound::Unbounded }
    }

    /// Converts an interval given in seconds. Both ends must be exact multiples of `dt`.
    pub fn from_seconds(lo_s: f64, hi_s: Option<f64>, dt: f64) -> Result<Self, IntervalError> {
        let lo = seconds_to_steps(lo_s, dt)?;
        let hi = match hi_s {
            Some(h) => Bound::Finite(seconds_to_steps(h, dt)?),
            None => Bound::Unbounded,
        };
        Interval::new(lo, hi)
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> Bound {
        self.hi
    }
}

fn seconds_to_steps(seconds: f64, dt: f64) -> Result<usize, IntervalError> {
    if !seconds.is_finite() || seconds < 0.0 {
        return Err(IntervalError::Negative(seconds));
    }
    let steps = (seconds / dt).round();
    // Accept only values that land on the grid up to representation error.
    if (steps * dt - seconds).abs() > 1e-9 * seconds.abs().max(1.0) {
        return Err(IntervalError::NotWholeSteps(seconds, dt));
    }
    Ok(steps as usize)
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    True,
    /// Atomic predicate; holds when its margin is positive.
    Pred { name: String, args: Vec<f64> },
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Implies(NodeId, NodeId),
    Always(Interval, NodeId),
    Eventually(Interval, NodeId),
    Until(Interval, NodeId, NodeId),
    Historically(Interval, NodeId),
    Once(Interval, NodeId),
}

impl Node {
    pub fn children(&self) -> impl Iterator<Item = NodeId> {
        let (a, b) = match *self {
            Node::True | Node::Pred { .. } => (None, None),
            Node::Not(c)
            | Node::Always(_, c)
            | Node::Eventually(_, c)
            | Node::Historically(_, c)
            | Node::Once(_, c) => (Some(c), None),
            Node::And(l, r) | Node::Or(l, r) | Node::Implies(l, r) | Node::Until(_, l, r) => {
                (Some(l), Some(r))
            }
        };
        a.into_iter().chain(b)
    }

    fn map_children(&self, offset: usize) -> Node {
        let o = |c: NodeId| c + offset;
        match self {
            Node::True => Node::True,
            Node::Pred { name, args } => Node::Pred { name: name.clone(), args: args.clone() },
            Node::Not(c) => Node::Not(o(*c)),
            Node::And(l, r) => Node::And(o(*l), o(*r)),
            Node::Or(l, r) => Node::Or(o(*l), o(*r)),
            Node::Implies(l, r) => Node::Implies(o(*l), o(*r)),
            Node::Always(i, c) => Node::Always(*i, o(*c)),
            Node::Eventually(i, c) => Node::Eventually(*i, o(*c)),
            Node::Until(i, l, r) => Node::Until(*i, o(*l), o(*r)),
            Node::Historically(i, c) => Node::Historically(*i, o(*c)),
            Node::Once(i, c) => Node::Once(*i, o(*c)),
        }
    }
}

/// An STL formula. Structural equality is arena equality, since the
/// post-order layout is canonical for a given tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Formula {
    nodes: Vec<Node>,
}

impl Formula {
    fn leaf(node: Node) -> Self {
        Formula { nodes: vec![node] }
    }

    fn unary(self, make: impl FnOnce(NodeId) -> Node) -> Self {
        let mut nodes = self.nodes;
        let child = nodes.len() - 1;
        nodes.push(make(child));
        Formula { nodes }
    }

    fn binary(self, rhs: Formula, make: impl FnOnce(NodeId, NodeId) -> Node) -> Self {
        let mut nodes = self.nodes;
        let left = nodes.len() - 1;
        let offset = nodes.len();
        nodes.extend(rhs.nodes.iter().map(|n| n.map_children(offset)));
        let right = nodes.len() - 1;
        nodes.push(make(left, right));
        Formula { nodes }
    }

    pub fn truth() -> Self {
        Formula::leaf(Node::True)
    }

    pub fn pred(name: impl Into<String>) -> Self {
        Formula::leaf(Node::Pred { name: name.into(), args: Vec::new() })
    }

    pub fn pred_with(name: impl Into<String>, args: Vec<f64>) -> Self {
        Formula::leaf(Node::Pred { name: name.into(), args })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        self.unary(Node::Not)
    }

    pub fn and(self, rhs: Formula) -> Self {
        self.binary(rhs, Node::And)
    }

    pub fn or(self, rhs: Formula) -> Self {
        self.binary(rhs, Node::Or)
    }

    pub fn implies(self, rhs: Formula) -> Self {
        self.binary(rhs, Node::Implies)
    }

    pub fn until(self, interval: Interval, rhs: Formula) -> Self {
        self.binary(rhs, |l, r| Node::Until(interval, l, r))
    }

    pub fn always(interval: Interval, inner: Formula) -> Self {
        inner.unary(|c| Node::Always(interval, c))
    }

    pub fn eventually(interval: Interval, inner: Formula) -> Self {
        inner.unary(|c| Node::Eventually(interval, c))
    }

    pub fn historically(interval: Interval, inner: Formula) -> Self {
        inner.unary(|c| Node::Historically(interval, c))
    }

    pub fn once(interval: Interval, inner: Formula) -> Self {
        inner.unary(|c| Node::Once(interval, c))
    }

    /// Left-nested conjunction. Returns `None` for an empty iterator.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    pub fn root(&self) -> NodeId {
        self.nodes.len() - 1
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Post-order enumeration of every subformula, children before parents.
    pub fn subformulas(&self) -> Vec<(NodeId, Formula)> {
        (0..self.nodes.len()).map(|id| (id, self.subformula(id))).collect()
    }

    /// Extracts the subtree rooted at `id` as a standalone formula.
    pub fn subformula(&self, id: NodeId) -> Formula {
        // In post-order the subtree of `id` is a contiguous range ending at `id`.
        let start = self.subtree_start(id);
        let nodes = self.nodes[start..=id].iter().map(|n| shift_down(n.clone(), start)).collect();
        Formula { nodes }
    }

    fn subtree_start(&self, id: NodeId) -> NodeId {
        self.nodes[id].children().map(|c| self.subtree_start(c)).min().unwrap_or(id)
    }

    /// Names of all predicates referenced, in node order, without duplicates.
    pub fn predicate_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for node in &self.nodes {
            if let Node::Pred { name, .. } = node {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
        }
        out
    }

    /// Maximum number of future timesteps the formula needs to observe
    /// beyond its evaluation index.
    pub fn time_horizon(&self) -> Bound {
        self.horizons()[self.root()]
    }

    /// Per-node time horizons, indexed by node-id.
    pub fn horizons(&self) -> Vec<Bound> {
        let mut h: Vec<Bound> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match *node {
                Node::True | Node::Pred { .. } => Bound::Finite(0),
                Node::Not(c) | Node::Historically(_, c) | Node::Once(_, c) => h[c],
                Node::And(l, r) | Node::Or(l, r) | Node::Implies(l, r) => h[l].max(h[r]),
                Node::Always(i, c) | Node::Eventually(i, c) => i.hi().plus(h[c]),
                Node::Until(i, l, r) => i.hi().plus(h[l].max(h[r])),
            };
            h.push(v);
        }
        h
    }

    /// Depth of the tree; a single leaf has depth 1.
    pub fn depth(&self) -> usize {
        let mut d: Vec<usize> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = 1 + node.children().map(|c| d[c]).max().unwrap_or(0);
            d.push(v);
        }
        d[self.root()]
    }
}

fn shift_down(node: Node, by: usize) -> Node {
    let s = |c: NodeId| c - by;
    match node {
        Node::True => Node::True,
        Node::Pred { name, args } => Node::Pred { name, args },
        Node::Not(c) => Node::Not(s(c)),
        Node::And(l, r) => Node::And(s(l), s(r)),
        Node::Or(l, r) => Node::Or(s(l), s(r)),
        Node::Implies(l, r) => Node::Implies(s(l), s(r)),
        Node::Always(i, c) => Node::Always(i, s(c)),
        Node::Eventually(i, c) => Node::Eventually(i, s(c)),
        Node::Until(i, l, r) => Node::Until(i, s(l), s(r)),
        Node::Historically(i, c) => Node::Historically(i, s(c)),
        Node::Once(i, c) => Node::Once(i, s(c)),
    }
}

// Printing precedences; larger binds tighter.
const PREC_IMPLIES: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNTIL: u8 = 4;
const PREC_UNARY: u8 = 5;

impl Formula {
    fn precedence(&self, id: NodeId) -> u8 {
        match self.nodes[id] {
            Node::Implies(..) => PREC_IMPLIES,
            Node::Or(..) => PREC_OR,
            Node::And(..) => PREC_AND,
            Node::Until(..) => PREC_UNTIL,
            _ => PREC_UNARY,
        }
    }

    fn write_node(&self, id: NodeId, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let paren = self.precedence(id) < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match &self.nodes[id] {
            Node::True => f.write_str("true")?,
            Node::Pred { name, args } => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (k, a) in args.iter().enumerate() {
                        if k > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
            }
            Node::Not(c) => {
                f.write_str("not ")?;
                self.write_node(*c, PREC_UNARY, f)?;
            }
            Node::And(l, r) => self.write_binary(*l, "and", *r, PREC_AND, false, f)?,
            Node::Or(l, r) => self.write_binary(*l, "or", *r, PREC_OR, false, f)?,
            Node::Implies(l, r) => self.write_binary(*l, "->", *r, PREC_IMPLIES, true, f)?,
            Node::Until(i, l, r) => {
                self.write_binary(*l, &format!("U{i}"), *r, PREC_UNTIL, false, f)?
            }
            Node::Always(i, c) => self.write_unary("G", i, *c, f)?,
            Node::Eventually(i, c) => self.write_unary("F", i, *c, f)?,
            Node::Historically(i, c) => self.write_unary("H", i, *c, f)?,
            Node::Once(i, c) => self.write_unary("O", i, *c, f)?,
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }

    fn write_unary(
        &self,
        op: &str,
        interval: &Interval,
        child: NodeId,
        f: &mut fmt::Formatter<'_>,
    ) -> fmt::Result {
        write!(f, "{op}{interval} ")?;
        self.write_node(child, PREC_UNARY, f)
    }

    fn write_binary(
        &self,
        l: NodeId,
        op: &str,
        r: NodeId,
        prec: u8,
        right_assoc: bool,
        f: &mut fmt::Formatter<'_>,
    ) -> fmt::Result {
        let (lp, rp) = if right_assoc { (prec + 1, prec) } else { (prec, prec + 1) };
        self.write_node(l, lp, f)?;
        write!(f, " {op} ")?;
        self.write_node(r, rp, f)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_node(self.root(), 0, f)
    }
}
