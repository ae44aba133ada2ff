//! STL robustness over complete and partial trajectories.
//!
//! [`batch_robustness`] evaluates the prefix (nominal) semantics from
//! scratch and serves as the reference. [`WorkList`] maintains the same
//! values incrementally as states arrive one at a time.

mod batch;
pub mod random;
pub mod window;
mod worklist;

use std::sync::Arc;

use thiserror::Error;

use crate::stl::{Bound, Formula, Node, PredicateBinding, PredicateTable};

pub use batch::batch_robustness;
pub use window::{sliding_max, sliding_min, Extremum, MonoWedge};
pub use worklist::WorkList;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonitorError {
    #[error("no data ingested")]
    NoData,
    #[error("predicate `{0}` has no binding")]
    UnboundPredicate(String),
    #[error("predicate `{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("index out of range: i={i}, t={t}, trajectory length {len}")]
    IndexOutOfRange { i: usize, t: usize, len: usize },
    #[error("cannot ingest timestep {t}: final timestep is {last}")]
    PastFinalStep { t: usize, last: usize },
    #[error("predicate `{name}` produced a non-finite margin at timestep {t}")]
    NonFinite { name: String, t: usize },
}

/// Read access to a sequence of combined states.
pub trait StateSeq {
    fn len(&self) -> usize;
    fn state(&self, t: usize) -> &[f64];
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl StateSeq for [Vec<f64>] {
    fn len(&self) -> usize {
        <[Vec<f64>]>::len(self)
    }
    fn state(&self, t: usize) -> &[f64] {
        &self[t]
    }
}

impl StateSeq for Vec<Vec<f64>> {
    fn len(&self) -> usize {
        Vec::len(self)
    }
    fn state(&self, t: usize) -> &[f64] {
        &self[t]
    }
}

/// A formula whose predicates have been resolved against a table.
#[derive(Debug)]
pub struct BoundFormula {
    formula: Formula,
    predicates: Vec<Option<(PredicateBinding, Vec<f64>)>>,
    relevance: Vec<Bound>,
}

impl BoundFormula {
    pub fn new(formula: Formula, table: &PredicateTable) -> Result<Arc<Self>, MonitorError> {
        let mut predicates = Vec::with_capacity(formula.len());
        for node in formula.nodes() {
            predicates.push(match node {
                Node::Pred { name, args } => {
                    let binding = table
                        .get(name)
                        .ok_or_else(|| MonitorError::UnboundPredicate(name.clone()))?;
                    if binding.arity != args.len() {
                        return Err(MonitorError::Arity {
                            name: name.clone(),
                            expected: binding.arity,
                            got: args.len(),
                        });
                    }
                    Some((binding.clone(), args.clone()))
                }
                _ => None,
            });
        }
        let relevance = relevance(&formula);
        Ok(Arc::new(BoundFormula { formula, predicates, relevance }))
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// Margin of predicate node `id` on `state`.
    pub(crate) fn margin(&self, id: usize, state: &[f64]) -> f64 {
        let (binding, args) = self.predicates[id].as_ref().expect("predicate node");
        binding.eval(state, args)
    }

    pub(crate) fn predicate_name(&self, id: usize) -> &str {
        self.predicates[id].as_ref().map(|(b, _)| b.name.as_str()).unwrap_or("?")
    }

    /// Largest index of node `id` that the root's value at index 0 can depend on.
    pub fn relevance(&self, id: usize) -> Bound {
        self.relevance[id]
    }
}

fn relevance(formula: &Formula) -> Vec<Bound> {
    let mut rel = vec![Bound::Finite(0); formula.len()];
    // Parents come after children, so walk from the root down.
    for id in (0..formula.len()).rev() {
        let here = rel[id];
        let lift = |r: &mut Bound, v: Bound| *r = r.max(v);
        match *formula.node(id) {
            Node::True | Node::Pred { .. } => {}
            Node::Not(c) | Node::Historically(_, c) | Node::Once(_, c) => lift(&mut rel[c], here),
            Node::And(l, r) | Node::Or(l, r) | Node::Implies(l, r) => {
                lift(&mut rel[l], here);
                lift(&mut rel[r], here);
            }
            Node::Always(i, c) | Node::Eventually(i, c) => lift(&mut rel[c], here.plus(i.hi())),
            Node::Until(i, l, r) => {
                lift(&mut rel[l], here.plus(i.hi()));
                lift(&mut rel[r], here.plus(i.hi()));
            }
        }
    }
    rel
}
