use std::sync::Arc;

use crate::stl::{Bound, Node};

use super::window::{leading_window, trailing_window, Extremum};
use super::{BoundFormula, MonitorError, StateSeq};

const UNCHANGED: usize = usize::MAX;

/// Incremental robustness monitor for one trajectory.
///
/// After states `x_0..x_t` have been ingested, `buffer(id)[i]` holds the
/// prefix robustness of subformula `id` at index `i` over `τ[0:t]`. Each
/// update only recomputes the entries whose inputs changed: for a node with
/// finite horizon `h` that is the trailing `h + 1` entries, so the cost per
/// step does not grow with `t`.
///
/// With [`WorkList::pruned`], entries that the root's value at index 0 can
/// never depend on are not computed at all, e.g. under `G[0,2] p` the
/// predicate stops ingesting after `x_2`.
#[derive(Clone, Debug)]
pub struct WorkList {
    spec: Arc<BoundFormula>,
    buffers: Vec<Vec<f64>>,
    ingested: usize,
    last_step: Option<usize>,
    prune: bool,
    changed: Vec<usize>,
}

impl WorkList {
    pub fn new(spec: Arc<BoundFormula>) -> Self {
        let n = spec.formula().len();
        WorkList {
            spec,
            buffers: vec![Vec::new(); n],
            ingested: 0,
            last_step: None,
            prune: false,
            changed: vec![UNCHANGED; n],
        }
    }

    /// Rejects ingestion beyond timestep `last`.
    pub fn with_final_step(mut self, last: usize) -> Self {
        self.last_step = Some(last);
        self
    }

    /// Only keeps entries inside each node's relevance window.
    pub fn pruned(mut self) -> Self {
        assert_eq!(self.ingested, 0, "pruning must be chosen before ingesting");
        self.prune = true;
        self
    }

    /// Builds a work-list by ingesting `states` in order.
    pub fn replay<S: StateSeq + ?Sized>(
        spec: Arc<BoundFormula>,
        states: &S,
        prune: bool,
    ) -> Result<Self, MonitorError> {
        let mut wl = WorkList::new(spec);
        wl.prune = prune;
        for t in 0..states.len() {
            wl.update(states.state(t))?;
        }
        Ok(wl)
    }

    pub fn spec(&self) -> &Arc<BoundFormula> {
        &self.spec
    }

    /// Last ingested timestep, `None` before the first state.
    pub fn watermark(&self) -> Option<usize> {
        self.ingested.checked_sub(1)
    }

    pub fn buffer(&self, id: usize) -> &[f64] {
        &self.buffers[id]
    }

    /// Prefix robustness of the whole formula at index 0.
    pub fn robustness(&self) -> Result<f64, MonitorError> {
        if self.ingested == 0 {
            return Err(MonitorError::NoData);
        }
        Ok(self.buffers[self.spec.formula().root()][0])
    }

    /// Ingests the state for timestep `watermark + 1`.
    pub fn update(&mut self, x: &[f64]) -> Result<(), MonitorError> {
        let t = self.ingested;
        if let Some(last) = self.last_step {
            if t > last {
                return Err(MonitorError::PastFinalStep { t, last });
            }
        }
        let n = t + 1;
        let spec = Arc::clone(&self.spec);
        let formula = spec.formula();
        for id in 0..formula.len() {
            let cap = match (self.prune, spec.relevance(id)) {
                (true, Bound::Finite(r)) => n.min(r + 1),
                _ => n,
            };
            let (done, rest) = self.buffers.split_at_mut(id);
            let out = &mut rest[0];
            let old_len = out.len();
            let changed = &self.changed;
            let from = match *formula.node(id) {
                Node::True | Node::Pred { .. } => old_len,
                Node::Not(c) => changed[c],
                Node::And(l, r) | Node::Or(l, r) | Node::Implies(l, r) => changed[l].min(changed[r]),
                Node::Always(iv, c) | Node::Eventually(iv, c) => back_off(changed[c], iv.hi()),
                Node::Until(iv, l, r) => back_off(changed[l].min(changed[r]), iv.hi()),
                Node::Historically(iv, c) | Node::Once(iv, c) => changed[c].saturating_add(iv.lo()),
            }
            .min(old_len);
            if from >= cap {
                self.changed[id] = UNCHANGED;
                continue;
            }
            out.resize(cap, 0.0);
            match *formula.node(id) {
                Node::True => out[from..cap].fill(f64::INFINITY),
                Node::Pred { .. } => {
                    debug_assert_eq!(from + 1, cap);
                    let v = spec.margin(id, x);
                    if !v.is_finite() {
                        out.truncate(old_len);
                        return Err(MonitorError::NonFinite { name: spec.predicate_name(id).to_string(), t });
                    }
                    out[from] = v;
                }
                Node::Not(c) => {
                    for i in from..cap {
                        out[i] = -done[c][i];
                    }
                }
                Node::And(l, r) => {
                    for i in from..cap {
                        out[i] = done[l][i].min(done[r][i]);
                    }
                }
                Node::Or(l, r) => {
                    for i in from..cap {
                        out[i] = done[l][i].max(done[r][i]);
                    }
                }
                Node::Implies(l, r) => {
                    for i in from..cap {
                        out[i] = (-done[l][i]).max(done[r][i]);
                    }
                }
                Node::Always(iv, c) => future_window(&done[c], out, from, iv.lo(), iv.hi(), Extremum::Min),
                Node::Eventually(iv, c) => {
                    future_window(&done[c], out, from, iv.lo(), iv.hi(), Extremum::Max)
                }
                Node::Historically(iv, c) => past_window(&done[c], out, from, iv.lo(), iv.hi(), Extremum::Min),
                Node::Once(iv, c) => past_window(&done[c], out, from, iv.lo(), iv.hi(), Extremum::Max),
                Node::Until(iv, l, r) => until(&done[l], &done[r], out, from, iv.lo(), iv.hi()),
            }
            self.changed[id] = from;
        }
        self.ingested = n;
        Ok(())
    }
}

/// Earliest parent index whose forward window `[i+lo, i+hi]` reaches `changed`.
fn back_off(changed: usize, hi: Bound) -> usize {
    if changed == UNCHANGED {
        return UNCHANGED;
    }
    match hi {
        Bound::Finite(h) => changed.saturating_sub(h),
        Bound::Unbounded => 0,
    }
}

fn width(lo: usize, hi: Bound) -> usize {
    match hi {
        Bound::Finite(h) => h - lo + 1,
        Bound::Unbounded => usize::MAX,
    }
}

/// `out[i] = ext(child[i+lo ..= i+hi])` for `i` in `from..out.len()`.
fn future_window(child: &[f64], out: &mut [f64], from: usize, lo: usize, hi: Bound, ext: Extremum) {
    let start = from + lo;
    if start >= child.len() {
        out[from..].fill(ext.identity());
        return;
    }
    let w = leading_window(&child[start..], width(lo, hi), ext);
    for (i, slot) in out.iter_mut().enumerate().skip(from) {
        *slot = w.get(i + lo - start).copied().unwrap_or(ext.identity());
    }
}

/// `out[i] = ext(child[max(0, i-hi) ..= i-lo])` for `i` in `from..out.len()`.
fn past_window(child: &[f64], out: &mut [f64], from: usize, lo: usize, hi: Bound, ext: Extremum) {
    let cap = out.len();
    let start = match hi {
        Bound::Finite(h) => from.saturating_sub(h),
        Bound::Unbounded => 0,
    };
    let w = if cap > lo && start <= cap - 1 - lo {
        trailing_window(&child[start..cap - lo], width(lo, hi), ext)
    } else {
        Vec::new()
    };
    for (i, slot) in out.iter_mut().enumerate().skip(from) {
        *slot = if i >= lo { w[i - lo - start] } else { ext.identity() };
    }
}

/// `out[i] = sup_{i2 ∈ [i+lo, i+hi]} min(rhs[i2], inf_{i1 ∈ [i, i2]} lhs[i1])`.
fn until(lhs: &[f64], rhs: &[f64], out: &mut [f64], from: usize, lo: usize, hi: Bound) {
    let cap = out.len();
    match hi {
        Bound::Finite(h) => {
            for (i, slot) in out.iter_mut().enumerate().skip(from) {
                let mut lhs_inf = f64::INFINITY;
                let mut best = f64::NEG_INFINITY;
                let end = (i + h).min(lhs.len().saturating_sub(1));
                for k in i..=end {
                    lhs_inf = lhs_inf.min(lhs[k]);
                    if k >= i + lo && k < rhs.len() {
                        best = best.max(rhs[k].min(lhs_inf));
                    }
                }
                *slot = best;
            }
        }
        Bound::Unbounded => {
            // Untimed until by backward induction from the watermark:
            // us[j] = max(min(lhs[j], rhs[j]), min(lhs[j], us[j+1])), us[len] = -inf.
            let len = lhs.len().min(rhs.len());
            let first = from + lo;
            let mut us = vec![f64::NEG_INFINITY; len.saturating_sub(first) + 1];
            for j in (first..len).rev() {
                let next = us[j + 1 - first];
                us[j - first] = lhs[j].min(rhs[j]).max(lhs[j].min(next));
            }
            let guard = if lo > 0 && from < lhs.len() {
                leading_window(&lhs[from..], lo, Extremum::Min)
            } else {
                Vec::new()
            };
            for i in from..cap {
                let tail = us.get(i + lo - first).copied().unwrap_or(f64::NEG_INFINITY);
                let head = guard.get(i - from).copied().unwrap_or(f64::INFINITY);
                out[i] = head.min(tail);
            }
        }
    }
}
