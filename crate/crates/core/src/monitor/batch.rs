use crate::stl::{Bound, Interval, Node};

use super::{BoundFormula, MonitorError, StateSeq};

/// Robustness of the bound formula at index `i` over the prefix `states[0..=t]`.
///
/// Direct evaluation of the prefix semantics: temporal windows are
/// intersected with `[0, t]`, an empty infimum is `+inf` and an empty
/// supremum is `-inf`. Values are memoised per call, nothing is reused
/// across calls.
pub fn batch_robustness<S: StateSeq + ?Sized>(
    f: &BoundFormula,
    states: &S,
    i: usize,
    t: usize,
) -> Result<f64, MonitorError> {
    if i > t || t >= states.len() {
        return Err(MonitorError::IndexOutOfRange { i, t, len: states.len() });
    }
    let mut eval = Batch { f, states, t, memo: vec![vec![None; t + 1]; f.formula().len()] };
    Ok(eval.at(f.formula().root(), i))
}

struct Batch<'a, S: ?Sized> {
    f: &'a BoundFormula,
    states: &'a S,
    t: usize,
    memo: Vec<Vec<Option<f64>>>,
}

impl<S: StateSeq + ?Sized> Batch<'_, S> {
    fn at(&mut self, id: usize, i: usize) -> f64 {
        if let Some(v) = self.memo[id][i] {
            return v;
        }
        let v = match *self.f.formula().node(id) {
            Node::True => f64::INFINITY,
            Node::Pred { .. } => self.f.margin(id, self.states.state(i)),
            Node::Not(c) => -self.at(c, i),
            Node::And(l, r) => self.at(l, i).min(self.at(r, i)),
            Node::Or(l, r) => self.at(l, i).max(self.at(r, i)),
            Node::Implies(l, r) => (-self.at(l, i)).max(self.at(r, i)),
            Node::Always(iv, c) => {
                let mut acc = f64::INFINITY;
                for k in self.future(i, iv) {
                    acc = acc.min(self.at(c, k));
                }
                acc
            }
            Node::Eventually(iv, c) => {
                let mut acc = f64::NEG_INFINITY;
                for k in self.future(i, iv) {
                    acc = acc.max(self.at(c, k));
                }
                acc
            }
            Node::Historically(iv, c) => {
                let mut acc = f64::INFINITY;
                for k in past(i, iv) {
                    acc = acc.min(self.at(c, k));
                }
                acc
            }
            Node::Once(iv, c) => {
                let mut acc = f64::NEG_INFINITY;
                for k in past(i, iv) {
                    acc = acc.max(self.at(c, k));
                }
                acc
            }
            Node::Until(iv, l, r) => {
                // sup over i2 of min(rhs(i2), inf over [i, i2] of lhs)
                let mut best = f64::NEG_INFINITY;
                let window = self.future(i, iv);
                if !window.is_empty() {
                    let mut lhs_inf = f64::INFINITY;
                    for i1 in i..*window.start() {
                        lhs_inf = lhs_inf.min(self.at(l, i1));
                    }
                    for i2 in window {
                        lhs_inf = lhs_inf.min(self.at(l, i2));
                        best = best.max(self.at(r, i2).min(lhs_inf));
                    }
                }
                best
            }
        };
        self.memo[id][i] = Some(v);
        v
    }

    /// `(i + I) ∩ [0, t]`.
    fn future(&self, i: usize, iv: Interval) -> std::ops::RangeInclusive<usize> {
        let lo = i.saturating_add(iv.lo());
        let hi = match iv.hi() {
            Bound::Finite(h) => i.saturating_add(h).min(self.t),
            Bound::Unbounded => self.t,
        };
        if lo > hi {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        lo..=hi
    }
}

/// `(i - I) ∩ [0, t]`, i.e. `[max(0, i - hi), i - lo]`.
fn past(i: usize, iv: Interval) -> std::ops::RangeInclusive<usize> {
    let Some(hi) = i.checked_sub(iv.lo()) else {
        #[allow(clippy::reversed_empty_ranges)]
        return 1..=0;
    };
    let lo = match iv.hi() {
        Bound::Finite(h) => i.saturating_sub(h),
        Bound::Unbounded => 0,
    };
    lo..=hi
}
