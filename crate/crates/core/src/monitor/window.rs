//! Streaming sliding-window extrema (Lemire's monotonic wedge).
//!
//! Every value enters and leaves the wedge at most once, so a pass over `n`
//! values costs O(n) regardless of the window width.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

impl Extremum {
    /// Value of the extremum over an empty set: `+inf` for min, `-inf` for max.
    pub fn identity(self) -> f64 {
        match self {
            Extremum::Min => f64::INFINITY,
            Extremum::Max => f64::NEG_INFINITY,
        }
    }

    pub fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Extremum::Min => a.min(b),
            Extremum::Max => a.max(b),
        }
    }

    /// True when `incoming` makes `held` useless for every later window.
    fn dominates(self, incoming: f64, held: f64) -> bool {
        match self {
            Extremum::Min => incoming <= held,
            Extremum::Max => incoming >= held,
        }
    }
}

/// Monotonic deque of `(index, value)` pairs whose front is the extremum of
/// everything pushed and not yet expired.
#[derive(Clone, Debug)]
pub struct MonoWedge {
    kind: Extremum,
    deque: VecDeque<(usize, f64)>,
}

impl MonoWedge {
    pub fn new(kind: Extremum) -> Self {
        MonoWedge { kind, deque: VecDeque::new() }
    }

    pub fn push(&mut self, index: usize, value: f64) {
        while let Some(&(_, held)) = self.deque.back() {
            if self.kind.dominates(value, held) {
                self.deque.pop_back();
            } else {
                break;
            }
        }
        self.deque.push_back((index, value));
    }

    /// Drops entries from the front for which `expired(index)` holds.
    pub fn expire(&mut self, mut expired: impl FnMut(usize) -> bool) {
        while let Some(&(idx, _)) = self.deque.front() {
            if expired(idx) {
                self.deque.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn front(&self) -> Option<f64> {
        self.deque.front().map(|&(_, v)| v)
    }

    pub fn clear(&mut self) {
        self.deque.clear();
    }
}

/// Forward-looking windows: `out[i]` is the extremum of
/// `values[i ..= i + width - 1]`, clipped to the slice. `width` must be at
/// least 1; pass `usize::MAX` for an unbounded window (suffix extremum).
pub fn leading_window(values: &[f64], width: usize, kind: Extremum) -> Vec<f64> {
    assert!(width >= 1, "window width must be positive");
    let n = values.len();
    let mut out = vec![kind.identity(); n];
    let mut wedge = MonoWedge::new(kind);
    for i in (0..n).rev() {
        wedge.push(i, values[i]);
        let last = i.saturating_add(width - 1);
        wedge.expire(|idx| idx > last);
        out[i] = wedge.front().unwrap_or(kind.identity());
    }
    out
}

/// Backward-looking windows: `out[j]` is the extremum of
/// `values[j + 1 - width ..= j]`, clipped at the start of the slice.
pub fn trailing_window(values: &[f64], width: usize, kind: Extremum) -> Vec<f64> {
    assert!(width >= 1, "window width must be positive");
    let mut out = Vec::with_capacity(values.len());
    let mut wedge = MonoWedge::new(kind);
    for (j, &v) in values.iter().enumerate() {
        wedge.push(j, v);
        if let Some(first) = (j + 1).checked_sub(width) {
            wedge.expire(|idx| idx < first);
        }
        out.push(wedge.front().unwrap_or(kind.identity()));
    }
    out
}

/// `out[i] = min(values[i ..= i + width - 1])`, clipped to the slice.
pub fn sliding_min(values: &[f64], width: usize) -> Vec<f64> {
    leading_window(values, width, Extremum::Min)
}

/// `out[i] = max(values[i ..= i + width - 1])`, clipped to the slice.
pub fn sliding_max(values: &[f64], width: usize) -> Vec<f64> {
    leading_window(values, width, Extremum::Max)
}
