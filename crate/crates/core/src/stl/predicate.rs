use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Margin function `(state, args) -> real`. Positive means the predicate holds.
pub type MarginFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A named predicate over the full combined state vector.
#[derive(Clone)]
pub struct PredicateBinding {
    pub name: String,
    pub arity: usize,
    pub margin: MarginFn,
}

impl PredicateBinding {
    pub fn eval(&self, state: &[f64], args: &[f64]) -> f64 {
        (self.margin)(state, args)
    }
}

impl fmt::Debug for PredicateBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredicateBinding")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish_non_exhaustive()
    }
}

/// Name → binding lookup, ordered so listings are deterministic.
#[derive(Clone, Debug, Default)]
pub struct PredicateTable {
    bindings: BTreeMap<String, PredicateBinding>,
}

impl PredicateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a predicate with no arguments.
    pub fn insert<F>(&mut self, name: impl Into<String>, margin: F) -> &mut Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.insert_with_args(name, 0, move |x, _| margin(x))
    }

    pub fn insert_with_args<F>(&mut self, name: impl Into<String>, arity: usize, margin: F) -> &mut Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        self.bindings
            .insert(name.clone(), PredicateBinding { name, arity, margin: Arc::new(margin) });
        self
    }

    pub fn get(&self, name: &str) -> Option<&PredicateBinding> {
        self.bindings.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Merges `other` into `self`; entries in `other` win on name clashes.
    pub fn extend(&mut self, other: PredicateTable) {
        self.bindings.extend(other.bindings);
    }
}
