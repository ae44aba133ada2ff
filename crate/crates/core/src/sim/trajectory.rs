use std::io::{Read, Write};

use thiserror::Error;

use crate::monitor::StateSeq;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace has no rows")]
    Empty,
    #[error("row {row}: expected {expected} columns, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Number { row: usize, column: String, value: String },
    #[error("trace header has no state columns (expected x0, x1, ...)")]
    NoStateColumns,
}

/// States `x_0..x_t` and actions `a_0..a_t` of one run.
///
/// The action stored with the last state is all zeros until a further step
/// is taken.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    states: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    action_dim: usize,
    /// `(splice timestep, stream id)` for the initial run and every resume.
    pub seed_lineage: Vec<(usize, u64)>,
}

impl Trajectory {
    pub fn new(dt: f64, x0: Vec<f64>, action_dim: usize, stream_id: u64) -> Self {
        Trajectory {
            dt,
            states: vec![x0],
            actions: vec![vec![0.0; action_dim]],
            action_dim,
            seed_lineage: vec![(0, stream_id)],
        }
    }

    /// Records `a_t` for the current last state and appends `x_{t+1}`.
    pub fn push(&mut self, action: Vec<f64>, next: Vec<f64>) {
        debug_assert_eq!(next.len(), self.states[0].len());
        *self.actions.last_mut().expect("non-empty") = action;
        self.states.push(next);
        self.actions.push(vec![0.0; self.action_dim]);
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the last state.
    pub fn last_step(&self) -> usize {
        self.states.len() - 1
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// `τ[0:t]`: the first `t + 1` steps. The action at `t` is reset to zero
    /// because it belongs to the discarded continuation.
    pub fn prefix(&self, t: usize) -> Trajectory {
        let mut actions = self.actions[..=t].to_vec();
        actions[t] = vec![0.0; self.action_dim];
        Trajectory {
            dt: self.dt,
            states: self.states[..=t].to_vec(),
            actions,
            action_dim: self.action_dim,
            seed_lineage: self.seed_lineage.iter().copied().filter(|&(s, _)| s <= t).collect(),
        }
    }

    /// Writes `t,x0..,a0..` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TrajectoryError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.state_dim()).map(|k| format!("x{k}")));
        header.extend((0..self.action_dim).map(|k| format!("a{k}")));
        w.write_record(&header)?;
        for (t, (x, a)) in self.states.iter().zip(&self.actions).enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            row.extend(a.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl StateSeq for Trajectory {
    fn len(&self) -> usize {
        self.states.len()
    }
    fn state(&self, t: usize) -> &[f64] {
        &self.states[t]
    }
}

/// Reads the `x*` columns of a trace CSV in file order. A `t` column and
/// `a*` columns are ignored; any other column counts as state.
pub fn read_states_csv<R: Read>(input: R) -> Result<Vec<Vec<f64>>, TrajectoryError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    let cols: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            *h != "t" && !(h.starts_with('a') && h[1..].chars().all(|c| c.is_ascii_digit()) && h.len() > 1)
        })
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    if cols.is_empty() {
        return Err(TrajectoryError::NoStateColumns);
    }
    let mut states = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(TrajectoryError::Ragged { row: row + 1, expected: header.len(), found: rec.len() });
        }
        let mut x = Vec::with_capacity(cols.len());
        for (i, name) in &cols {
            let v = &rec[*i];
            x.push(v.parse::<f64>().map_err(|_| TrajectoryError::Number {
                row: row + 1,
                column: name.clone(),
                value: v.to_string(),
            })?);
        }
        states.push(x);
    }
    if states.is_empty() {
        return Err(TrajectoryError::Empty);
    }
    Ok(states)
}
