//! The hidden Markov model `λ = (π, A, B)`.

use crate::distributions::Emission;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Tolerance on the sum of a probability vector.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A `K`-state HMM with a row-stochastic transition matrix and one emission
/// distribution per state. States may use different families.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    initial: Vec<f64>,
    transitions: Matrix,
    emissions: Vec<Emission>,
}

fn check_probability_vector(field: &str, p: &[f64]) -> Result<()> {
    if let Some(bad) = p.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
        return Err(Error::validation(
            field,
            format!("entries must lie in [0, 1], got {bad}"),
        ));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::validation(field, format!("must sum to 1, sums to {sum}")));
    }
    Ok(())
}

impl HmmModel {
    pub fn new(initial: Vec<f64>, transitions: Vec<Vec<f64>>, emissions: Vec<Emission>) -> Result<Self> {
        let k = initial.len();
        if k == 0 {
            return Err(Error::validation("num_states", "model needs at least one state"));
        }
        if transitions.len() != k {
            return Err(Error::validation(
                "transitions",
                format!("expected {k} rows, got {}", transitions.len()),
            ));
        }
        for (i, row) in transitions.iter().enumerate() {
            if row.len() != k {
                return Err(Error::validation(
                    format!("transitions[{i}]"),
                    format!("expected {k} entries, got {}", row.len()),
                ));
            }
        }
        Self::from_parts(initial, Matrix::from_rows(&transitions), emissions)
    }

    pub(crate) fn from_parts(initial: Vec<f64>, transitions: Matrix, emissions: Vec<Emission>) -> Result<Self> {
        let k = initial.len();
        check_probability_vector("initial", &initial)?;
        for i in 0..k {
            check_probability_vector(&format!("transitions[{i}]"), transitions.row(i))?;
        }
        if emissions.len() != k {
            return Err(Error::validation(
                "emissions",
                format!("expected {k} distributions, got {}", emissions.len()),
            ));
        }
        for (j, e) in emissions.iter().enumerate() {
            e.validate().map_err(|err| match err {
                Error::Validation { field, message } => Error::validation(format!("emissions[{j}].{field}"), message),
                other => other,
            })?;
        }
        Ok(HmmModel {
            initial,
            transitions,
            emissions,
        })
    }

    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transitions(&self) -> &Matrix {
        &self.transitions
    }

    pub fn emissions(&self) -> &[Emission] {
        &self.emissions
    }

    /// Free parameters: `K − 1` initial, `K(K − 1)` transition, plus each
    /// state's emission parameters.
    pub fn num_params(&self) -> usize {
        let k = self.num_states();
        (k - 1) + k * (k - 1) + self.emissions.iter().map(Emission::num_params).sum::<usize>()
    }

    /// Same model with states relabelled so that new state `i` is old state
    /// `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let k = self.num_states();
        let mut seen = vec![false; k];
        if order.len() != k || order.iter().any(|&i| i >= k || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Usage("permutation must list every state once".into()));
        }
        let initial = order.iter().map(|&i| self.initial[i]).collect();
        let rows: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| order.iter().map(|&j| self.transitions[(i, j)]).collect())
            .collect();
        let emissions = order.iter().map(|&i| self.emissions[i].clone()).collect();
        Self::new(initial, rows, emissions)
    }
}
