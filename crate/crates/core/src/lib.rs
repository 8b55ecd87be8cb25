//! Hidden Markov models computed entirely in log space, with exact
//! weighted maximum-likelihood M-steps for fifteen emission families.
//!
//! ```
//! use loghmm::{baum_welch, datasets, Emission, HmmModel, TrainingConfig};
//!
//! let counts = datasets::earthquakes();
//! let start = HmmModel::new(
//!     vec![0.5, 0.5],
//!     vec![vec![0.9, 0.1], vec![0.1, 0.9]],
//!     vec![Emission::Poisson { rate: 10.0 }, Emission::Poisson { rate: 30.0 }],
//! )
//! .unwrap();
//! let (fitted, report) = baum_welch(&start, &[counts], &TrainingConfig::default()).unwrap();
//! assert!(report.converged);
//! assert_eq!(fitted.num_states(), 2);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datasets;
pub mod distributions;
mod error;
pub mod inference;
pub mod io;
pub mod math;
mod matrix;
mod model;
pub mod training;

pub use distributions::{Emission, Family, FitNote, Fitted, WeightedSample};
pub use error::{Error, Result};
pub use inference::{
    backward_log, forward_log, posterior_decode, posteriors, viterbi, Forward, ForwardBackwardResult, ViterbiResult,
};
pub use matrix::Matrix;
pub use model::{HmmModel, STOCHASTIC_TOL};
pub use training::{baum_welch, initial_model, score_model, ModelScore, TrainingConfig, TrainingReport};
