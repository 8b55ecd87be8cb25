//! Log-space forward-backward, smoothed posteriors, Viterbi and posterior
//! decoding.
//!
//! All recursions run on `log α`, `log β` and `log δ`, so nothing underflows
//! however long the sequence. `log A` is built once per call and shared by
//! every time step.

use crate::error::{Error, Result};
use crate::math::lse;
use crate::matrix::Matrix;
use crate::model::HmmModel;

/// `log π` and `log A`, computed once and reused across time steps.
#[derive(Debug, Clone)]
pub(crate) struct LogParams {
    pub log_initial: Vec<f64>,
    pub log_transitions: Matrix,
}

impl LogParams {
    pub fn new(model: &HmmModel) -> Self {
        LogParams {
            log_initial: model.initial().iter().map(|p| p.ln()).collect(),
            log_transitions: model.transitions().map(f64::ln),
        }
    }

    fn num_states(&self) -> usize {
        self.log_initial.len()
    }
}

pub(crate) fn check_sequence(seq: &[f64]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::Usage("observation sequence is empty".into()));
    }
    if let Some(t) = seq.iter().position(|y| y.is_nan()) {
        return Err(Error::domain(format!("observation {t} is NaN")));
    }
    Ok(())
}

/// `T × K` matrix of `log b_j(y_t)`.
pub fn emission_log_probs(model: &HmmModel, seq: &[f64]) -> Matrix {
    let k = model.num_states();
    let mut out = Matrix::filled(seq.len(), k, 0.0);
    for (t, &y) in seq.iter().enumerate() {
        for (j, e) in model.emissions().iter().enumerate() {
            out[(t, j)] = e.ln_density(y);
        }
    }
    out
}

pub(crate) fn forward_pass(lp: &LogParams, log_b: &Matrix) -> (Matrix, f64) {
    let k = lp.num_states();
    let t_len = log_b.rows();
    let mut alpha = Matrix::filled(t_len, k, f64::NEG_INFINITY);
    for j in 0..k {
        alpha[(0, j)] = lp.log_initial[j] + log_b[(0, j)];
    }
    let mut terms = vec![0.0; k];
    for t in 1..t_len {
        for j in 0..k {
            for (i, term) in terms.iter_mut().enumerate() {
                *term = alpha[(t - 1, i)] + lp.log_transitions[(i, j)];
            }
            alpha[(t, j)] = lse(&terms) + log_b[(t, j)];
        }
    }
    let log_likelihood = lse(alpha.row(t_len - 1));
    (alpha, log_likelihood)
}

pub(crate) fn backward_pass(lp: &LogParams, log_b: &Matrix) -> Matrix {
    let k = lp.num_states();
    let t_len = log_b.rows();
    let mut beta = Matrix::filled(t_len, k, 0.0);
    let mut terms = vec![0.0; k];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for i in 0..k {
            for (j, term) in terms.iter_mut().enumerate() {
                *term = lp.log_transitions[(i, j)] + log_b[(t + 1, j)] + beta[(t + 1, j)];
            }
            beta[(t, i)] = lse(&terms);
        }
    }
    beta
}

/// Log forward variables and the sequence log-likelihood.
#[derive(Debug, Clone)]
pub struct Forward {
    pub log_alpha: Matrix,
    pub log_likelihood: f64,
}

/// `log α_t(j)` by the log-sum-exp recursion. An impossible sequence yields
/// a log-likelihood of `-inf`, never NaN.
pub fn forward_log(model: &HmmModel, seq: &[f64]) -> Result<Forward> {
    check_sequence(seq)?;
    let (log_alpha, log_likelihood) = forward_pass(&LogParams::new(model), &emission_log_probs(model, seq));
    Ok(Forward {
        log_alpha,
        log_likelihood,
    })
}

/// `log β_t(j)`, with the last row identically zero.
pub fn backward_log(model: &HmmModel, seq: &[f64]) -> Result<Matrix> {
    check_sequence(seq)?;
    Ok(backward_pass(&LogParams::new(model), &emission_log_probs(model, seq)))
}

/// Pairwise posteriors `ξ_t(i, j)` for `t = 0..T−1`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPosteriors {
    k: usize,
    data: Vec<f64>,
}

impl PairPosteriors {
    pub fn len(&self) -> usize {
        self.data.len() / (self.k * self.k).max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, t: usize, i: usize, j: usize) -> f64 {
        self.data[(t * self.k + i) * self.k + j]
    }

    /// The `K × K` slice for transition `t → t+1`, row-major.
    pub fn at(&self, t: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.data[t * kk..(t + 1) * kk]
    }
}

#[derive(Debug, Clone)]
pub struct ForwardBackwardResult {
    pub log_alpha: Matrix,
    pub log_beta: Matrix,
    pub log_likelihood: f64,
    /// `γ_t(j)` in the linear domain; rows sum to one.
    pub gamma: Matrix,
    /// Present only when requested.
    pub xi: Option<PairPosteriors>,
}

/// Visits `ξ_t(i, j)` for every `t < T − 1` without storing them.
pub(crate) fn for_each_xi(
    lp: &LogParams,
    log_b: &Matrix,
    alpha: &Matrix,
    beta: &Matrix,
    log_likelihood: f64,
    mut visit: impl FnMut(usize, usize, usize, f64),
) {
    let k = lp.num_states();
    for t in 0..log_b.rows().saturating_sub(1) {
        for i in 0..k {
            let a = alpha[(t, i)];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for j in 0..k {
                let lx = a + lp.log_transitions[(i, j)] + log_b[(t + 1, j)] + beta[(t + 1, j)] - log_likelihood;
                if lx > f64::NEG_INFINITY {
                    visit(t, i, j, lx.exp());
                }
            }
        }
    }
}

pub(crate) fn gamma_from(alpha: &Matrix, beta: &Matrix, log_likelihood: f64) -> Matrix {
    let mut gamma = Matrix::filled(alpha.rows(), alpha.cols(), 0.0);
    for t in 0..alpha.rows() {
        for j in 0..alpha.cols() {
            gamma[(t, j)] = (alpha[(t, j)] + beta[(t, j)] - log_likelihood).exp();
        }
    }
    gamma
}

/// Smoothed posteriors `γ` (and optionally `ξ`).
pub fn posteriors(model: &HmmModel, seq: &[f64], with_xi: bool) -> Result<ForwardBackwardResult> {
    check_sequence(seq)?;
    let lp = LogParams::new(model);
    let log_b = emission_log_probs(model, seq);
    let (log_alpha, log_likelihood) = forward_pass(&lp, &log_b);
    if log_likelihood == f64::NEG_INFINITY {
        return Err(Error::ImpossibleSequence);
    }
    let log_beta = backward_pass(&lp, &log_b);
    let gamma = gamma_from(&log_alpha, &log_beta, log_likelihood);
    let xi = with_xi.then(|| {
        let k = model.num_states();
        let mut data = vec![0.0; seq.len().saturating_sub(1) * k * k];
        for_each_xi(&lp, &log_b, &log_alpha, &log_beta, log_likelihood, |t, i, j, x| {
            data[(t * k + i) * k + j] = x;
        });
        PairPosteriors { k, data }
    });
    Ok(ForwardBackwardResult {
        log_alpha,
        log_beta,
        log_likelihood,
        gamma,
        xi,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiResult {
    pub path: Vec<usize>,
    /// `log P(path, y)` of the best path.
    pub log_joint: f64,
}

/// Values this close (relative) to the maximum count as ties, so that paths
/// equal in exact arithmetic are not split by rounding.
pub const TIE_TOL: f64 = 1e-12;

fn argmax_first(xs: impl IntoIterator<Item = f64> + Clone) -> (usize, f64) {
    let best = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return (0, best);
    }
    let floor = best - TIE_TOL * best.abs().max(1.0);
    let i = xs.into_iter().position(|x| x >= floor).unwrap_or(0);
    (i, best)
}

/// Most probable state path. Ties go to the smallest state index, both for
/// the final state and for every backpointer.
pub fn viterbi(model: &HmmModel, seq: &[f64]) -> Result<ViterbiResult> {
    check_sequence(seq)?;
    let lp = LogParams::new(model);
    let log_b = emission_log_probs(model, seq);
    let k = model.num_states();
    let t_len = seq.len();
    let mut delta: Vec<f64> = (0..k).map(|j| lp.log_initial[j] + log_b[(0, j)]).collect();
    let mut next = vec![0.0; k];
    let mut back = vec![0usize; t_len * k];
    for t in 1..t_len {
        for j in 0..k {
            let (i, best) = argmax_first((0..k).map(|i| delta[i] + lp.log_transitions[(i, j)]));
            back[t * k + j] = i;
            next[j] = best + log_b[(t, j)];
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let (mut state, log_joint) = argmax_first(delta.iter().copied());
    if log_joint == f64::NEG_INFINITY {
        return Err(Error::NoFeasiblePath);
    }
    let mut path = vec![0; t_len];
    path[t_len - 1] = state;
    for t in (1..t_len).rev() {
        state = back[t * k + state];
        path[t - 1] = state;
    }
    Ok(ViterbiResult { path, log_joint })
}

/// `argmax_j γ_t(j)` per time step, ties to the smallest index.
pub fn posterior_decode(fb: &ForwardBackwardResult) -> Vec<usize> {
    fb.gamma
        .iter_rows()
        .map(|row| argmax_first(row.iter().copied()).0)
        .collect()
}
