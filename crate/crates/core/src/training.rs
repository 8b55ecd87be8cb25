//! Baum-Welch EM with weighted emission M-steps, the state-collapse guard,
//! and information-criterion scoring.

use crate::distributions::{self, EcmeConfig, Emission, Family, FitNote, WeightedSample};
use crate::error::{Error, Result};
use crate::inference::{
    backward_pass, check_sequence, emission_log_probs, for_each_xi, forward_pass, gamma_from, LogParams,
};
use crate::matrix::Matrix;
use crate::model::HmmModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub max_iterations: usize,
    /// Stop once `|ΔlogL| / |logL|` falls below this.
    pub rel_tol: f64,
    /// States whose total posterior weight is below this keep their parameters.
    pub collapse_epsilon: f64,
    pub ecme: EcmeConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            max_iterations: 500,
            rel_tol: 1e-8,
            collapse_epsilon: 1e-8,
            ecme: EcmeConfig::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::validation("max_iterations", "must be positive"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::validation("rel_tol", "must lie in (0, 1)"));
        }
        if !(self.collapse_epsilon > 0.0) {
            return Err(Error::validation("collapse_epsilon", "must be positive"));
        }
        if !(self.ecme.nu_ceiling > 0.0 && self.ecme.nu_tol > 0.0 && self.ecme.max_newton > 0) {
            return Err(Error::validation(
                "ecme",
                "ceiling, tolerance and iteration cap must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Log-likelihood of the starting model, then of the model after each
    /// M-step. The last entry belongs to the returned model.
    pub log_likelihood_trace: Vec<f64>,
    /// Number of M-steps performed.
    pub iterations: usize,
    pub converged: bool,
    /// `(iteration, state)` for every M-step the collapse guard skipped.
    pub collapsed_states: Vec<(usize, usize)>,
    /// `(iteration, state, note)` for every flagged emission fit.
    pub fit_notes: Vec<(usize, usize, FitNote)>,
}

impl TrainingReport {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood_trace.last().expect("trace is never empty")
    }
}

/// Sufficient statistics from one E-step over every sequence.
#[derive(Debug, Clone)]
pub struct Expectation {
    pub log_likelihood: f64,
    /// `Σ_sequences γ_1(j)`.
    pub initial: Vec<f64>,
    /// `Σ_sequences Σ_t ξ_t(i, j)`.
    pub transitions: Matrix,
    /// `weights[j]` is `γ_t(j)` over all sequences, concatenated.
    pub weights: Vec<Vec<f64>>,
}

fn locate_unsupported(model: &HmmModel, data: &[Vec<f64>], s: usize) -> Error {
    let log_b = emission_log_probs(model, &data[s]);
    for (t, row) in log_b.iter_rows().enumerate() {
        if row.iter().all(|&x| x == f64::NEG_INFINITY) {
            return Error::Unsupported {
                sequence: s,
                index: t,
                value: data[s][t],
            };
        }
    }
    Error::ImpossibleSequence
}

/// Forward-backward over every sequence, accumulating `γ` and `ξ`. `ξ` is
/// summed on the fly rather than stored.
pub fn expectation(model: &HmmModel, data: &[Vec<f64>]) -> Result<Expectation> {
    let k = model.num_states();
    let lp = LogParams::new(model);
    let total_len: usize = data.iter().map(Vec::len).sum();
    let mut acc = Expectation {
        log_likelihood: 0.0,
        initial: vec![0.0; k],
        transitions: Matrix::filled(k, k, 0.0),
        weights: vec![Vec::with_capacity(total_len); k],
    };
    for (s, seq) in data.iter().enumerate() {
        let log_b = emission_log_probs(model, seq);
        let (alpha, ll) = forward_pass(&lp, &log_b);
        if ll == f64::NEG_INFINITY {
            return Err(locate_unsupported(model, data, s));
        }
        let beta = backward_pass(&lp, &log_b);
        let gamma = gamma_from(&alpha, &beta, ll);
        for j in 0..k {
            acc.initial[j] += gamma[(0, j)];
            acc.weights[j].extend(gamma.column(j));
        }
        for_each_xi(&lp, &log_b, &alpha, &beta, ll, |_, i, j, x| {
            acc.transitions[(i, j)] += x;
        });
        acc.log_likelihood += ll;
    }
    Ok(acc)
}

/// Re-estimates `π` and `A` from accumulated posteriors.
///
/// Rows whose state is `frozen`, or whose `ξ` mass is zero, are copied from
/// `current` unchanged; every other row is explicitly renormalised.
pub fn m_step_transitions(
    current: &HmmModel,
    initial_sums: &[f64],
    transition_sums: &Matrix,
    frozen: &[bool],
) -> (Vec<f64>, Matrix) {
    let k = current.num_states();
    let total: f64 = initial_sums.iter().sum();
    let initial = if total > 0.0 {
        initial_sums.iter().map(|x| x / total).collect()
    } else {
        current.initial().to_vec()
    };
    let mut transitions = current.transitions().clone();
    for (i, &skip) in frozen.iter().enumerate().take(k) {
        let row = transition_sums.row(i);
        let denom: f64 = row.iter().sum();
        if skip || !(denom > 0.0) {
            continue;
        }
        let out = transitions.row_mut(i);
        for j in 0..k {
            out[j] = row[j] / denom;
        }
        // renormalise once more so the row sums to 1 to rounding
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|x| *x /= s);
    }
    (initial, transitions)
}

/// Result of the emission half of an M-step.
#[derive(Debug, Clone)]
pub struct EmissionUpdate {
    pub emissions: Vec<Emission>,
    /// States skipped by the collapse guard.
    pub collapsed: Vec<usize>,
    pub notes: Vec<(usize, FitNote)>,
}

/// Fits every state's emission to its posterior-weighted sample. A state
/// with `N_j < collapse_epsilon` keeps its current distribution.
pub fn m_step_emissions(
    model: &HmmModel,
    observations: &[f64],
    weights: &[Vec<f64>],
    config: &TrainingConfig,
) -> Result<EmissionUpdate> {
    let mut update = EmissionUpdate {
        emissions: Vec::with_capacity(model.num_states()),
        collapsed: Vec::new(),
        notes: Vec::new(),
    };
    for (j, (current, w)) in model.emissions().iter().zip(weights).enumerate() {
        let sample = WeightedSample::unchecked(observations, w)?;
        if !(sample.total() >= config.collapse_epsilon) {
            update.collapsed.push(j);
            update.emissions.push(current.clone());
            continue;
        }
        let fitted = current.refit(&sample, &config.ecme).map_err(|e| Error::StateFit {
            state: j,
            source: Box::new(e),
        })?;
        if let Some(note) = fitted.note {
            update.notes.push((j, note));
        }
        update.emissions.push(fitted.dist);
    }
    Ok(update)
}

fn check_data(data: &[Vec<f64>]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Usage("no observation sequences".into()));
    }
    data.iter().try_for_each(|s| check_sequence(s))
}

fn relative_change(previous: f64, current: f64) -> f64 {
    let delta = (current - previous).abs();
    if current == 0.0 {
        delta
    } else {
        delta / current.abs()
    }
}

/// Baum-Welch training from `model`. The input model is not modified.
pub fn baum_welch(model: &HmmModel, data: &[Vec<f64>], config: &TrainingConfig) -> Result<(HmmModel, TrainingReport)> {
    config.validate()?;
    check_data(data)?;
    let observations: Vec<f64> = data.iter().flatten().copied().collect();

    let mut current = model.clone();
    let mut stats = expectation(&current, data)?;
    let mut report = TrainingReport {
        log_likelihood_trace: vec![stats.log_likelihood],
        iterations: 0,
        converged: false,
        collapsed_states: Vec::new(),
        fit_notes: Vec::new(),
    };

    for iteration in 1..=config.max_iterations {
        let update = m_step_emissions(&current, &observations, &stats.weights, config)?;
        let mut frozen = vec![false; current.num_states()];
        for &j in &update.collapsed {
            frozen[j] = true;
            report.collapsed_states.push((iteration, j));
        }
        report
            .fit_notes
            .extend(update.notes.iter().map(|&(j, note)| (iteration, j, note)));
        let (initial, transitions) = m_step_transitions(&current, &stats.initial, &stats.transitions, &frozen);
        current = HmmModel::from_parts(initial, transitions, update.emissions)?;

        let previous = stats.log_likelihood;
        stats = expectation(&current, data)?;
        report.log_likelihood_trace.push(stats.log_likelihood);
        report.iterations = iteration;
        if relative_change(previous, stats.log_likelihood) < config.rel_tol {
            report.converged = true;
            break;
        }
    }
    Ok((current, report))
}

/// Deterministic starting model: pooled observations are sorted and cut
/// into `K` quantile bins, state `j` gets its family's moment estimate on
/// bin `j`, `π` is uniform and `A` has 0.9 on the diagonal.
pub fn initial_model(data: &[Vec<f64>], families: &[Family]) -> Result<HmmModel> {
    check_data(data)?;
    let k = families.len();
    if k == 0 {
        return Err(Error::Usage("at least one state is required".into()));
    }
    let mut pooled: Vec<f64> = data.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len();
    if n < k {
        return Err(Error::Usage(format!("{n} observations cannot seed {k} states")));
    }
    let categories = pooled
        .iter()
        .copied()
        .filter(|y| *y >= 0.0 && y.fract() == 0.0)
        .fold(0.0, f64::max) as usize
        + 1;

    let mut emissions = Vec::with_capacity(k);
    for (j, &family) in families.iter().enumerate() {
        let bin = &pooled[j * n / k..(j + 1) * n / k];
        emissions.push(
            seed_emission(family, bin, &pooled, categories).map_err(|e| Error::StateFit {
                state: j,
                source: Box::new(e),
            })?,
        );
    }

    let initial = vec![1.0 / k as f64; k];
    let transitions: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| match (k, i == j) {
                    (1, _) => 1.0,
                    (_, true) => 0.9,
                    (_, false) => 0.1 / (k - 1) as f64,
                })
                .collect()
        })
        .collect();
    HmmModel::new(initial, transitions, emissions)
}

fn seed_emission(family: Family, bin: &[f64], pooled: &[f64], categories: usize) -> Result<Emission> {
    if family == Family::Categorical {
        // Laplace-smoothed bin frequencies: no symbol starts at probability 0
        let mut probs = vec![1.0; categories];
        for &y in bin {
            if y >= 0.0 && y.fract() == 0.0 && (y as usize) < categories {
                probs[y as usize] += 1.0;
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        return Ok(Emission::Categorical { probs });
    }
    let estimate = |obs: &[f64]| {
        let w = vec![1.0; obs.len()];
        let sample = WeightedSample::new(obs, &w)?;
        distributions::moment_estimate(family, &sample, categories)
    };
    // a degenerate bin (constant values, all zeros) falls back to the pool
    estimate(bin).or_else(|_| estimate(pooled))
}

/// Likelihood-based model-selection scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelScore {
    pub log_likelihood: f64,
    pub num_params: usize,
    pub num_obs: usize,
    pub aic: f64,
    pub bic: f64,
    /// Undefined when `n ≤ p + 1`.
    pub aicc: Option<f64>,
}

impl ModelScore {
    pub fn new(log_likelihood: f64, num_params: usize, num_obs: usize) -> Self {
        let p = num_params as f64;
        let n = num_obs as f64;
        let aic = 2.0 * p - 2.0 * log_likelihood;
        let bic = p * n.ln() - 2.0 * log_likelihood;
        let aicc = (num_obs > num_params + 1).then(|| aic + 2.0 * p * (p + 1.0) / (n - p - 1.0));
        ModelScore {
            log_likelihood,
            num_params,
            num_obs,
            aic,
            bic,
            aicc,
        }
    }
}

/// Total forward log-likelihood over `data`, with AIC, BIC and AICc.
pub fn score_model(model: &HmmModel, data: &[Vec<f64>]) -> Result<ModelScore> {
    check_data(data)?;
    let lp = LogParams::new(model);
    let mut ll = 0.0;
    for seq in data {
        ll += forward_pass(&lp, &emission_log_probs(model, seq)).1;
    }
    let n = data.iter().map(Vec::len).sum();
    Ok(ModelScore::new(ll, model.num_params(), n))
}
