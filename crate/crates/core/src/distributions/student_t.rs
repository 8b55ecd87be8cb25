//! ECME for the location-scale Student-t.
//!
//! The t is treated as a Gaussian scale mixture, `Y | U ~ N(μ, σ²/U)` with
//! `U ~ Gamma(ν/2, ν/2)`. One cycle is an E-step for the mixing weights
//! followed by two conditional maximisations: `(μ, σ²)` in closed form, then
//! ν by Newton-Raphson on its Q-function contribution.

use super::solve::Newton;
use super::{Emission, FitNote, Fitted, WeightedSample, SCALE_FLOOR};
use crate::error::{Error, Result};
use crate::math::{ln_gamma, psi, psi1};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcmeConfig {
    /// Degrees of freedom above this are clamped and flagged near-Gaussian.
    pub nu_ceiling: f64,
    /// Inner Newton stops once `|Δν|` falls below this.
    pub nu_tol: f64,
    pub max_newton: usize,
}

impl Default for EcmeConfig {
    fn default() -> Self {
        EcmeConfig {
            nu_ceiling: 1e6,
            nu_tol: 1e-6,
            max_newton: 50,
        }
    }
}

/// `E[U | y] = (ν + 1) / (ν + (y − μ)²/σ²)`.
pub fn expected_weight(y: f64, mu: f64, sigma: f64, nu: f64) -> f64 {
    let z = (y - mu) / sigma;
    (nu + 1.0) / (nu + z * z)
}

/// The ν-dependent part of the ECME Q-function,
///
/// `Q(ν) = N[(ν/2) log(ν/2) − log Γ(ν/2)] + (ν/2) S`,
///
/// where `S = Σ_t w_t (E[log U_t] − E[U_t])`.
#[derive(Debug, Clone, Copy)]
pub struct NuObjective {
    pub total: f64,
    pub stat: f64,
}

impl NuObjective {
    pub fn value(&self, nu: f64) -> f64 {
        let h = 0.5 * nu;
        self.total * (h * h.ln() - ln_gamma(h)) + h * self.stat
    }

    /// `(N/2)[log(ν/2) + 1 − ψ(ν/2)] + S/2`.
    pub fn score(&self, nu: f64) -> f64 {
        let h = 0.5 * nu;
        0.5 * self.total * (h.ln() + 1.0 - psi(h)) + 0.5 * self.stat
    }

    /// `(N/4)[2/ν − ψ′(ν/2)]`, negative for every ν > 0.
    pub fn hessian(&self, nu: f64) -> f64 {
        0.25 * self.total * (2.0 / nu - psi1(0.5 * nu))
    }
}

/// Weighted Student-t log-likelihood `Σ w log t(y; μ, σ, ν)`.
pub fn weighted_log_likelihood(sample: &WeightedSample<'_>, mu: f64, sigma: f64, nu: f64) -> f64 {
    Emission::StudentT { mu, sigma, nu }.weighted_log_likelihood(sample)
}

/// One full ECME cycle from `current`.
///
/// The observed weighted log-likelihood at the result is never below its
/// value at `current`.
pub fn fit_student_t_ecme(sample: &WeightedSample<'_>, current: &Emission, config: &EcmeConfig) -> Result<Fitted> {
    let Emission::StudentT { mu, sigma, nu } = *current else {
        return Err(Error::Usage(format!(
            "ECME needs a student_t starting point, got {}",
            current.family()
        )));
    };
    current.validate()?;
    if !(sample.total() > 0.0) {
        return Err(Error::domain("fit requires positive total weight"));
    }
    sample.require(f64::is_finite, "finite reals")?;
    let n = sample.total();

    // E-step
    let u: Vec<(f64, f64, f64)> = sample
        .pairs()
        .map(|(y, w)| (y, w, expected_weight(y, mu, sigma, nu)))
        .collect();

    // CM-step 1
    let (swu, swuy) = u
        .iter()
        .fold((0.0, 0.0), |(a, b), &(y, w, ut)| (a + w * ut, b + w * ut * y));
    let mu_hat = swuy / swu;
    let var_hat = u
        .iter()
        .map(|&(y, w, ut)| w * ut * (y - mu_hat) * (y - mu_hat))
        .sum::<f64>()
        / n;
    let (sigma_hat, floored) = match var_hat.sqrt() {
        s if s >= SCALE_FLOOR => (s, false),
        _ => (SCALE_FLOOR, true),
    };

    // CM-step 2. Under the mixture, U | y ~ Gamma((ν+1)/2, rate (ν+d²)/2), so
    // E[log U] = log ũ + ψ((ν+1)/2) − log((ν+1)/2).
    let half = 0.5 * (nu + 1.0);
    let log_shift = psi(half) - half.ln();
    let stat: f64 = u.iter().map(|&(_, w, ut)| w * (ut.ln() + log_shift - ut)).sum();
    let objective = NuObjective { total: n, stat };
    let (nu_hat, near_gaussian) = maximise_nu(&objective, nu, config);

    let dist = Emission::StudentT {
        mu: mu_hat,
        sigma: sigma_hat,
        nu: nu_hat,
    };
    let note = if near_gaussian {
        Some(FitNote::NearGaussian)
    } else if floored {
        Some(FitNote::ScaleFloored)
    } else {
        None
    };
    Ok(Fitted { dist, note })
}

fn maximise_nu(objective: &NuObjective, start: f64, config: &EcmeConfig) -> (f64, bool) {
    // Q is concave in ν; a non-negative score at the ceiling means the
    // maximiser lies beyond it.
    if objective.score(config.nu_ceiling) >= 0.0 {
        return (config.nu_ceiling, true);
    }
    let solver = Newton {
        ftol: 0.0,
        xtol: config.nu_tol,
        max_iter: config.max_newton,
        increasing: false,
        lower: 0.0,
        upper: config.nu_ceiling,
    };
    let root = solver.solve(start, |v| (objective.score(v), objective.hessian(v)));
    (root.x, false)
}
