//! Emission distributions: log-densities and posterior-weighted
//! maximum-likelihood fits for fifteen families.
//!
//! Every family exposes the same two behaviours the training loop needs:
//! [`Emission::log_prob`] and [`Emission::refit`], the weighted M-step
//! `argmax_θ Σ_t w_t log b(y_t | θ)`. Closed-form families live in
//! [`closed_form`], the Newton-Raphson families in [`newton`], and the
//! Student-t ECME cycle in [`student_t`].

pub mod closed_form;
pub mod newton;
mod params;
mod solve;
pub mod student_t;

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::math::{ln_gamma, ln_i0};

pub use params::ParamRecord;
pub use student_t::EcmeConfig;

/// Lower bound applied to every fitted scale parameter.
pub const SCALE_FLOOR: f64 = 1e-9;
/// Upper bound on the fitted von Mises concentration.
pub const KAPPA_CEILING: f64 = 1e5;
/// Dispersion reported for an underdispersed negative binomial sample.
pub const NB_DISPERSION_CEILING: f64 = 1e8;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Gaussian,
    LogNormal,
    Exponential,
    Poisson,
    Rayleigh,
    Uniform,
    Categorical,
    VonMises,
    Gamma,
    Beta,
    Weibull,
    NegativeBinomial,
    ChiSquared,
    Pareto,
    StudentT,
}

impl Family {
    pub const ALL: [Family; 15] = [
        Family::Gaussian,
        Family::LogNormal,
        Family::Exponential,
        Family::Poisson,
        Family::Rayleigh,
        Family::Uniform,
        Family::Categorical,
        Family::VonMises,
        Family::Gamma,
        Family::Beta,
        Family::Weibull,
        Family::NegativeBinomial,
        Family::ChiSquared,
        Family::Pareto,
        Family::StudentT,
    ];

    /// Tag used in model documents and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::LogNormal => "lognormal",
            Family::Exponential => "exponential",
            Family::Poisson => "poisson",
            Family::Rayleigh => "rayleigh",
            Family::Uniform => "uniform",
            Family::Categorical => "categorical",
            Family::VonMises => "von_mises",
            Family::Gamma => "gamma",
            Family::Beta => "beta",
            Family::Weibull => "weibull",
            Family::NegativeBinomial => "negative_binomial",
            Family::ChiSquared => "chi_squared",
            Family::Pareto => "pareto",
            Family::StudentT => "student_t",
        }
    }

    pub fn from_name(name: &str) -> Result<Family> {
        let lowered = name.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match lowered.as_str() {
            "normal" => "gaussian",
            "log_normal" => "lognormal",
            "discrete" => "categorical",
            "vonmises" => "von_mises",
            "negbinom" | "negativebinomial" => "negative_binomial",
            "chisquared" | "chi2" => "chi_squared",
            "studentt" | "t" => "student_t",
            other => other,
        };
        Family::ALL.into_iter().find(|f| f.name() == alias).ok_or_else(|| {
            let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
            Error::Usage(format!(
                "unknown family '{name}'; supported families: {}",
                names.join(", ")
            ))
        })
    }

    /// Whether observations are integer codes rather than reals.
    pub fn is_discrete(self) -> bool {
        matches!(self, Family::Poisson | Family::Categorical | Family::NegativeBinomial)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One state's emission distribution.
///
/// Rates are rates (not means): `Exponential { rate }` has density
/// `rate·e^(-rate·y)` and `Gamma { shape, rate }` has mean `shape / rate`.
/// `NegativeBinomial { r, p }` counts failures before the `r`-th success,
/// so its mean is `r(1 - p)/p`.
#[derive(Debug, Clone, PartialEq)]
pub enum Emission {
    Gaussian { mu: f64, sigma: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    Poisson { rate: f64 },
    Rayleigh { sigma: f64 },
    Uniform { low: f64, high: f64 },
    Categorical { probs: Vec<f64> },
    VonMises { mu: f64, kappa: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { alpha: f64, beta: f64 },
    Weibull { shape: f64, scale: f64 },
    NegativeBinomial { r: f64, p: f64 },
    ChiSquared { dof: f64 },
    Pareto { scale: f64, shape: f64 },
    StudentT { mu: f64, sigma: f64, nu: f64 },
}

/// Something a fit had to do that the caller may want to know about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitNote {
    /// A scale parameter hit [`SCALE_FLOOR`].
    ScaleFloored,
    /// Newton-Raphson did not converge; the method-of-moments seed was kept.
    MomFallback,
    /// Negative binomial sample was not overdispersed; `r` set to its ceiling.
    NearPoisson,
    /// von Mises concentration clamped to [`KAPPA_CEILING`].
    KappaCeiling,
    /// Student-t degrees of freedom clamped to the ECME ceiling.
    NearGaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub dist: Emission,
    pub note: Option<FitNote>,
}

impl Fitted {
    pub(crate) fn exact(dist: Emission) -> Self {
        Fitted { dist, note: None }
    }

    pub(crate) fn noted(dist: Emission, note: FitNote) -> Self {
        Fitted { dist, note: Some(note) }
    }
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be > 0, got {x}")))
    }
}

fn finite(field: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be finite, got {x}")))
    }
}

fn is_count(y: f64) -> bool {
    y >= 0.0 && y.fract() == 0.0 && y.is_finite()
}

impl Emission {
    pub fn family(&self) -> Family {
        match self {
            Emission::Gaussian { .. } => Family::Gaussian,
            Emission::LogNormal { .. } => Family::LogNormal,
            Emission::Exponential { .. } => Family::Exponential,
            Emission::Poisson { .. } => Family::Poisson,
            Emission::Rayleigh { .. } => Family::Rayleigh,
            Emission::Uniform { .. } => Family::Uniform,
            Emission::Categorical { .. } => Family::Categorical,
            Emission::VonMises { .. } => Family::VonMises,
            Emission::Gamma { .. } => Family::Gamma,
            Emission::Beta { .. } => Family::Beta,
            Emission::Weibull { .. } => Family::Weibull,
            Emission::NegativeBinomial { .. } => Family::NegativeBinomial,
            Emission::ChiSquared { .. } => Family::ChiSquared,
            Emission::Pareto { .. } => Family::Pareto,
            Emission::StudentT { .. } => Family::StudentT,
        }
    }

    /// Checks the family's parameter invariants, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Emission::Gaussian { mu, sigma } | Emission::LogNormal { mu, sigma } => {
                finite("mu", mu)?;
                positive("sigma", sigma)
            }
            Emission::Exponential { rate } | Emission::Poisson { rate } => positive("lambda", rate),
            Emission::Rayleigh { sigma } => positive("sigma", sigma),
            Emission::Uniform { low, high } => {
                finite("a", low)?;
                finite("b", high)?;
                if low < high {
                    Ok(())
                } else {
                    Err(Error::validation("b", format!("must exceed a ({low}), got {high}")))
                }
            }
            Emission::Categorical { ref probs } => {
                if probs.is_empty() {
                    return Err(Error::validation("p0", "categorical needs at least one category"));
                }
                for (k, &p) in probs.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::validation(
                            format!("p{k}"),
                            format!("must lie in [0, 1], got {p}"),
                        ));
                    }
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::validation(
                        "p",
                        format!("probabilities must sum to 1, got {sum}"),
                    ));
                }
                Ok(())
            }
            Emission::VonMises { mu, kappa } => {
                if !(mu > -PI && mu <= PI) {
                    return Err(Error::validation("mu", format!("must lie in (-pi, pi], got {mu}")));
                }
                if kappa >= 0.0 && kappa.is_finite() {
                    Ok(())
                } else {
                    Err(Error::validation("kappa", format!("must be >= 0, got {kappa}")))
                }
            }
            Emission::Gamma { shape, rate } => {
                positive("alpha", shape)?;
                positive("beta", rate)
            }
            Emission::Beta { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            Emission::Weibull { shape, scale } => {
                positive("k", shape)?;
                positive("lambda", scale)
            }
            Emission::NegativeBinomial { r, p } => {
                positive("r", r)?;
                if p > 0.0 && p < 1.0 {
                    Ok(())
                } else {
                    Err(Error::validation("p", format!("must lie in (0, 1), got {p}")))
                }
            }
            Emission::ChiSquared { dof } => positive("nu", dof),
            Emission::Pareto { scale, shape } => {
                positive("xm", scale)?;
                positive("alpha", shape)
            }
            Emission::StudentT { mu, sigma, nu } => {
                finite("mu", mu)?;
                positive("sigma", sigma)?;
                positive("nu", nu)
            }
        }
    }

    /// Number of free parameters, as counted for information criteria.
    pub fn num_params(&self) -> usize {
        match self {
            Emission::Exponential { .. }
            | Emission::Poisson { .. }
            | Emission::Rayleigh { .. }
            | Emission::ChiSquared { .. } => 1,
            Emission::Categorical { probs } => probs.len() - 1,
            Emission::StudentT { .. } => 3,
            _ => 2,
        }
    }

    /// Log-density (or log-mass) at `y`; `-inf` outside the support.
    pub fn log_prob(&self, y: f64) -> Result<f64> {
        if y.is_nan() {
            return Err(Error::domain("log_prob of NaN"));
        }
        Ok(self.ln_density(y))
    }

    pub(crate) fn ln_density(&self, y: f64) -> f64 {
        const NEG_INF: f64 = f64::NEG_INFINITY;
        match *self {
            Emission::Gaussian { mu, sigma } => {
                let z = (y - mu) / sigma;
                -HALF_LN_2PI - sigma.ln() - 0.5 * z * z
            }
            Emission::LogNormal { mu, sigma } => {
                if y <= 0.0 {
                    return NEG_INF;
                }
                let ly = y.ln();
                let z = (ly - mu) / sigma;
                -ly - HALF_LN_2PI - sigma.ln() - 0.5 * z * z
            }
            Emission::Exponential { rate } => {
                if y < 0.0 {
                    NEG_INF
                } else {
                    rate.ln() - rate * y
                }
            }
            Emission::Poisson { rate } => {
                if !is_count(y) {
                    return NEG_INF;
                }
                y * rate.ln() - rate - ln_gamma(y + 1.0)
            }
            Emission::Rayleigh { sigma } => {
                if y <= 0.0 {
                    return NEG_INF;
                }
                let s2 = sigma * sigma;
                y.ln() - s2.ln() - y * y / (2.0 * s2)
            }
            Emission::Uniform { low, high } => {
                if y < low || y > high {
                    NEG_INF
                } else {
                    -(high - low).ln()
                }
            }
            Emission::Categorical { ref probs } => {
                if !is_count(y) || y as usize >= probs.len() {
                    return NEG_INF;
                }
                probs[y as usize].ln()
            }
            Emission::VonMises { mu, kappa } => kappa * (y - mu).cos() - (2.0 * PI).ln() - ln_i0(kappa),
            Emission::Gamma { shape, rate } => gamma_ln_pdf(y, shape, rate),
            Emission::Beta { alpha, beta } => {
                if y <= 0.0 || y >= 1.0 {
                    return NEG_INF;
                }
                (alpha - 1.0) * y.ln() + (beta - 1.0) * (-y).ln_1p() - ln_beta(alpha, beta)
            }
            Emission::Weibull { shape, scale } => {
                if y <= 0.0 {
                    return NEG_INF;
                }
                let lz = y.ln() - scale.ln();
                shape.ln() - scale.ln() + (shape - 1.0) * lz - (shape * lz).exp()
            }
            Emission::NegativeBinomial { r, p } => {
                if !is_count(y) {
                    return NEG_INF;
                }
                let tail = if y == 0.0 { 0.0 } else { y * (-p).ln_1p() };
                ln_gamma(y + r) - ln_gamma(r) - ln_gamma(y + 1.0) + r * p.ln() + tail
            }
            Emission::ChiSquared { dof } => gamma_ln_pdf(y, 0.5 * dof, 0.5),
            Emission::Pareto { scale, shape } => {
                if y < scale {
                    return NEG_INF;
                }
                shape.ln() + shape * scale.ln() - (shape + 1.0) * y.ln()
            }
            Emission::StudentT { mu, sigma, nu } => {
                let z = (y - mu) / sigma;
                ln_gamma(0.5 * (nu + 1.0))
                    - ln_gamma(0.5 * nu)
                    - 0.5 * (nu * PI).ln()
                    - sigma.ln()
                    - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
            }
        }
    }

    /// `Σ_t w_t log b(y_t)`, skipping zero-weight terms.
    pub fn weighted_log_likelihood(&self, sample: &WeightedSample<'_>) -> f64 {
        sample.pairs().map(|(y, w)| w * self.ln_density(y)).sum()
    }

    /// Weighted M-step from this distribution's current parameters.
    ///
    /// Only the Student-t (one ECME cycle from the current point) and the
    /// categorical (category count) depend on `self`; every other family
    /// is fitted from the sample alone.
    pub fn refit(&self, sample: &WeightedSample<'_>, ecme: &EcmeConfig) -> Result<Fitted> {
        match self {
            Emission::StudentT { .. } => student_t::fit_student_t_ecme(sample, self, ecme),
            Emission::Categorical { probs } => closed_form::fit_categorical(sample, probs.len()),
            other => fit_family(other.family(), sample),
        }
    }
}

/// Weighted maximum-likelihood fit for every family that does not need a
/// starting point. Categorical infers the category count from the sample and
/// Student-t starts ECME from the moment estimate.
pub fn fit_family(family: Family, sample: &WeightedSample<'_>) -> Result<Fitted> {
    match family {
        Family::Gaussian
        | Family::LogNormal
        | Family::Exponential
        | Family::Poisson
        | Family::Rayleigh
        | Family::Uniform
        | Family::Pareto => closed_form::fit_closed_form(family, sample),
        Family::Categorical => {
            let m = sample.max_positive_weight_obs().map_or(1, |y| y as usize + 1);
            closed_form::fit_categorical(sample, m)
        }
        Family::VonMises => newton::fit_vonmises(sample),
        Family::Gamma => newton::fit_gamma_nr(sample),
        Family::Beta => newton::fit_beta_nr(sample),
        Family::Weibull => newton::fit_weibull_nr(sample),
        Family::NegativeBinomial => newton::fit_negbinom_nr(sample),
        Family::ChiSquared => newton::fit_chisquared(sample),
        Family::StudentT => {
            let seed = moment_estimate(family, sample, 0)?;
            student_t::fit_student_t_ecme(sample, &seed, &EcmeConfig::default())
        }
    }
}

/// Method-of-moments estimate, used to seed Newton iterations and to build
/// default initial models. `categories` is only read for categorical.
pub fn moment_estimate(family: Family, sample: &WeightedSample<'_>, categories: usize) -> Result<Emission> {
    match family {
        Family::Gaussian
        | Family::LogNormal
        | Family::Exponential
        | Family::Poisson
        | Family::Rayleigh
        | Family::Uniform
        | Family::Pareto => closed_form::fit_closed_form(family, sample).map(|f| f.dist),
        Family::Categorical => closed_form::fit_categorical(sample, categories.max(1)).map(|f| f.dist),
        Family::VonMises => newton::vonmises_seed(sample),
        Family::Gamma => newton::gamma_seed(sample),
        Family::Beta => newton::beta_seed(sample),
        Family::Weibull => newton::weibull_seed(sample),
        Family::NegativeBinomial => newton::negbinom_seed(sample),
        Family::ChiSquared => newton::chisquared_seed(sample),
        Family::StudentT => {
            // tails are not identifiable from a handful of moments; start
            // from a moderately heavy-tailed t with matching variance
            const NU0: f64 = 10.0;
            let mu = sample.mean();
            let var = sample.variance();
            let sigma = (var * (NU0 - 2.0) / NU0).sqrt().max(SCALE_FLOOR);
            Ok(Emission::StudentT { mu, sigma, nu: NU0 })
        }
    }
}

pub(crate) fn gamma_ln_pdf(y: f64, shape: f64, rate: f64) -> f64 {
    if y <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * y.ln() - rate * y
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Observations paired with non-negative posterior weights.
///
/// `total()` is `N = Σ w` and `mean()` the weighted mean `ȳ`. Zero-weight
/// observations are invisible to every statistic except the global range
/// used by the uniform fit.
#[derive(Debug, Clone, Copy)]
pub struct WeightedSample<'a> {
    obs: &'a [f64],
    weights: &'a [f64],
    total: f64,
}

impl<'a> WeightedSample<'a> {
    pub fn new(obs: &'a [f64], weights: &'a [f64]) -> Result<Self> {
        let sample = Self::unchecked(obs, weights)?;
        if !(sample.total > 0.0) {
            return Err(Error::domain("weighted sample has zero total weight"));
        }
        Ok(sample)
    }

    /// Like [`WeightedSample::new`] but allows a zero total, for callers that
    /// apply their own collapse guard.
    pub(crate) fn unchecked(obs: &'a [f64], weights: &'a [f64]) -> Result<Self> {
        if obs.len() != weights.len() {
            return Err(Error::Usage(format!(
                "{} observations but {} weights",
                obs.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::domain(format!("weights must be finite and >= 0, got {w}")));
        }
        if obs.iter().any(|y| y.is_nan()) {
            return Err(Error::domain("observation is NaN"));
        }
        let total = weights.iter().sum();
        Ok(WeightedSample { obs, weights, total })
    }

    pub fn observations(&self) -> &'a [f64] {
        self.obs
    }

    pub fn weights(&self) -> &'a [f64] {
        self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// `(y, w)` pairs with `w > 0`.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.obs
            .iter()
            .zip(self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(y, w)| (*y, *w))
    }

    /// `N⁻¹ Σ w f(y)`.
    pub fn weighted_mean_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.pairs().map(|(y, w)| w * f(y)).sum::<f64>() / self.total
    }

    pub fn mean(&self) -> f64 {
        self.weighted_mean_of(|y| y)
    }

    /// Weighted variance with denominator `N`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.weighted_mean_of(|y| (y - m) * (y - m))
    }

    pub(crate) fn max_positive_weight_obs(&self) -> Option<f64> {
        self.pairs().map(|(y, _)| y).reduce(f64::max)
    }

    pub(crate) fn require(&self, ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
        match self.pairs().find(|(y, _)| !ok(*y)) {
            Some((y, _)) => Err(Error::domain(format!("observation {y} outside support: {what}"))),
            None => Ok(()),
        }
    }
}
