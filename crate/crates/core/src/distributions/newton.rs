//! Newton-Raphson M-steps, each seeded from a method-of-moments estimate.
//!
//! Convergence is measured on the score divided by `N = Σ w`, so the
//! tolerances are independent of how the weights are scaled.

use std::f64::consts::PI;

use super::solve::Newton;
use super::{ln_beta, Emission, FitNote, Fitted, WeightedSample, KAPPA_CEILING, NB_DISPERSION_CEILING};
use crate::error::{Error, Result};
use crate::math::{bessel_a, ln_gamma, psi, psi1};

/// Residual tolerance for the Gamma, Beta, Weibull, von Mises and
/// chi-squared score equations.
pub const SCORE_TOL: f64 = 1e-10;
/// Residual tolerance on the profiled negative binomial score.
pub const NB_SCORE_TOL: f64 = 1e-8;
/// Iteration cap for one-dimensional Newton solves.
pub const MAX_ITER_1D: usize = 50;
/// Iteration cap for the coupled Beta solve.
pub const MAX_ITER_BETA: usize = 100;

const R_BAR_MIN: f64 = 1e-12;
const R_BAR_MAX: f64 = 1.0 - 1e-12;

fn nonempty(sample: &WeightedSample<'_>) -> Result<()> {
    if sample.total() > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("fit requires positive total weight"))
    }
}

fn positive_support(sample: &WeightedSample<'_>) -> Result<()> {
    nonempty(sample)?;
    sample.require(|y| y > 0.0 && y.is_finite(), "y > 0")
}

fn nondegenerate(var: f64) -> Result<()> {
    if var > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("zero weighted variance"))
    }
}

fn decreasing(ftol: f64, upper: f64) -> Newton {
    Newton {
        ftol,
        xtol: 0.0,
        max_iter: MAX_ITER_1D,
        increasing: false,
        lower: 0.0,
        upper,
    }
}

// ---------------------------------------------------------------------------
// Gamma

/// `α = ȳ²/σ̂²`, `β = α/ȳ`.
pub fn gamma_seed(sample: &WeightedSample<'_>) -> Result<Emission> {
    positive_support(sample)?;
    let mean = sample.mean();
    let var = sample.variance();
    nondegenerate(var)?;
    let shape = mean * mean / var;
    Ok(Emission::Gamma {
        shape,
        rate: shape / mean,
    })
}

/// Per-unit-weight Gamma shape score `log α − ψ(α) − c`, with
/// `c = log ȳ − N⁻¹ Σ w log y`.
pub fn gamma_shape_residual(sample: &WeightedSample<'_>, shape: f64) -> f64 {
    let c = sample.mean().ln() - sample.weighted_mean_of(f64::ln);
    shape.ln() - psi(shape) - c
}

pub fn fit_gamma_nr(sample: &WeightedSample<'_>) -> Result<Fitted> {
    let seed = gamma_seed(sample)?;
    let Emission::Gamma { shape: shape0, .. } = seed else {
        unreachable!()
    };
    let mean = sample.mean();
    let c = mean.ln() - sample.weighted_mean_of(f64::ln);
    if !(c > 0.0) {
        return Ok(Fitted::noted(seed, FitNote::MomFallback));
    }
    let root = decreasing(SCORE_TOL, f64::INFINITY).solve(shape0, |a| (a.ln() - psi(a) - c, 1.0 / a - psi1(a)));
    if !root.converged {
        return Ok(Fitted::noted(seed, FitNote::MomFallback));
    }
    Ok(Fitted::exact(Emission::Gamma {
        shape: root.x,
        rate: root.x / mean,
    }))
}

// ---------------------------------------------------------------------------
// Chi-squared: Gamma(ν/2, 1/2) with ν free.

pub fn chisquared_seed(sample: &WeightedSample<'_>) -> Result<Emission> {
    positive_support(sample)?;
    Ok(Emission::ChiSquared { dof: sample.mean() })
}

/// Per-unit-weight derivative of the chi-squared log-likelihood in ν.
pub fn chisquared_score(sample: &WeightedSample<'_>, dof: f64) -> f64 {
    let mean_log = sample.weighted_mean_of(f64::ln);
    0.5 * (mean_log - std::f64::consts::LN_2 - psi(0.5 * dof))
}

pub fn fit_chisquared(sample: &WeightedSample<'_>) -> Result<Fitted> {
    let seed = chisquared_seed(sample)?;
    let Emission::ChiSquared { dof: dof0 } = seed else {
        unreachable!()
    };
    let target = sample.weighted_mean_of(f64::ln) - std::f64::consts::LN_2;
    let root =
        decreasing(SCORE_TOL, f64::INFINITY).solve(dof0, |nu| (0.5 * (target - psi(0.5 * nu)), -0.25 * psi1(0.5 * nu)));
    if !root.converged {
        return Ok(Fitted::noted(seed, FitNote::MomFallback));
    }
    Ok(Fitted::exact(Emission::ChiSquared { dof: root.x }))
}

// ---------------------------------------------------------------------------
// Beta

/// Moment seeds `ȳ[ȳ(1−ȳ)/σ̂² − 1]`, `(1−ȳ)[ȳ(1−ȳ)/σ̂² − 1]`, or `(1, 1)`
/// when the variance is too large for them to be positive.
pub fn beta_seed(sample: &WeightedSample<'_>) -> Result<Emission> {
    nonempty(sample)?;
    sample.require(|y| y > 0.0 && y < 1.0, "0 < y < 1")?;
    let mean = sample.mean();
    let var = sample.variance();
    nondegenerate(var)?;
    let common = mean * (1.0 - mean) / var - 1.0;
    if common > 0.0 {
        Ok(Emission::Beta {
            alpha: mean * common,
            beta: (1.0 - mean) * common,
        })
    } else {
        Ok(Emission::Beta { alpha: 1.0, beta: 1.0 })
    }
}

/// The two stationarity residuals
/// `ψ(α) − ψ(α+β) − N⁻¹Σw log y` and `ψ(β) − ψ(α+β) − N⁻¹Σw log(1−y)`.
pub fn beta_residuals(sample: &WeightedSample<'_>, alpha: f64, beta: f64) -> [f64; 2] {
    let l1 = sample.weighted_mean_of(f64::ln);
    let l2 = sample.weighted_mean_of(|y| (-y).ln_1p());
    let s = psi(alpha + beta);
    [psi(alpha) - s - l1, psi(beta) - s - l2]
}

pub fn fit_beta_nr(sample: &WeightedSample<'_>) -> Result<Fitted> {
    let seed = beta_seed(sample)?;
    let Emission::Beta {
        alpha: mut a,
        beta: mut b,
    } = seed
    else {
        unreachable!()
    };
    let l1 = sample.weighted_mean_of(f64::ln);
    let l2 = sample.weighted_mean_of(|y| (-y).ln_1p());
    let objective = |a: f64, b: f64| (a - 1.0) * l1 + (b - 1.0) * l2 - ln_beta(a, b);
    let residual = |a: f64, b: f64| {
        let s = psi(a + b);
        [psi(a) - s - l1, psi(b) - s - l2]
    };

    let mut current = objective(a, b);
    for _ in 0..MAX_ITER_BETA {
        let g = residual(a, b);
        if g[0].abs().max(g[1].abs()) <= SCORE_TOL {
            return Ok(Fitted::exact(Emission::Beta { alpha: a, beta: b }));
        }
        let t = psi1(a + b);
        let (j11, j12, j22) = (psi1(a) - t, -t, psi1(b) - t);
        let det = j11 * j22 - j12 * j12;
        let da = -(j22 * g[0] - j12 * g[1]) / det;
        let db = -(j11 * g[1] - j12 * g[0]) / det;
        // Damped step: stay positive and never lose likelihood.
        let slack = 1e-13 * (1.0 + current.abs());
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (na, nb) = (a + step * da, b + step * db);
            if na > 0.0 && nb > 0.0 {
                let value = objective(na, nb);
                if value >= current - slack {
                    a = na;
                    b = nb;
                    current = value;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(Fitted::noted(seed, FitNote::MomFallback))
}

// ---------------------------------------------------------------------------
// Weibull

/// `k ≈ (σ/μ)^(−1.086)`, `λ = μ / Γ(1 + 1/k)`.
pub fn weibull_seed(sample: &WeightedSample<'_>) -> Result<Emission> {
    positive_support(sample)?;
    let mean = sample.mean();
    let var = sample.variance();
    nondegenerate(var)?;
    let shape = (var.sqrt() / mean).powf(-1.086);
    let scale = mean / ln_gamma(1.0 + 1.0 / shape).exp();
    Ok(Emission::Weibull { shape, scale })
}

/// Moments of `y^k` needed by the Weibull shape equation, computed relative
/// to the largest observation so `y^k` cannot overflow.
struct WeibullSums {
    logs: Vec<(f64, f64)>,
    log_max: f64,
    mean_log: f64,
}

impl WeibullSums {
    fn new(sample: &WeightedSample<'_>) -> Self {
        let logs: Vec<(f64, f64)> = sample.pairs().map(|(y, w)| (y.ln(), w)).collect();
        let log_max = logs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        WeibullSums {
            logs,
            log_max,
            mean_log: sample.weighted_mean_of(f64::ln),
        }
    }

    // (Σ w z^k, Σ w z^k ln y, Σ w z^k ln² y) with z = y / y_max
    fn moments(&self, k: f64) -> (f64, f64, f64) {
        self.logs.iter().fold((0.0, 0.0, 0.0), |(s0, s1, s2), &(ly, w)| {
            let zk = w * (k * (ly - self.log_max)).exp();
            (s0 + zk, s1 + zk * ly, s2 + zk * ly * ly)
        })
    }

    fn residual(&self, k: f64) -> (f64, f64) {
        let (s0, s1, s2) = self.moments(k);
        let m1 = s1 / s0;
        let m2 = s2 / s0;
        (1.0 / k + self.mean_log - m1, -1.0 / (k * k) - (m2 - m1 * m1))
    }
}

/// `1/k + N⁻¹Σw log y − Σw y^k log y / Σw y^k`.
pub fn weibull_shape_residual(sample: &WeightedSample<'_>, shape: f64) -> f64 {
    WeibullSums::new(sample).residual(shape).0
}

pub fn fit_weibull_nr(sample: &WeightedSample<'_>) -> Result<Fitted> {
    let seed = weibull_seed(sample)?;
    let Emission::Weibull { shape: k0, .. } = seed else {
        unreachable!()
    };
    let sums = WeibullSums::new(sample);
    let root = decreasing(SCORE_TOL, f64::INFINITY).solve(k0, |k| sums.residual(k));
    if !root.converged {
        return Ok(Fitted::noted(seed, FitNote::MomFallback));
    }
    let k = root.x;
    let (s0, _, _) = sums.moments(k);
    let scale = (sums.log_max + (s0 / sample.total()).ln() / k).exp();
    Ok(Fitted::exact(Emission::Weibull { shape: k, scale }))
}

// ---------------------------------------------------------------------------
// von Mises

/// Weighted circular mean in `(−π, π]` and mean resultant length `R̄`.
pub fn circular_mean(sample: &WeightedSample<'_>) -> (f64, f64) {
    let (c, s) = sample
        .pairs()
        .fold((0.0, 0.0), |(c, s), (y, w)| (c + w * y.cos(), s + w * y.sin()));
    let mut mu = s.atan2(c);
    if mu <= -PI {
        mu = PI;
    }
    (mu, c.hypot(s) / sample.total())
}

fn kappa_seed(r_bar: f64) -> f64 {
    r_bar * (2.0 - r_bar * r_bar) / (1.0 - r_bar * r_bar)
}

pub fn vonmises_seed(sample: &WeightedSample<'_>) -> Result<Emission> {
    nonempty(sample)?;
    sample.require(f64::is_finite, "finite angles")?;
    let (mu, r_bar) = circular_mean(sample);
    let kappa = if r_bar <= R_BAR_MIN {
        0.0
    } else if r_bar >= R_BAR_MAX {
        KAPPA_CEILING
    } else {
        kappa_seed(r_bar).min(KAPPA_CEILING)
    };
    Ok(Emission::VonMises { mu, kappa })
}

pub fn fit_vonmises(sample: &WeightedSample<'_>) -> Result<Fitted> {
    let seed = vonmises_seed(sample)?;
    let (mu, r_bar) = circular_mean(sample);
    if r_bar <= R_BAR_MIN {
        return Ok(Fitted::exact(Emission::VonMises { mu, kappa: 0.0 }));
    }
    if r_bar >= R_BAR_MAX || bessel_a(KAPPA_CEILING) <= r_bar {
        return Ok(Fitted::noted(
            Emission::VonMises {
                mu,
                kappa: KAPPA_CEILING,
            },
            FitNote::KappaCeiling,
        ));
    }
    let solver = Newton {
        increasing: true,
        ..decreasing(SCORE_TOL, KAPPA_CEILING)
    };
    let root = solver.solve(kappa_seed(r_bar), |k| {
        let a = bessel_a(k);
        (a - r_bar, 1.0 - a * a - a / k)
    });
    if root.converged {
        Ok(Fitted::exact(Emission::VonMises { mu, kappa: root.x }))
    } else if root.residual.abs() <= 1e-6 {
        // Stuck on the seam between the two polynomial branches of A(κ).
        Ok(Fitted::exact(Emission::VonMises { mu, kappa: root.x }))
    } else {
        Ok(Fitted::noted(seed, FitNote::MomFallback))
    }
}

// ---------------------------------------------------------------------------
// Negative binomial

/// `r = ȳ² / (σ̂² − ȳ)`, or the dispersion ceiling for a sample that is not
/// overdispersed.
pub fn negbinom_seed(sample: &WeightedSample<'_>) -> Result<Emission> {
    nonempty(sample)?;
    sample.require(super::is_count, "non-negative integers")?;
    let mean = sample.mean();
    if !(mean > 0.0) {
        return Err(Error::domain("negative binomial fit of all-zero data"));
    }
    let var = sample.variance();
    let r = if var > mean {
        (mean * mean / (var - mean)).min(NB_DISPERSION_CEILING)
    } else {
        NB_DISPERSION_CEILING
    };
    Ok(Emission::NegativeBinomial { r, p: r / (r + mean) })
}

/// Profiled score `Σw[ψ(y+r) − ψ(r)] + N log(r/(r+ȳ))`, divided by `N`.
pub(crate) struct NbProfile {
    mean: f64,
    total: f64,
    // weight with y > i, for i = 0..max(y)
    tail: Vec<f64>,
    // (y, w) pairs when max(y) is too large for the tail table
    pairs: Vec<(f64, f64)>,
}

const NB_TAIL_LIMIT: f64 = 100_000.0;

impl NbProfile {
    pub(crate) fn new(sample: &WeightedSample<'_>) -> Self {
        let max = sample.max_positive_weight_obs().unwrap_or(0.0);
        let (tail, pairs) = if max <= NB_TAIL_LIMIT {
            let mut counts = vec![0.0; max as usize + 1];
            for (y, w) in sample.pairs() {
                counts[y as usize] += w;
            }
            let mut tail = vec![0.0; max as usize];
            let mut acc = 0.0;
            for i in (0..max as usize).rev() {
                acc += counts[i + 1];
                tail[i] = acc;
            }
            (tail, Vec::new())
        } else {
            (Vec::new(), sample.pairs().collect())
        };
        NbProfile {
            mean: sample.mean(),
            total: sample.total(),
            tail,
            pairs,
        }
    }

    pub(crate) fn score(&self, r: f64) -> (f64, f64) {
        let (mut d1, mut d2) = (0.0, 0.0);
        if self.pairs.is_empty() {
            for (i, &t) in self.tail.iter().enumerate() {
                let x = r + i as f64;
                d1 += t / x;
                d2 -= t / (x * x);
            }
        } else {
            for &(y, w) in &self.pairs {
                d1 += w * (psi(y + r) - psi(r));
                d2 += w * (psi1(y + r) - psi1(r));
            }
        }
        let n = self.total;
        let m = self.mean;
        (d1 / n - (m / r).ln_1p(), d2 / n + 1.0 / r - 1.0 / (r + m))
    }
}

/// Per-unit-weight profiled score in `r`.
pub fn negbinom_score(sample: &WeightedSample<'_>, r: f64) -> f64 {
    NbProfile::new(sample).score(r).0
}

pub fn fit_negbinom_nr(sample: &WeightedSample<'_>) -> Result<Fitted> {
    let seed = negbinom_seed(sample)?;
    let Emission::NegativeBinomial { r: r0, .. } = seed else {
        unreachable!()
    };
    let mean = sample.mean();
    let profile = NbProfile::new(sample);
    let near_poisson = Emission::NegativeBinomial {
        r: NB_DISPERSION_CEILING,
        p: NB_DISPERSION_CEILING / (NB_DISPERSION_CEILING + mean),
    };
    if profile.score(NB_DISPERSION_CEILING).0 >= 0.0 {
        return Ok(Fitted::noted(near_poisson, FitNote::NearPoisson));
    }
    let root = decreasing(NB_SCORE_TOL, NB_DISPERSION_CEILING).solve(r0, |r| profile.score(r));
    if !root.converged {
        return Ok(Fitted::noted(seed, FitNote::MomFallback));
    }
    let r = root.x;
    Ok(Fitted::exact(Emission::NegativeBinomial { r, p: r / (r + mean) }))
}
