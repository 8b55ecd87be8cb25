//! Families whose weighted M-step has an analytic solution.

use super::{Emission, Family, FitNote, Fitted, WeightedSample, SCALE_FLOOR};
use crate::error::{Error, Result};

fn floored(sigma: f64) -> (f64, bool) {
    if sigma >= SCALE_FLOOR {
        (sigma, false)
    } else {
        (SCALE_FLOOR, true)
    }
}

fn with_floor(dist: Emission, hit: bool) -> Fitted {
    if hit {
        Fitted::noted(dist, FitNote::ScaleFloored)
    } else {
        Fitted::exact(dist)
    }
}

/// Exact weighted MLE for Gaussian, log-normal, exponential, Poisson,
/// Rayleigh, uniform and Pareto emissions.
pub fn fit_closed_form(family: Family, sample: &WeightedSample<'_>) -> Result<Fitted> {
    if !(sample.total() > 0.0) {
        return Err(Error::domain("fit requires positive total weight"));
    }
    match family {
        Family::Gaussian => {
            sample.require(f64::is_finite, "finite reals")?;
            let mu = sample.mean();
            let (sigma, hit) = floored(sample.variance().sqrt());
            Ok(with_floor(Emission::Gaussian { mu, sigma }, hit))
        }
        Family::LogNormal => {
            sample.require(|y| y > 0.0 && y.is_finite(), "y > 0")?;
            let mu = sample.weighted_mean_of(f64::ln);
            let var = sample.weighted_mean_of(|y| (y.ln() - mu).powi(2));
            let (sigma, hit) = floored(var.sqrt());
            Ok(with_floor(Emission::LogNormal { mu, sigma }, hit))
        }
        Family::Exponential => {
            sample.require(|y| y >= 0.0 && y.is_finite(), "y >= 0")?;
            let mean = sample.mean();
            if mean <= 0.0 {
                return Err(Error::domain("exponential fit of all-zero data"));
            }
            Ok(Fitted::exact(Emission::Exponential { rate: 1.0 / mean }))
        }
        Family::Poisson => {
            sample.require(super::is_count, "non-negative integers")?;
            let mean = sample.mean();
            if mean <= 0.0 {
                return Err(Error::domain("poisson fit of all-zero data"));
            }
            Ok(Fitted::exact(Emission::Poisson { rate: mean }))
        }
        Family::Rayleigh => {
            sample.require(|y| y > 0.0 && y.is_finite(), "y > 0")?;
            let s2 = 0.5 * sample.weighted_mean_of(|y| y * y);
            let (sigma, hit) = floored(s2.sqrt());
            Ok(with_floor(Emission::Rayleigh { sigma }, hit))
        }
        Family::Uniform => {
            // range over every observation, weighted or not
            let obs = sample.observations();
            if obs.iter().any(|y| !y.is_finite()) {
                return Err(Error::domain("uniform fit of non-finite data"));
            }
            let low = obs.iter().copied().fold(f64::INFINITY, f64::min);
            let high = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(low < high) {
                return Err(Error::domain("uniform fit needs at least two distinct values"));
            }
            Ok(Fitted::exact(Emission::Uniform { low, high }))
        }
        Family::Pareto => {
            sample.require(|y| y > 0.0 && y.is_finite(), "y > 0")?;
            let scale = sample.pairs().map(|(y, _)| y).fold(f64::INFINITY, f64::min);
            let denom: f64 = sample.pairs().map(|(y, w)| w * (y / scale).ln()).sum();
            if !(denom > 0.0) {
                return Err(Error::domain("pareto fit needs at least two distinct values"));
            }
            Ok(Fitted::exact(Emission::Pareto {
                scale,
                shape: sample.total() / denom,
            }))
        }
        Family::Categorical => {
            let m = sample.max_positive_weight_obs().map_or(1, |y| y as usize + 1);
            fit_categorical(sample, m)
        }
        other => Err(Error::Usage(format!("{other} has no closed-form fit"))),
    }
}

/// `p̂_k = N⁻¹ Σ w 1[y = k]` over `categories` symbols.
pub fn fit_categorical(sample: &WeightedSample<'_>, categories: usize) -> Result<Fitted> {
    if !(sample.total() > 0.0) {
        return Err(Error::domain("fit requires positive total weight"));
    }
    sample.require(
        |y| super::is_count(y) && (y as usize) < categories,
        &format!("integer codes in 0..{categories}"),
    )?;
    let mut probs = vec![0.0; categories];
    for (y, w) in sample.pairs() {
        probs[y as usize] += w;
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(Fitted::exact(Emission::Categorical { probs }))
}
