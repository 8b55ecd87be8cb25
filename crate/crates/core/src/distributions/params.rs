//! Flat `name → number` parameter records, the on-disk form of an emission.

use super::{Emission, Family};
use crate::error::{Error, Result};

/// Parameters in canonical order.
pub type ParamRecord = Vec<(String, f64)>;

fn record<const N: usize>(pairs: [(&str, f64); N]) -> ParamRecord {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn lookup(rec: &[(String, f64)], key: &str) -> Result<f64> {
    rec.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::validation(key, "missing parameter"))
}

impl Emission {
    /// Serialize to a parameter record. Categorical probabilities are keyed
    /// `p0, p1, …`.
    pub fn params(&self) -> ParamRecord {
        match *self {
            Emission::Gaussian { mu, sigma } | Emission::LogNormal { mu, sigma } => {
                record([("mu", mu), ("sigma", sigma)])
            }
            Emission::Exponential { rate } | Emission::Poisson { rate } => record([("lambda", rate)]),
            Emission::Rayleigh { sigma } => record([("sigma", sigma)]),
            Emission::Uniform { low, high } => record([("a", low), ("b", high)]),
            Emission::Categorical { ref probs } => {
                probs.iter().enumerate().map(|(k, &p)| (format!("p{k}"), p)).collect()
            }
            Emission::VonMises { mu, kappa } => record([("mu", mu), ("kappa", kappa)]),
            Emission::Gamma { shape, rate } => record([("alpha", shape), ("beta", rate)]),
            Emission::Beta { alpha, beta } => record([("alpha", alpha), ("beta", beta)]),
            Emission::Weibull { shape, scale } => record([("k", shape), ("lambda", scale)]),
            Emission::NegativeBinomial { r, p } => record([("r", r), ("p", p)]),
            Emission::ChiSquared { dof } => record([("nu", dof)]),
            Emission::Pareto { scale, shape } => record([("xm", scale), ("alpha", shape)]),
            Emission::StudentT { mu, sigma, nu } => record([("mu", mu), ("sigma", sigma), ("nu", nu)]),
        }
    }

    /// Rebuild and validate an emission from a parameter record. Keys the
    /// family does not use are ignored.
    pub fn from_params(family: Family, rec: &[(String, f64)]) -> Result<Emission> {
        let get = |key: &str| lookup(rec, key);
        let dist = match family {
            Family::Gaussian => Emission::Gaussian {
                mu: get("mu")?,
                sigma: get("sigma")?,
            },
            Family::LogNormal => Emission::LogNormal {
                mu: get("mu")?,
                sigma: get("sigma")?,
            },
            Family::Exponential => Emission::Exponential { rate: get("lambda")? },
            Family::Poisson => Emission::Poisson { rate: get("lambda")? },
            Family::Rayleigh => Emission::Rayleigh { sigma: get("sigma")? },
            Family::Uniform => Emission::Uniform {
                low: get("a")?,
                high: get("b")?,
            },
            Family::Categorical => {
                let count = rec
                    .iter()
                    .filter_map(|(k, _)| k.strip_prefix('p')?.parse::<usize>().ok())
                    .map(|i| i + 1)
                    .max()
                    .unwrap_or(0);
                let probs = (0..count.max(1))
                    .map(|k| get(&format!("p{k}")))
                    .collect::<Result<Vec<_>>>()?;
                Emission::Categorical { probs }
            }
            Family::VonMises => Emission::VonMises {
                mu: get("mu")?,
                kappa: get("kappa")?,
            },
            Family::Gamma => Emission::Gamma {
                shape: get("alpha")?,
                rate: get("beta")?,
            },
            Family::Beta => Emission::Beta {
                alpha: get("alpha")?,
                beta: get("beta")?,
            },
            Family::Weibull => Emission::Weibull {
                shape: get("k")?,
                scale: get("lambda")?,
            },
            Family::NegativeBinomial => Emission::NegativeBinomial {
                r: get("r")?,
                p: get("p")?,
            },
            Family::ChiSquared => Emission::ChiSquared { dof: get("nu")? },
            Family::Pareto => Emission::Pareto {
                scale: get("xm")?,
                shape: get("alpha")?,
            },
            Family::StudentT => Emission::StudentT {
                mu: get("mu")?,
                sigma: get("sigma")?,
                nu: get("nu")?,
            },
        };
        dist.validate()?;
        Ok(dist)
    }
}
