#![allow(dead_code)]

use std::f64::consts::PI;

use loghmm::{Emission, Family, HmmModel};
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Exp, Gamma, LogNormal, Normal, Poisson, StudentT, Weibull};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Best & Fisher (1979) rejection sampler, result wrapped to (-π, π].
pub fn sample_von_mises(rng: &mut impl Rng, mu: f64, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return wrap(rng.random_range(-PI..PI));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) > u2 || (c / u2).ln() + 1.0 >= c {
            let u3: f64 = rng.random();
            let theta = if u3 > 0.5 { f.acos() } else { -f.acos() };
            return wrap(mu + theta);
        }
    }
}

pub fn wrap(x: f64) -> f64 {
    let mut y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

pub fn sample(e: &Emission, rng: &mut impl Rng) -> f64 {
    match *e {
        Emission::Gaussian { mu, sigma } => Normal::new(mu, sigma).unwrap().sample(rng),
        Emission::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).unwrap().sample(rng),
        Emission::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
        Emission::Poisson { rate } => Poisson::new(rate).unwrap().sample(rng),
        Emission::Rayleigh { sigma } => {
            let u: f64 = rng.random();
            sigma * (-2.0 * (1.0 - u).ln()).sqrt()
        }
        Emission::Uniform { low, high } => rng.random_range(low..high),
        Emission::Categorical { ref probs } => WeightedIndex::new(probs).unwrap().sample(rng) as f64,
        Emission::VonMises { mu, kappa } => sample_von_mises(rng, mu, kappa),
        Emission::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).unwrap().sample(rng),
        Emission::Beta { alpha, beta } => Beta::new(alpha, beta).unwrap().sample(rng),
        Emission::Weibull { shape, scale } => Weibull::new(scale, shape).unwrap().sample(rng),
        Emission::NegativeBinomial { r, p } => {
            let lambda = Gamma::new(r, (1.0 - p) / p).unwrap().sample(rng);
            if lambda <= 0.0 {
                0.0
            } else {
                Poisson::new(lambda).unwrap().sample(rng)
            }
        }
        Emission::ChiSquared { dof } => Gamma::new(0.5 * dof, 2.0).unwrap().sample(rng),
        Emission::Pareto { scale, shape } => {
            let u: f64 = rng.random();
            scale * (1.0 - u).powf(-1.0 / shape)
        }
        Emission::StudentT { mu, sigma, nu } => mu + sigma * StudentT::new(nu).unwrap().sample(rng),
    }
}

/// Draws a state path and observations of length `t`.
pub fn simulate(model: &HmmModel, t: usize, rng: &mut impl Rng) -> (Vec<usize>, Vec<f64>) {
    let mut states = Vec::with_capacity(t);
    let mut obs = Vec::with_capacity(t);
    let mut s = WeightedIndex::new(model.initial()).unwrap().sample(rng);
    for step in 0..t {
        if step > 0 {
            s = WeightedIndex::new(model.transitions().row(s)).unwrap().sample(rng);
        }
        states.push(s);
        obs.push(sample(&model.emissions()[s], rng));
    }
    (states, obs)
}

pub fn random_stochastic(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn random_model(k: usize, emissions: Vec<Emission>, rng: &mut impl Rng) -> HmmModel {
    let initial = random_stochastic(k, rng);
    let rows = (0..k).map(|_| random_stochastic(k, rng)).collect();
    HmmModel::new(initial, rows, emissions).unwrap()
}

/// Two well-separated emissions per family, used to generate EM test data.
pub fn two_state_truth(family: Family) -> [Emission; 2] {
    use Emission::*;
    match family {
        Family::Gaussian => [Gaussian { mu: 0.0, sigma: 1.0 }, Gaussian { mu: 4.0, sigma: 1.5 }],
        Family::LogNormal => [LogNormal { mu: 0.0, sigma: 0.5 }, LogNormal { mu: 2.0, sigma: 0.3 }],
        Family::Exponential => [Exponential { rate: 2.0 }, Exponential { rate: 0.2 }],
        Family::Poisson => [Poisson { rate: 2.0 }, Poisson { rate: 12.0 }],
        Family::Rayleigh => [Rayleigh { sigma: 0.5 }, Rayleigh { sigma: 4.0 }],
        Family::Uniform => [Uniform { low: 0.0, high: 2.0 }, Uniform { low: 1.0, high: 6.0 }],
        Family::Categorical => [
            Categorical {
                probs: vec![0.6, 0.3, 0.1],
            },
            Categorical {
                probs: vec![0.1, 0.2, 0.7],
            },
        ],
        Family::VonMises => [VonMises { mu: 0.5, kappa: 4.0 }, VonMises { mu: -2.5, kappa: 1.5 }],
        Family::Gamma => [Gamma { shape: 2.0, rate: 2.0 }, Gamma { shape: 9.0, rate: 1.0 }],
        Family::Beta => [Beta { alpha: 2.0, beta: 8.0 }, Beta { alpha: 6.0, beta: 2.0 }],
        Family::Weibull => [Weibull { shape: 1.5, scale: 1.0 }, Weibull { shape: 3.0, scale: 6.0 }],
        Family::NegativeBinomial => [NegativeBinomial { r: 3.0, p: 0.6 }, NegativeBinomial { r: 5.0, p: 0.2 }],
        Family::ChiSquared => [ChiSquared { dof: 2.0 }, ChiSquared { dof: 12.0 }],
        Family::Pareto => [Pareto { scale: 1.0, shape: 3.0 }, Pareto { scale: 1.0, shape: 0.8 }],
        Family::StudentT => [
            StudentT {
                mu: 0.0,
                sigma: 1.0,
                nu: 4.0,
            },
            StudentT {
                mu: 6.0,
                sigma: 2.0,
                nu: 8.0,
            },
        ],
    }
}

/// Exhaustive enumeration over all `K^T` state paths, in plain probability
/// space.
pub struct Enumeration {
    pub log_likelihood: f64,
    pub gamma: Vec<Vec<f64>>,
    pub best_path: Vec<usize>,
    pub best_log_joint: f64,
}

pub fn enumerate_paths(model: &HmmModel, seq: &[f64]) -> Enumeration {
    let k = model.num_states();
    let t = seq.len();
    let b: Vec<Vec<f64>> = seq
        .iter()
        .map(|&y| model.emissions().iter().map(|e| e.log_prob(y).unwrap().exp()).collect())
        .collect();
    let a = model.transitions();
    let mut total = 0.0;
    let mut gamma = vec![vec![0.0; k]; t];
    let mut joints = Vec::with_capacity(k.pow(t as u32));
    let mut path = vec![0usize; t];
    let count = k.pow(t as u32);
    for code in 0..count {
        // most significant digit first so codes run in lexicographic order
        let mut c = code;
        for pos in (0..t).rev() {
            path[pos] = c % k;
            c /= k;
        }
        let mut p = model.initial()[path[0]] * b[0][path[0]];
        for s in 1..t {
            p *= a[(path[s - 1], path[s])] * b[s][path[s]];
        }
        total += p;
        for (s, &q) in path.iter().enumerate() {
            gamma[s][q] += p;
        }
        joints.push((p.ln(), path.clone()));
    }
    // Viterbi backtracking with smallest-index ties picks, among the
    // (near-)tied maximisers, the one smallest when read from the last state
    let max = joints.iter().map(|j| j.0).fold(f64::NEG_INFINITY, f64::max);
    let floor = max - loghmm::inference::TIE_TOL * max.abs().max(1.0);
    let best = joints
        .into_iter()
        .filter(|j| j.0 >= floor)
        .min_by(|a, b| a.1.iter().rev().cmp(b.1.iter().rev()))
        .unwrap();
    for row in &mut gamma {
        row.iter_mut().for_each(|g| *g /= total);
    }
    Enumeration {
        log_likelihood: total.ln(),
        gamma,
        best_path: best.1,
        best_log_joint: best.0,
    }
}

/// Derivative-free Nelder-Mead maximisation of `f`, restarted from its own
/// optimum until the simplex stops moving.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], step: f64) -> Vec<f64> {
    let n = start.len();
    let neg = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };
    let mut best = start.to_vec();
    for _restart in 0..20 {
        let mut simplex: Vec<Vec<f64>> = vec![best.clone()];
        for i in 0..n {
            let mut p = best.clone();
            p[i] += if p[i].abs() > 1e-3 { step * p[i].abs() } else { step };
            simplex.push(p);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|p| neg(p)).collect();
        for _ in 0..5000 {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();
            let spread = (vals[n] - vals[0]).abs();
            let size = simplex
                .iter()
                .skip(1)
                .map(|p| {
                    p.iter()
                        .zip(&simplex[0])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread < 1e-15 && size < 1e-11 {
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|i| simplex[..n].iter().map(|p| p[i]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..n)
                    .map(|i| centroid[i] + t * (simplex[n][i] - centroid[i]))
                    .collect()
            };
            let xr = along(-1.0);
            let fr = neg(&xr);
            if fr < vals[0] {
                let xe = along(-2.0);
                let fe = neg(&xe);
                if fe < fr {
                    simplex[n] = xe;
                    vals[n] = fe;
                } else {
                    simplex[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                simplex[n] = xr;
                vals[n] = fr;
            } else {
                let xc = if fr < vals[n] { along(-0.5) } else { along(0.5) };
                let fc = neg(&xc);
                if fc < vals[n].min(fr) {
                    simplex[n] = xc;
                    vals[n] = fc;
                } else {
                    for i in 1..=n {
                        simplex[i] = (0..n)
                            .map(|d| simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]))
                            .collect();
                        vals[i] = neg(&simplex[i]);
                    }
                }
            }
        }
        let idx = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        let moved = simplex[idx]
            .iter()
            .zip(&best)
            .any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0));
        best = simplex[idx].clone();
        if !moved {
            break;
        }
    }
    best
}
