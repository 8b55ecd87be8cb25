mod common;

use loghmm::{backward_log, forward_log, posterior_decode, posteriors, viterbi, Emission, Error, HmmModel};
use proptest::prelude::*;
use rand::Rng;

fn random_case(seed: u64) -> (HmmModel, Vec<f64>) {
    let mut r = common::rng(seed);
    let k = r.random_range(2..=3);
    let t = r.random_range(1..=7);
    let discrete = r.random_bool(0.5);
    let emissions = (0..k)
        .map(|_| {
            if discrete {
                Emission::Categorical {
                    probs: common::random_stochastic(4, &mut r),
                }
            } else {
                Emission::Gaussian {
                    mu: r.random_range(-3.0..3.0),
                    sigma: r.random_range(0.3..3.0),
                }
            }
        })
        .collect();
    let model = common::random_model(k, emissions, &mut r);
    let (_, seq) = common::simulate(&model, t, &mut r);
    (model, seq)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_enumeration(seed in any::<u64>()) {
        let (model, seq) = random_case(seed);
        let oracle = common::enumerate_paths(&model, &seq);
        let fb = posteriors(&model, &seq, true).unwrap();
        prop_assert!((fb.log_likelihood - oracle.log_likelihood).abs() <= 1e-10);
        for (t, row) in oracle.gamma.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                prop_assert!((fb.gamma[(t, j)] - g).abs() <= 1e-10);
            }
        }
        let v = viterbi(&model, &seq).unwrap();
        prop_assert_eq!(&v.path, &oracle.best_path);
        prop_assert!((v.log_joint - oracle.best_log_joint).abs() <= 1e-10);
        prop_assert!(v.log_joint <= fb.log_likelihood + 1e-12);
    }

    #[test]
    fn xi_marginalises_to_gamma(seed in any::<u64>()) {
        let (model, seq) = random_case(seed);
        let fb = posteriors(&model, &seq, true).unwrap();
        let xi = fb.xi.as_ref().unwrap();
        let k = model.num_states();
        prop_assert_eq!(xi.len(), seq.len() - 1);
        for t in 0..xi.len() {
            for i in 0..k {
                let out: f64 = (0..k).map(|j| xi.get(t, i, j)).sum();
                let into: f64 = (0..k).map(|j| xi.get(t, j, i)).sum();
                prop_assert!((out - fb.gamma[(t, i)]).abs() <= 1e-10);
                prop_assert!((into - fb.gamma[(t + 1, i)]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn forward_backward_agree_at_every_t(seed in any::<u64>()) {
        let (model, seq) = random_case(seed);
        let f = forward_log(&model, &seq).unwrap();
        let b = backward_log(&model, &seq).unwrap();
        for t in 0..seq.len() {
            let terms: Vec<f64> = (0..model.num_states()).map(|j| f.log_alpha[(t, j)] + b[(t, j)]).collect();
            let ll = loghmm::math::log_sum_exp(&terms).unwrap();
            prop_assert!((ll - f.log_likelihood).abs() <= 1e-10);
        }
    }
}

#[test]
fn disjoint_support_decodes_construction() {
    let model = HmmModel::new(
        vec![0.5, 0.5],
        vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        vec![
            Emission::Uniform { low: 0.0, high: 1.0 },
            Emission::Uniform { low: 2.0, high: 3.0 },
        ],
    )
    .unwrap();
    let seq = [0.5, 2.5, 2.1, 0.2, 0.9, 2.9];
    let truth = vec![0, 1, 1, 0, 0, 1];
    assert_eq!(viterbi(&model, &seq).unwrap().path, truth);
    let fb = posteriors(&model, &seq, false).unwrap();
    assert_eq!(posterior_decode(&fb), truth);
    assert!(matches!(
        posteriors(&model, &[1.5], false),
        Err(Error::ImpossibleSequence)
    ));
    assert!(matches!(viterbi(&model, &[1.5]), Err(Error::NoFeasiblePath)));
}

#[test]
fn uniform_gamma_row_ties_to_state_zero() {
    let g = Emission::Gaussian { mu: 0.0, sigma: 1.0 };
    let model = HmmModel::new(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![g.clone(), g]).unwrap();
    let fb = posteriors(&model, &[0.3, -1.0], false).unwrap();
    assert_eq!(posterior_decode(&fb), vec![0, 0]);
    assert_eq!(viterbi(&model, &[0.3, -1.0]).unwrap().path, vec![0, 0]);
}
