//! Small embedded datasets and reference models.

use crate::distributions::Emission;
use crate::model::HmmModel;

/// Annual counts of major (magnitude ≥ 7) earthquakes worldwide, 1900–2006.
pub const EARTHQUAKES: [u32; 107] = [
    13, 14, 8, 10, 16, 26, 32, 27, 18, 32, 36, 24, 22, 23, 22, 18, 25, 21, 21, 14, 8, 11, 14, 23, 18, 17, 19, 20, 22,
    19, 13, 26, 13, 14, 22, 24, 21, 22, 26, 21, 23, 24, 27, 41, 31, 27, 35, 26, 28, 36, 39, 21, 17, 22, 17, 19, 15, 34,
    10, 15, 22, 18, 15, 20, 15, 22, 19, 16, 30, 27, 29, 23, 20, 16, 21, 21, 25, 16, 18, 15, 18, 14, 10, 15, 8, 15, 6,
    11, 8, 7, 18, 16, 13, 12, 13, 20, 15, 16, 12, 18, 15, 16, 13, 15, 16, 11, 11,
];

pub fn earthquakes() -> Vec<f64> {
    EARTHQUAKES.iter().map(|&c| f64::from(c)).collect()
}

/// The two-state "dishonest casino": a fair die and a loaded one that
/// shows a six half the time. Faces are coded 0–5.
pub fn dishonest_casino() -> HmmModel {
    let fair = vec![1.0 / 6.0; 6];
    let loaded = vec![0.1, 0.1, 0.1, 0.1, 0.1, 0.5];
    HmmModel::new(
        vec![0.5, 0.5],
        vec![vec![0.95, 0.05], vec![0.1, 0.9]],
        vec![
            Emission::Categorical { probs: fair },
            Emission::Categorical { probs: loaded },
        ],
    )
    .expect("casino model is valid")
}
