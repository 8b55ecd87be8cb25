//! Scalar special functions and log-domain primitives.
//!
//! Probabilities throughout the crate are carried as natural logarithms, with
//! `f64::NEG_INFINITY` standing for probability zero. The checked entry points
//! here return `Result` for arguments outside their domain; the `pub(crate)`
//! variants skip the check for callers that have already established it.

use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// Godfrey's Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

// Below this the polygamma functions are shifted upward by recurrence
// before the asymptotic series is applied.
const ASYMPTOTIC_MIN: f64 = 10.0;

/// `ln(exp(a) + exp(b))` without overflow; either side may be `-inf`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted log-sum-exp. An all `-inf` input yields `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Usage("log_sum_exp of an empty list".into()));
    }
    Ok(lse(xs))
}

#[inline]
pub(crate) fn lse(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} requires x > 0, got {x}")))
    }
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    Ok(ln_gamma(x))
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum away from its pole.
        return ln_gamma(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Digamma ψ(x) for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(psi(x))
}

pub(crate) fn psi(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_MIN {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let f = 1.0 / (x * x);
    let series = f * (1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f * (1.0 / 132.0)))));
    acc + x.ln() - 0.5 / x - series
}

/// Trigamma ψ′(x) for `x > 0`. Always positive.
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive("trigamma", x)?;
    Ok(psi1(x))
}

pub(crate) fn psi1(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_MIN {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let z = 1.0 / x;
    let f = z * z;
    // 1/x + 1/2x² + Σ B_2k / x^(2k+1)
    let series = z
        * (1.0 + z * 0.5 + f * (1.0 / 6.0 - f * (1.0 / 30.0 - f * (1.0 / 42.0 - f * (1.0 / 30.0 - f * (5.0 / 66.0))))));
    acc + series
}

fn check_nonnegative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} requires x >= 0, got {x}")))
    }
}

// Abramowitz & Stegun 9.8.1 - 9.8.4. The small-argument branch is a
// polynomial in (x/3.75)²; the large branch gives sqrt(x)·e^(-x)·I(x) as a
// polynomial in 3.75/x.
const BESSEL_SPLIT: f64 = 3.75;

const I0_SMALL: [f64; 7] = [
    1.0,
    3.515_622_9,
    3.089_942_4,
    1.206_749_2,
    0.265_973_2,
    0.036_076_8,
    0.004_581_3,
];
const I0_LARGE: [f64; 9] = [
    0.398_942_28,
    0.013_285_92,
    0.002_253_19,
    -0.001_575_65,
    0.009_162_81,
    -0.020_577_06,
    0.026_355_37,
    -0.016_476_33,
    0.003_923_77,
];
const I1_SMALL: [f64; 7] = [
    0.5,
    0.878_905_94,
    0.514_988_69,
    0.150_849_34,
    0.026_587_33,
    0.003_015_32,
    0.000_324_11,
];
const I1_LARGE: [f64; 9] = [
    0.398_942_28,
    -0.039_880_24,
    -0.003_620_18,
    0.001_638_01,
    -0.010_315_55,
    0.022_829_67,
    -0.028_953_12,
    0.017_876_54,
    -0.004_200_59,
];

#[inline]
fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `e^(-x) I₀(x)`, finite for every `x >= 0`.
pub(crate) fn i0_scaled(x: f64) -> f64 {
    if x < BESSEL_SPLIT {
        let t = x / BESSEL_SPLIT;
        horner(&I0_SMALL, t * t) * (-x).exp()
    } else {
        horner(&I0_LARGE, BESSEL_SPLIT / x) / x.sqrt()
    }
}

/// `e^(-x) I₁(x)`.
pub(crate) fn i1_scaled(x: f64) -> f64 {
    if x < BESSEL_SPLIT {
        let t = x / BESSEL_SPLIT;
        x * horner(&I1_SMALL, t * t) * (-x).exp()
    } else {
        horner(&I1_LARGE, BESSEL_SPLIT / x) / x.sqrt()
    }
}

/// Modified Bessel function of the first kind, order 0.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_nonnegative("bessel_i0", x)?;
    if x < BESSEL_SPLIT {
        let t = x / BESSEL_SPLIT;
        Ok(horner(&I0_SMALL, t * t))
    } else {
        Ok(i0_scaled(x) * x.exp())
    }
}

/// Modified Bessel function of the first kind, order 1.
pub fn bessel_i1(x: f64) -> Result<f64> {
    check_nonnegative("bessel_i1", x)?;
    if x < BESSEL_SPLIT {
        let t = x / BESSEL_SPLIT;
        Ok(x * horner(&I1_SMALL, t * t))
    } else {
        Ok(i1_scaled(x) * x.exp())
    }
}

/// `ln I₀(x)` without overflow for large `x`.
pub(crate) fn ln_i0(x: f64) -> f64 {
    if x < BESSEL_SPLIT {
        let t = x / BESSEL_SPLIT;
        horner(&I0_SMALL, t * t).ln()
    } else {
        x + (horner(&I0_LARGE, BESSEL_SPLIT / x) / x.sqrt()).ln()
    }
}

/// `A(κ) = I₁(κ) / I₀(κ)`, the mean resultant length of a von Mises
/// distribution with concentration κ.
pub fn bessel_ratio(kappa: f64) -> Result<f64> {
    check_nonnegative("bessel_ratio", kappa)?;
    Ok(bessel_a(kappa))
}

pub(crate) fn bessel_a(kappa: f64) -> f64 {
    if kappa < BESSEL_SPLIT {
        let t = kappa / BESSEL_SPLIT;
        let u = t * t;
        kappa * horner(&I1_SMALL, u) / horner(&I0_SMALL, u)
    } else {
        let u = BESSEL_SPLIT / kappa;
        horner(&I1_LARGE, u) / horner(&I0_LARGE, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    const EULER: f64 = 0.577_215_664_901_532_9;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Oracle: ln Γ by Stirling's series after shifting the argument past 30,
    // independent of the Lanczos sum.
    fn ln_gamma_oracle(x: f64) -> f64 {
        let mut shift = 0.0;
        let mut z = x;
        while z < 30.0 {
            shift += z.ln();
            z += 1.0;
        }
        let z2 = z * z;
        let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z2 * z2 * z)
            - 1.0 / (1680.0 * z2 * z2 * z2 * z);
        (z - 0.5) * z.ln() - z + HALF_LN_2PI + series - shift
    }

    // Oracle: ψ and ψ′ by direct partial sums of their defining series,
    // with an integral tail correction.
    fn digamma_oracle(x: f64) -> f64 {
        let n = 200_000usize;
        let mut s = -EULER;
        for k in 0..n {
            let k = k as f64;
            s += 1.0 / (k + 1.0) - 1.0 / (k + x);
        }
        // tail Σ_{k>=n} [1/(k+1) - 1/(k+x)] ≈ ln((n+x-0.5)/(n+0.5))
        let n = n as f64;
        s + ((n + x - 0.5) / (n + 0.5)).ln()
    }

    fn trigamma_oracle(x: f64) -> f64 {
        let n = 200_000usize;
        let mut s = 0.0;
        for k in 0..n {
            let t = k as f64 + x;
            s += 1.0 / (t * t);
        }
        s + 1.0 / (n as f64 + x - 0.5)
    }

    fn bessel_series(x: f64, order: u32) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(order as i32);
        for k in 1..=order {
            term /= k as f64;
        }
        let mut sum = term;
        for k in 1..200 {
            let k = k as f64;
            term *= half * half / (k * (k + order as f64));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    #[test]
    fn lse_examples() {
        assert!(close(log_sum_exp(&[0.0, 0.0]).unwrap(), LN_2, 1e-15));
        assert!(close(log_sum_exp(&[-1000.0, -1000.0]).unwrap(), -1000.0 + LN_2, 1e-12));
        assert_eq!(log_sum_exp(&[3.25]).unwrap(), 3.25);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(matches!(log_sum_exp(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn lse_ignores_neg_infinity_entries() {
        let with = [f64::NEG_INFINITY, 1.0, f64::NEG_INFINITY, -2.0];
        let without = [1.0, -2.0];
        assert_eq!(lse(&with), lse(&without));
        assert_eq!(log_add(f64::NEG_INFINITY, 4.0), 4.0);
        assert!(close(log_add(1.0, -2.0), lse(&without), 1e-15));
    }

    #[test]
    fn log_gamma_examples() {
        assert!(close(log_gamma(1.0).unwrap(), 0.0, 1e-14));
        assert!(close(log_gamma(2.0).unwrap(), 0.0, 1e-14));
        assert!(close(log_gamma(5.0).unwrap(), 24f64.ln(), 1e-13));
        assert!(close(log_gamma(0.5).unwrap(), 0.5 * PI.ln(), 1e-14));
        assert!(close(ln_gamma_oracle(0.5), 0.5 * PI.ln(), 1e-13));
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn log_gamma_matches_stirling_oracle() {
        let mut x = 1e-3;
        while x < 1e6 {
            let got = ln_gamma(x);
            let want = ln_gamma_oracle(x);
            let tol = 1e-12 * want.abs().max(1.0);
            assert!(close(got, want, tol), "x={x} got={got} want={want}");
            x *= 1.37;
        }
    }

    #[test]
    fn digamma_examples() {
        assert!(close(digamma(1.0).unwrap(), -EULER, 1e-12));
        assert!(close(digamma(2.0).unwrap(), 1.0 - EULER, 1e-12));
        assert!(close(digamma_oracle(1.0), -EULER, 1e-9));
        let h = 1e-6;
        let fd = (ln_gamma(10.0 + h) - ln_gamma(10.0 - h)) / (2.0 * h);
        assert!(close(digamma(10.0).unwrap(), fd, 1e-5));
        assert!(digamma(0.0).is_err());
    }

    #[test]
    fn digamma_matches_series_oracle() {
        for &x in &[1e-3, 0.01, 0.3, 0.9, 1.7, 4.2, 9.99, 10.0, 33.0, 250.0] {
            let got = psi(x);
            let want = digamma_oracle(x);
            assert!(close(got, want, 1e-8), "x={x} got={got} want={want}");
        }
        // large arguments: ψ(x) ≈ ln x - 1/2x
        let x = 1e6;
        assert!(close(psi(x), x.ln() - 0.5 / x, 1e-12));
    }

    #[test]
    fn trigamma_examples() {
        let z2 = PI * PI / 6.0;
        assert!(close(trigamma(1.0).unwrap(), z2, 1e-10));
        assert!(close(trigamma(2.0).unwrap(), z2 - 1.0, 1e-10));
        assert!(close(trigamma_oracle(1.0), z2, 1e-9));
        let h = 1e-5;
        let fd = (psi(7.0 + h) - psi(7.0 - h)) / (2.0 * h);
        assert!(close(trigamma(7.0).unwrap(), fd, 1e-4));
        assert!(trigamma(-3.0).is_err());
    }

    #[test]
    fn trigamma_matches_series_oracle() {
        for &x in &[1e-3, 0.05, 0.5, 2.5, 9.5, 10.5, 77.0, 1e4] {
            let got = psi1(x);
            let want = trigamma_oracle(x);
            assert!(close(got, want, 1e-8 * want.max(1.0)), "x={x}");
            assert!(got > 0.0);
        }
    }

    #[test]
    fn polygamma_finite_differences() {
        let mut x: f64 = 0.1;
        while x <= 100.0 {
            let h = 1e-5 * x.max(1.0);
            let fd_psi = (ln_gamma(x + h) - ln_gamma(x - h)) / (2.0 * h);
            let fd_psi1 = (psi(x + h) - psi(x - h)) / (2.0 * h);
            assert!(close(psi(x), fd_psi, 1e-4), "psi at {x}");
            assert!(close(psi1(x), fd_psi1, 1e-4 * psi1(x).max(1.0)), "psi1 at {x}");
            x *= 1.5;
        }
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        assert_eq!(bessel_i1(0.0).unwrap(), 0.0);
        assert!(close(bessel_series(1.0, 0), 1.266_065_877_752_008_4, 1e-15));
        assert!(close(bessel_i0(1.0).unwrap(), 1.266_065_8, 1e-7));
        assert!(bessel_i0(-0.1).is_err());
        assert!(bessel_i1(-0.1).is_err());
    }

    #[test]
    fn bessel_matches_power_series() {
        let mut x = 0.0;
        while x < 40.0 {
            let i0 = bessel_series(x, 0);
            let i1 = bessel_series(x, 1);
            assert!(close(bessel_i0(x).unwrap() / i0, 1.0, 2e-7), "i0 at {x}");
            if x > 0.0 {
                assert!(close(bessel_i1(x).unwrap() / i1, 1.0, 2e-7), "i1 at {x}");
            }
            assert!(close(ln_i0(x), i0.ln(), 2e-7), "ln_i0 at {x}");
            x += 0.25;
        }
    }

    #[test]
    fn bessel_ratio_examples() {
        assert_eq!(bessel_ratio(0.0).unwrap(), 0.0);
        let oracle = bessel_series(1.0, 1) / bessel_series(1.0, 0);
        assert!(close(bessel_ratio(1.0).unwrap(), oracle, 1e-7));
        assert!(close(bessel_ratio(1.0).unwrap(), 0.4464, 1e-4));
        assert!(bessel_ratio(-1.0).is_err());
    }

    #[test]
    fn bessel_ratio_monotone_on_grid() {
        let mut prev = bessel_a(0.0);
        for i in 1..=100 {
            let k = 0.5 * i as f64;
            let a = bessel_a(k);
            assert!(a > prev, "not increasing at {k}");
            assert!(a < 1.0);
            prev = a;
        }
        assert!(bessel_a(1e5) > 0.9999);
    }

    proptest::proptest! {
        #[test]
        fn lse_shift_and_permutation(
            xs in proptest::collection::vec(-700.0f64..700.0, 1..12),
            c in -500.0f64..500.0,
        ) {
            let base = lse(&xs);
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            proptest::prop_assert!((lse(&shifted) - (base + c)).abs() <= 1e-12 * (base + c).abs().max(1.0));
            let mut rev = xs.clone();
            rev.reverse();
            proptest::prop_assert!((lse(&rev) - base).abs() <= 1e-12 * base.abs().max(1.0));
        }

        #[test]
        fn bessel_ratio_in_unit_interval(k in 0.0f64..1e5) {
            let a = bessel_a(k);
            proptest::prop_assert!((0.0..1.0).contains(&a));
        }
    }
}
