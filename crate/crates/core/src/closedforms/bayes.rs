//! Leading finite-width correction to the volume element of a shallow
//! Bayesian network with monomial activation, conditioned on one example.

use super::hypergeom::hyp2f1_terminating;
use crate::activation::MAX_MONOMIAL_DEGREE;
use crate::error::{Error, Result};

/// `χ(ρ²) = [d + 2(2q−1)]·₂F₁(1−q, −q; ½; ρ²) − 2(q−1)·₂F₁(−q, −q; ½; ρ²)`.
pub fn chi_factor(q: u32, d: usize, rho: f64) -> Result<f64> {
    if q == 0 || q > MAX_MONOMIAL_DEGREE {
        return Err(Error::contract(format!(
            "q must lie in 1..={MAX_MONOMIAL_DEGREE}, got {q}"
        )));
    }
    if d == 0 {
        return Err(Error::contract("input dimension must be positive"));
    }
    if !(rho.abs() <= 1.0) {
        return Err(Error::contract(format!("ρ must lie in [−1, 1], got {rho}")));
    }
    let qi = i64::from(q);
    let qf = f64::from(q);
    let r2 = rho * rho;
    let lead = d as f64 + 2.0 * (2.0 * qf - 1.0);
    Ok(lead * hyp2f1_terminating(1 - qi, -qf, 0.5, r2)? - 2.0 * (qf - 1.0) * hyp2f1_terminating(-qi, -qf, 0.5, r2)?)
}

/// `1 + (1/(4n))·(y_a²/‖x_a‖^{2q} − 1)·(χ(ρ²) − d)`.
pub fn bayes_volume_ratio(q: u32, d: usize, rho: f64, y_a: f64, x_a_norm: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::contract("width must be positive"));
    }
    if !(x_a_norm > 0.0) {
        return Err(Error::contract(format!("‖x_a‖ must be positive, got {x_a_norm}")));
    }
    let chi = chi_factor(q, d, rho)?;
    let prefactor = y_a * y_a / x_a_norm.powi(2 * q as i32) - 1.0;
    Ok(1.0 + prefactor * (chi - d as f64) / (4.0 * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::{double_factorial, odd_double_factorial};

    /// Sum over all perfect matchings of `labels`, each weighted by ρ to the
    /// number of pairs joining different variables.
    fn wick(labels: &mut Vec<u8>, rho: f64) -> f64 {
        if labels.is_empty() {
            return 1.0;
        }
        let first = labels.remove(0);
        let mut total = 0.0;
        for i in 0..labels.len() {
            let partner = labels.remove(i);
            let w = if partner == first { 1.0 } else { rho };
            total += w * wick(labels, rho);
            labels.insert(i, partner);
        }
        labels.insert(0, first);
        total
    }

    fn joint_moment(p: usize, m: usize, rho: f64) -> f64 {
        let mut labels = vec![0u8; p];
        labels.extend(std::iter::repeat_n(1u8, m));
        wick(&mut labels, rho)
    }

    fn chi_oracle(q: u32, d: usize, rho: f64) -> f64 {
        let qs = q as usize;
        let norm = odd_double_factorial(q).powi(2);
        let qf = f64::from(q);
        (2.0 * qf - 1.0) * (d as f64 + 2.0 * (2.0 * qf - 1.0)) * joint_moment(2 * qs, 2 * qs - 2, rho) / norm
            - 2.0 * (qf - 1.0) * joint_moment(2 * qs, 2 * qs, rho) / norm
    }

    #[test]
    fn wick_sanity() {
        assert_eq!(joint_moment(4, 0, 0.3), 3.0);
        let r: f64 = 0.4;
        assert!((joint_moment(2, 2, r) - (1.0 + 2.0 * r * r)).abs() < 1e-15);
    }

    #[test]
    fn chi_at_zero_correlation() {
        for q in 1..=MAX_MONOMIAL_DEGREE {
            for d in 1..=10 {
                assert_eq!(chi_factor(q, d, 0.0).unwrap(), (d + 2 * q as usize) as f64);
            }
        }
    }

    #[test]
    fn chi_at_unit_correlation() {
        for q in 1..=6u32 {
            for d in 1..=10usize {
                let qf = f64::from(q);
                let closed = double_factorial(4 * q - 3) / odd_double_factorial(q).powi(2)
                    * ((2.0 * qf - 1.0) * d as f64 + 2.0 * qf);
                let v = chi_factor(q, d, 1.0).unwrap();
                assert!((v - closed).abs() <= 1e-12 * closed, "q={q} d={d}");
            }
        }
        assert!((chi_factor(2, 2, 1.0).unwrap() - 50.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn chi_matches_wick_pairing() {
        for q in 1..=3 {
            for d in [1, 2, 5] {
                for rho in [-1.0, -0.6, 0.0, 0.25, 0.9, 1.0] {
                    let a = chi_factor(q, d, rho).unwrap();
                    let b = chi_oracle(q, d, rho);
                    assert!((a - b).abs() <= 1e-12 * b.abs(), "q={q} d={d} ρ={rho}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn quadratic_expansion() {
        // At q = 2 the hypergeometric form expands to 4 + 4(d+2)ρ² − (16/3)ρ⁴;
        // the +(16/3)ρ⁴ variant disagrees with the unit-argument value.
        for d in 1..=6 {
            for rho in [0.0, 0.3, 0.7, 1.0] {
                let r2: f64 = rho * rho;
                let expansion = 4.0 + 4.0 * (d as f64 + 2.0) * r2 - 16.0 / 3.0 * r2 * r2;
                let flipped = 4.0 + 4.0 * (d as f64 + 2.0) * r2 + 16.0 / 3.0 * r2 * r2;
                let v = chi_factor(2, d, rho).unwrap() - d as f64;
                assert!((v - expansion).abs() < 1e-12);
                if rho != 0.0 {
                    assert!((v - flipped).abs() > 1e-3);
                }
            }
        }
    }

    #[test]
    fn linear_case_is_constant() {
        for rho in [-1.0, 0.2, 0.8] {
            assert!((chi_factor(1, 4, rho).unwrap() - 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn chi_positive_and_non_decreasing() {
        for q in 1..=6 {
            for d in 1..=10 {
                let mut last = f64::NEG_INFINITY;
                for k in 0..=100 {
                    let rho = f64::from(k) / 100.0;
                    let v = chi_factor(q, d, rho).unwrap();
                    assert!(v - d as f64 > 0.0);
                    if q > 1 {
                        assert!(v >= last - 1e-12);
                    }
                    last = v;
                }
            }
        }
    }

    #[test]
    fn xor_contraction() {
        let r = bayes_volume_ratio(2, 2, 1.0, 0.0, 2f64.sqrt(), 100).unwrap();
        assert!((r - (1.0 - 44.0 / 1200.0)).abs() < 1e-12);
        assert!((r - 0.963_333_333_333).abs() < 1e-9);
        for k in -100..=100 {
            let rho = f64::from(k) / 100.0;
            let v = bayes_volume_ratio(2, 2, rho, 0.0, 2f64.sqrt(), 100).unwrap();
            assert!(v < 1.0 && v >= r - 1e-15);
        }
    }

    #[test]
    fn fitted_target_gives_no_correction() {
        let x: f64 = 2.0;
        let y = x.powi(3);
        assert_eq!(bayes_volume_ratio(3, 4, 0.4, y, x, 50).unwrap(), 1.0);
    }

    #[test]
    fn correction_sign_follows_target_size() {
        let x = 1.2f64;
        let big = bayes_volume_ratio(2, 3, 0.5, 3.0, x, 10).unwrap();
        let small = bayes_volume_ratio(2, 3, 0.5, 0.1, x, 10).unwrap();
        assert!(big > 1.0 && small < 1.0);
    }
}
