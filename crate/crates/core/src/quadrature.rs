//! Gaussian expectations `E_{z∼N(0,s)}[f(z)]`.
//!
//! Small variances use 64-node Gauss–Hermite. For wider Gaussians the
//! integrands of saturating activations are much narrower than the weight
//! (and tanh has poles at ±iπ/2), so a fixed Hermite rule loses accuracy and
//! the integral is taken in z-space with composite Gauss–Legendre panels.

use std::f64::consts::PI;
use std::sync::OnceLock;

pub const HERMITE_NODES: usize = 64;
const LEGENDRE_NODES: usize = 16;
const PANEL_WIDTH: f64 = 0.25;
const TAIL_SIGMAS: f64 = 12.0;
const HERMITE_MAX_VARIANCE: f64 = 0.25;

/// Nodes and weights for `E_{z∼N(0,1)}[f(z)] ≈ Σ wᵢ f(zᵢ)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Physicists' rule by Newton iteration on orthonormal Hermite functions,
    // then rescaled to the standard normal weight.
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let nodes = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let weights = w.iter().map(|v| v / PI.sqrt()).collect();
    (nodes, weights)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(HERMITE_NODES))
}

fn legendre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(LEGENDRE_NODES))
}

/// `E_{z∼N(0,s)}[f(z)]` for `s ≥ 0`.
pub fn gaussian_expectation(s: f64, f: impl Fn(f64) -> f64) -> f64 {
    debug_assert!(s >= 0.0);
    if s <= HERMITE_MAX_VARIANCE {
        let (nodes, weights) = hermite_rule();
        let sd = s.sqrt();
        return nodes.iter().zip(weights).map(|(u, w)| w * f(sd * u)).sum();
    }
    let (nodes, weights) = legendre_rule();
    let sd = s.sqrt();
    let half = TAIL_SIGMAS * sd;
    let panels = (2.0 * half / PANEL_WIDTH).ceil() as usize;
    let width = 2.0 * half / panels as f64;
    let norm = 1.0 / (2.0 * PI * s).sqrt();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = -half + (p as f64 + 0.5) * width;
        let mut panel = 0.0;
        for (t, w) in nodes.iter().zip(weights) {
            let z = mid + 0.5 * width * t;
            panel += w * f(z) * (-0.5 * z * z / s).exp();
        }
        total += panel * 0.5 * width;
    }
    total * norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(64);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-13);
        assert!((m2 - 1.0).abs() < 1e-13);
        assert!((m4 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn erf_slope_expectation_matches_closed_form() {
        for k in 0..=40 {
            let s = 0.5 * f64::from(k);
            let q = gaussian_expectation(s, |z| (2.0 / PI) * (-z * z).exp());
            let c = (2.0 / PI) / (1.0 + 2.0 * s).sqrt();
            assert!((q / c - 1.0).abs() < 1e-9, "s={s}: {q} vs {c}");
        }
    }

    #[test]
    fn tanh_slope_across_the_switch() {
        // E[sech⁴ z] is smooth in s; both rules must agree where they meet.
        let f = |z: f64| (1.0 / z.cosh()).powi(4);
        let below = gaussian_expectation(HERMITE_MAX_VARIANCE, f);
        let above = gaussian_expectation(HERMITE_MAX_VARIANCE * (1.0 + 1e-12), f);
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn wide_variance_polynomial_moments() {
        let s = 7.0;
        let m4 = gaussian_expectation(s, |z| z.powi(4));
        assert!((m4 / (3.0 * s * s) - 1.0).abs() < 1e-12);
    }
}
