//! Metric induced by the infinite-width NTK of a shallow network,
//! `g = ω δ + 2[ω′ − σ²ξ²E[φ″²]] x xᵀ` with
//! `ω = (σ²+ξ²)E[φ′²] + σ²ξ²E[φ″²](1+‖x‖²)`.

use super::omega::{gaussian_moments, GaussPrior};
use crate::activation::ActivationKind;
use crate::error::Result;
use crate::geometry::MetricTensor;
use crate::linalg::DenseMatrix;

pub fn ntk_metric(kind: ActivationKind, prior: &GaussPrior, x: &[f64]) -> Result<MetricTensor> {
    prior.validate()?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let s = prior.variance(r2);
    let m = gaussian_moments(kind, s)?;
    let (sig2, xi2) = (prior.sigma2, prior.xi2);
    let omega = (sig2 + xi2) * m.a + sig2 * xi2 * m.b * (1.0 + r2);
    // dω/d‖x‖², with ds/d‖x‖² = σ².
    let omega1 = sig2 * ((sig2 + xi2) * m.a1 + sig2 * xi2 * m.b1 * (1.0 + r2)) + sig2 * xi2 * m.b;
    let radial = 2.0 * (omega1 - sig2 * xi2 * m.b);
    let d = x.len();
    let g = DenseMatrix::from_fn(d, d, |i, j| omega * f64::from(u8::from(i == j)) + radial * x[i] * x[j]);
    Ok(MetricTensor { g, dg: None })
}
