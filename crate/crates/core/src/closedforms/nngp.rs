//! Geometry of the NNGP kernel of a shallow network with Gaussian parameters.
//!
//! The metric is a projection, `g = e^Ω[δ + 2Ω′ x xᵀ]`, with eigenvalue e^Ω
//! on the sphere directions and `e^Ω(1 + 2‖x‖²Ω′)` radially. Ricci values
//! use the Levi-Civita normalization checked in `geometry`.

use std::f64::consts::PI;

use super::hypergeom::hyp2f1_terminating;
use super::omega::{omega_profile, GaussPrior, OmegaProfile};
use crate::activation::{odd_double_factorial, ActivationKind};
use crate::error::{Error, Result};
use crate::geometry::MetricTensor;
use crate::linalg::DenseMatrix;

/// NNGP metric with its analytic derivative stack.
pub fn nngp_metric(kind: ActivationKind, prior: &GaussPrior, x: &[f64]) -> Result<MetricTensor> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let p = omega_profile(kind, prior, r2)?;
    Ok(projection_metric(&p, x))
}

pub(crate) fn projection_metric(p: &OmegaProfile, x: &[f64]) -> MetricTensor {
    let d = x.len();
    let e = p.exp_omega;
    let g = DenseMatrix::from_fn(d, d, |m, n| {
        e * (f64::from(u8::from(m == n)) + 2.0 * p.omega1 * x[m] * x[n])
    });
    let cubic = 4.0 * (p.omega1 * p.omega1 + p.omega2);
    let dg = (0..d)
        .map(|a| {
            DenseMatrix::from_fn(d, d, |m, n| {
                let delta = |i: usize, j: usize| f64::from(u8::from(i == j));
                e * (2.0 * p.omega1 * (x[a] * delta(m, n) + delta(a, m) * x[n] + delta(a, n) * x[m])
                    + cubic * x[a] * x[m] * x[n])
            })
        })
        .collect();
    MetricTensor { g, dg: Some(dg) }
}

/// Ricci scalar of a projection metric in dimension d:
/// `R = −(d−1) e^{−Ω} ‖x‖² [(d+2)Ω′² + 2‖x‖²((d−2)Ω′³ + 2Ω′Ω″)] / (1 + 2‖x‖²Ω′)²`.
pub fn spherical_ricci(p: &OmegaProfile, d: usize, x_norm2: f64) -> f64 {
    let d = d as f64;
    let (w1, w2) = (p.omega1, p.omega2);
    let bracket = (d + 2.0) * w1 * w1 + 2.0 * x_norm2 * ((d - 2.0) * w1 * w1 * w1 + 2.0 * w1 * w2);
    let radial = 1.0 + 2.0 * x_norm2 * w1;
    -(d - 1.0) * x_norm2 * bracket / (p.exp_omega * radial * radial)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NngpGeometry {
    pub sqrt_det_g: f64,
    pub ricci: f64,
    /// Set when R diverges (monomial, ζ = 0, ‖x‖ = 0, d > 2); `ricci` is −∞.
    pub divergent: bool,
}

/// Closed-form `√det g` and Ricci scalar for erf and monomial activations.
pub fn nngp_geometry(kind: ActivationKind, prior: &GaussPrior, d: usize, x_norm: f64) -> Result<NngpGeometry> {
    prior.validate()?;
    if d == 0 {
        return Err(Error::contract("input dimension must be positive"));
    }
    if !(x_norm >= 0.0) {
        return Err(Error::contract(format!("‖x‖ must be ≥ 0, got {x_norm}")));
    }
    let (sig2, zeta2) = (prior.sigma2, prior.zeta2);
    let r2 = x_norm * x_norm;
    let s = prior.variance(r2);
    let df = d as f64;
    match kind {
        ActivationKind::Erf => {
            let t = 1.0 + 2.0 * s;
            let sqrt_det_g = (2.0 * sig2 / PI).powf(df / 2.0) * (2.0 * zeta2 + 1.0).sqrt() / t.powf((df + 2.0) / 4.0);
            let ricci = -PI * (df - 1.0) * (df + 2.0) * sig2 * r2 / (2.0 * (2.0 * zeta2 + 1.0) * t.sqrt());
            Ok(NngpGeometry {
                sqrt_det_g,
                ricci,
                divergent: false,
            })
        }
        _ => {
            let q = kind
                .monomial_degree()
                .ok_or_else(|| Error::Unsupported(format!("no NNGP closed form for {kind}")))?;
            kind.validate()?;
            Ok(monomial_geometry(q, sig2, zeta2, df, r2))
        }
    }
}

fn monomial_geometry(q: u32, sig2: f64, zeta2: f64, d: f64, r2: f64) -> NngpGeometry {
    let qf = f64::from(q);
    let u = sig2 * r2;
    let s = u + zeta2;
    let k = 2.0 * qf - 1.0;
    if q == 1 {
        return NngpGeometry {
            sqrt_det_g: sig2.powf(d / 2.0),
            ricci: 0.0,
            divergent: false,
        };
    }
    if zeta2 == 0.0 {
        let sqrt_det_g =
            qf.powf(d) * k.powf((1.0 - d) / 2.0) * sig2.powf(d * qf / 2.0) * r2.sqrt().powf((qf - 1.0) * d);
        let flat = d <= 2.0;
        if flat {
            return NngpGeometry {
                sqrt_det_g,
                ricci: 0.0,
                divergent: false,
            };
        }
        if u == 0.0 {
            return NngpGeometry {
                sqrt_det_g,
                ricci: f64::NEG_INFINITY,
                divergent: true,
            };
        }
        let ricci = -(d - 1.0) * (d - 2.0) * (qf - 1.0).powi(2) / (qf * qf * u.powi(q as i32));
        return NngpGeometry {
            sqrt_det_g,
            ricci,
            divergent: false,
        };
    }
    let sqrt_det_g =
        (1.0 + 2.0 * (qf - 1.0) * u / s).sqrt() * (qf * qf * sig2 * s.powi(q as i32 - 1) / k).powf(d / 2.0);
    let denom = k * u + zeta2;
    let ricci = -(d - 1.0) * (qf - 1.0).powi(2) * k * u * ((d + 2.0) * zeta2 + (d - 2.0) * k * u)
        / (qf * qf * s.powi(q as i32) * denom * denom);
    NngpGeometry {
        sqrt_det_g,
        ricci,
        divergent: false,
    }
}

/// Value of `σ²‖x‖²` at which the d = 2 monomial NNGP Ricci scalar turns
/// from decreasing to increasing: the positive root of
/// `(2q²+q−1)C² + (3q−2)ζ²C − ζ⁴ = 0`.
pub fn monomial_ricci_threshold(q: u32, zeta2: f64) -> Result<f64> {
    if q < 2 {
        return Err(Error::contract(format!("threshold needs q ≥ 2, got {q}")));
    }
    if !(zeta2 > 0.0) {
        return Err(Error::contract("threshold needs ζ² > 0"));
    }
    let qf = f64::from(q);
    Ok(((17.0 * qf * qf - 8.0 * qf).sqrt() - 3.0 * qf + 2.0) / (2.0 * (2.0 * qf * qf + qf - 1.0)) * zeta2)
}

/// `E[u^q v^q]` for standard normals with correlation ρ.
pub fn monomial_moment(q: u32, rho: f64) -> Result<f64> {
    let l = i64::from(q / 2);
    let r2 = rho * rho;
    if q.is_multiple_of(2) {
        let c = odd_double_factorial(q / 2);
        Ok(c * c * hyp2f1_terminating(-l, -l as f64, 0.5, r2)?)
    } else {
        let c = odd_double_factorial(q / 2 + 1);
        Ok(c * c * rho * hyp2f1_terminating(-l, -l as f64, 1.5, r2)?)
    }
}

/// NNGP kernel of the normalized monomial `x^q/√((2q−1)!!)`.
pub fn monomial_nngp_kernel(q: u32, prior: &GaussPrior, x: &[f64], y: &[f64]) -> Result<f64> {
    ActivationKind::Monomial(q).validate()?;
    prior.validate()?;
    if x.len() != y.len() {
        return Err(Error::dim("kernel arguments", x.len(), y.len()));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let sx = prior.variance(dot(x, x));
    let sy = prior.variance(dot(y, y));
    let cross = prior.sigma2 * dot(x, y) + prior.zeta2;
    let norm = (sx * sy).sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut rho = cross / norm;
    if rho.abs() > 1.0 {
        if rho.abs() - 1.0 > 1e-12 {
            log::warn!("kernel correlation {rho} outside [−1, 1]; clamping");
        }
        rho = rho.clamp(-1.0, 1.0);
    }
    Ok(norm.powi(q as i32) * monomial_moment(q, rho)? / odd_double_factorial(q))
}
