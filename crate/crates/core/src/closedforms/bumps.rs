//! For a shallow erf network, `φ′(z)² = (2/π)e^{−z²}`, so each d-tuple of
//! hidden units contributes a Gaussian bump to `det g`:
//! `(2/(πn))ᵈ det Q · exp(−(x−c)ᵀQ(x−c))` with `Q = Σᵢ wᵢwᵢᵀ` over the tuple
//! and `c = −Q⁻¹ Σᵢ bᵢwᵢ`. Tuples are unordered, one bump per set of units.

use std::f64::consts::PI;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::geometry::for_each_combination;
use crate::linalg::{determinant, inverse, DenseMatrix};
use crate::network::MlpNetwork;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBump {
    pub units: Vec<usize>,
    pub precision: DenseMatrix,
    pub center: Vec<f64>,
    pub coefficient: f64,
}

impl GaussianBump {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let d = self.center.len();
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += diff[i] * self.precision[(i, j)] * diff[j];
            }
        }
        self.coefficient * (-quad).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BumpDecomposition {
    pub bumps: Vec<GaussianBump>,
}

impl BumpDecomposition {
    /// `det g(x)` as the sum of all bumps.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.evaluate(x)).sum()
    }
}

pub fn erf_bump_decomposition(net: &MlpNetwork) -> Result<BumpDecomposition> {
    if net.activation() != ActivationKind::Erf || !net.is_shallow() {
        return Err(Error::contract("bump decomposition needs a shallow erf feature map"));
    }
    let layer = net.first_layer();
    let d = layer.inputs();
    let n = layer.outputs();
    if d > 3 {
        return Err(Error::contract(format!("bump decomposition limited to d ≤ 3, got {d}")));
    }
    if n < d {
        return Err(Error::contract(format!(
            "bump decomposition needs n ≥ d, got n={n}, d={d}"
        )));
    }
    let scale = (2.0 / (PI * n as f64)).powi(d as i32);
    let mut bumps = Vec::new();
    let mut failure = None;
    for_each_combination(n, d, |tuple| {
        let precision = DenseMatrix::from_fn(d, d, |a, b| {
            tuple
                .iter()
                .map(|&j| layer.weights[(j, a)] * layer.weights[(j, b)])
                .sum()
        });
        let det_q = match determinant(&precision) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        // Zero minor: the tuple contributes nothing.
        let qscale = precision.max_abs().powi(d as i32);
        if !(det_q > 1e-14 * qscale) {
            return;
        }
        let qinv = match inverse(&precision) {
            Ok(m) => m,
            Err(_) => return,
        };
        let drive: Vec<f64> = (0..d)
            .map(|a| tuple.iter().map(|&j| layer.biases[j] * layer.weights[(j, a)]).sum())
            .collect();
        let center = (0..d)
            .map(|a| -(0..d).map(|b| qinv[(a, b)] * drive[b]).sum::<f64>())
            .collect();
        bumps.push(GaussianBump {
            units: tuple.to_vec(),
            precision,
            center,
            coefficient: scale * det_q,
        });
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(BumpDecomposition { bumps })
}
