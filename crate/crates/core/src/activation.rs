//! Smooth activation functions with analytic derivatives through fourth order.
//!
//! Only C⁴ activations exist here; curvature needs φ″ and the infinite-width
//! Ω profile needs up to φ⁗ through Price's theorem.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest monomial degree admitted.
pub const MAX_MONOMIAL_DEGREE: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    /// `erf(x/√2)`.
    Erf,
    Sigmoid,
    Tanh,
    /// `x^q / √((2q−1)!!)`, normalized so `E[φ(z)²] = 1` for standard normal z.
    Monomial(u32),
    Linear,
    /// `x²/√3`, the same function as `Monomial(2)`.
    NormalizedQuadratic,
}

impl ActivationKind {
    /// Monomial degree for the polynomial kinds.
    pub fn monomial_degree(self) -> Option<u32> {
        match self {
            ActivationKind::Monomial(q) => Some(q),
            ActivationKind::NormalizedQuadratic => Some(2),
            ActivationKind::Linear => Some(1),
            _ => None,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            ActivationKind::Monomial(0) => Err(Error::contract("monomial degree must be ≥ 1")),
            ActivationKind::Monomial(q) if q > MAX_MONOMIAL_DEGREE => Err(Error::contract(format!(
                "monomial degree {q} exceeds cap {MAX_MONOMIAL_DEGREE}"
            ))),
            _ => Ok(()),
        }
    }

    /// `[φ, φ′, φ″, φ‴, φ⁗]` at `x`. Assumes a validated kind.
    pub fn derivs(self, x: f64) -> [f64; 5] {
        match self {
            ActivationKind::Erf => {
                let g = (2.0 / PI).sqrt() * (-0.5 * x * x).exp();
                let x2 = x * x;
                [
                    libm::erf(x / std::f64::consts::SQRT_2),
                    g,
                    -x * g,
                    (x2 - 1.0) * g,
                    (3.0 * x - x2 * x) * g,
                ]
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                let ds = s * (1.0 - s);
                [
                    s,
                    ds,
                    ds * (1.0 - 2.0 * s),
                    ds * (1.0 - 6.0 * s + 6.0 * s * s),
                    ds * (1.0 - 2.0 * s) * (1.0 - 12.0 * s + 12.0 * s * s),
                ]
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                let dt = 1.0 - t * t;
                [
                    t,
                    dt,
                    -2.0 * t * dt,
                    dt * (6.0 * t * t - 2.0),
                    8.0 * t * dt * (2.0 - 3.0 * t * t),
                ]
            }
            ActivationKind::Linear => [x, 1.0, 0.0, 0.0, 0.0],
            ActivationKind::NormalizedQuadratic => monomial_derivs(2, x),
            ActivationKind::Monomial(q) => monomial_derivs(q, x),
        }
    }

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Linear => x,
            _ => self.derivs(x)[0],
        }
    }

    #[inline]
    pub fn first(self, x: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Linear => 1.0,
            ActivationKind::Erf => (2.0 / PI).sqrt() * (-0.5 * x * x).exp(),
            _ => self.derivs(x)[1],
        }
    }

    /// True when φ″ vanishes identically, so the induced metric is constant.
    pub fn is_affine(self) -> bool {
        matches!(self, ActivationKind::Linear | ActivationKind::Monomial(1))
    }

    pub fn name(self) -> String {
        match self {
            ActivationKind::Erf => "erf".into(),
            ActivationKind::Sigmoid => "sigmoid".into(),
            ActivationKind::Tanh => "tanh".into(),
            ActivationKind::Monomial(q) => format!("monomial{q}"),
            ActivationKind::Linear => "linear".into(),
            ActivationKind::NormalizedQuadratic => "quadratic".into(),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "erf" => ActivationKind::Erf,
            "sigmoid" => ActivationKind::Sigmoid,
            "tanh" => ActivationKind::Tanh,
            "linear" => ActivationKind::Linear,
            "quadratic" | "normalized_quadratic" => ActivationKind::NormalizedQuadratic,
            other => match other.strip_prefix("monomial") {
                Some(q) => ActivationKind::Monomial(
                    q.trim_start_matches(['(', ':', '_'])
                        .trim_end_matches(')')
                        .parse()
                        .map_err(|_| Error::contract(format!("bad monomial degree in {s:?}")))?,
                ),
                None => return Err(Error::contract(format!("unknown activation {s:?}"))),
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn monomial_derivs(q: u32, x: f64) -> [f64; 5] {
    let norm = 1.0 / double_factorial(2 * q - 1).sqrt();
    let mut out = [0.0; 5];
    for (k, slot) in out.iter_mut().enumerate() {
        let k = k as u32;
        if k > q {
            break;
        }
        let falling: f64 = ((q - k + 1)..=q).map(f64::from).product();
        *slot = norm * falling * x.powi((q - k) as i32);
    }
    out
}

/// `k!!` for odd or even `k`; `(-1)!! = 0!! = 1`. Exact products up to 21!!,
/// log-space accumulation above.
pub fn double_factorial(k: u32) -> f64 {
    if k <= 21 {
        let mut acc = 1.0;
        let mut j = k;
        while j > 1 {
            acc *= f64::from(j);
            j -= 2;
        }
        acc
    } else {
        let mut log = 0.0;
        let mut j = k;
        while j > 1 {
            log += f64::from(j).ln();
            j -= 2;
        }
        log.exp()
    }
}

/// `(2q−1)!!` with the convention `(−1)!! = 1` for q = 0.
pub fn odd_double_factorial(q: u32) -> f64 {
    if q == 0 {
        1.0
    } else {
        double_factorial(2 * q - 1)
    }
}

/// Derivatives `[φ(x), φ′(x), …]` up to `max_order ≤ 4`.
pub fn activation_derivatives(kind: ActivationKind, x: f64, max_order: usize) -> Result<Vec<f64>> {
    kind.validate()?;
    if max_order > 4 {
        return Err(Error::contract(format!(
            "derivative order {max_order} unsupported (max 4)"
        )));
    }
    Ok(kind.derivs(x)[..=max_order].to_vec())
}
