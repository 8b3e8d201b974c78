//! Gaussian priors and the radial profile `e^{Ω(‖x‖²)} = σ² E[φ′(z)²]`,
//! `z ∼ N(0, σ²‖x‖² + ζ²)`.
//!
//! Derivatives in the variance follow from Price's theorem,
//! `d/ds E[f(z)] = ½ E[f″(z)]`.

use crate::activation::{double_factorial, odd_double_factorial, ActivationKind};
use crate::error::{Error, Result};
use crate::quadrature::gaussian_expectation;
use std::f64::consts::PI;

/// `w ∼ N(0, σ² I)`, `b ∼ N(0, ζ²)`, readout `v ∼ N(0, ξ² I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussPrior {
    pub sigma2: f64,
    pub zeta2: f64,
    pub xi2: f64,
}

impl GaussPrior {
    pub fn new(sigma2: f64, zeta2: f64) -> Result<Self> {
        Self::with_readout(sigma2, zeta2, 0.0)
    }

    pub fn with_readout(sigma2: f64, zeta2: f64, xi2: f64) -> Result<Self> {
        let p = Self { sigma2, zeta2, xi2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::contract(format!("σ² must be positive, got {}", self.sigma2)));
        }
        if !(self.zeta2 >= 0.0) || !(self.xi2 >= 0.0) {
            return Err(Error::contract("ζ² and ξ² must be non-negative"));
        }
        Ok(())
    }

    /// Preactivation variance `σ²‖x‖² + ζ²`.
    pub fn variance(&self, x_norm2: f64) -> f64 {
        self.sigma2 * x_norm2 + self.zeta2
    }
}

/// Ω and its first two derivatives with respect to `‖x‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaProfile {
    pub s: f64,
    pub exp_omega: f64,
    pub omega: f64,
    pub omega1: f64,
    pub omega2: f64,
}

/// Gaussian expectations at variance `s` together with their `s`-derivatives:
/// `a = E[φ′²]`, `a1 = da/ds`, `a2 = d²a/ds²`, `b = E[φ″²]`, `b1 = db/ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussMoments {
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub b1: f64,
}

/// Closed forms for erf and the monomials, quadrature otherwise.
pub fn gaussian_moments(kind: ActivationKind, s: f64) -> Result<GaussMoments> {
    kind.validate()?;
    check_variance(s)?;
    match kind {
        ActivationKind::Erf => {
            let t = 1.0 + 2.0 * s;
            let c = 2.0 / PI;
            Ok(GaussMoments {
                a: c / t.sqrt(),
                a1: -c * t.powf(-1.5),
                a2: 3.0 * c * t.powf(-2.5),
                b: c * s * t.powf(-1.5),
                b1: c * (1.0 - s) * t.powf(-2.5),
            })
        }
        ActivationKind::Linear => Ok(GaussMoments {
            a: 1.0,
            a1: 0.0,
            a2: 0.0,
            b: 0.0,
            b1: 0.0,
        }),
        _ => match kind.monomial_degree() {
            Some(q) => Ok(monomial_moments(q, s)),
            None => Ok(quadrature_moments(kind, s)),
        },
    }
}

fn check_variance(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::contract(format!("variance must be finite and ≥ 0, got {s}")));
    }
    Ok(())
}

/// `E[z^m]` for `z ∼ N(0, s)` multiplied through the `s`-derivative `order`
/// times: `d^k/ds^k [(m−1)!! s^{m/2}]`.
fn power_moment(m: u32, s: f64, order: u32) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let half = m / 2;
    if order > half {
        return 0.0;
    }
    let falling: f64 = (0..order).map(|k| f64::from(half - k)).product();
    let base = if m == 0 { 1.0 } else { double_factorial(m - 1) };
    base * falling * s.powi((half - order) as i32)
}

fn monomial_moments(q: u32, s: f64) -> GaussMoments {
    // φ^{(k)} = c·q!/(q−k)!·z^{q−k} with c² = 1/(2q−1)!!.
    let c2 = 1.0 / odd_double_factorial(q);
    let ff = |k: u32| -> f64 {
        if k > q {
            0.0
        } else {
            ((q - k + 1)..=q).map(f64::from).product()
        }
    };
    let pair = |i: u32, j: u32, order: u32| -> f64 {
        if i > q || j > q {
            return 0.0;
        }
        c2 * ff(i) * ff(j) * power_moment(2 * q - i - j, s, order)
    };
    GaussMoments {
        a: pair(1, 1, 0),
        a1: pair(1, 1, 1),
        a2: pair(1, 1, 2),
        b: pair(2, 2, 0),
        b1: pair(2, 2, 1),
    }
}

/// Moments by numerical integration; valid for any C⁴ activation.
pub fn quadrature_moments(kind: ActivationKind, s: f64) -> GaussMoments {
    let a = gaussian_expectation(s, |z| kind.derivs(z)[1].powi(2));
    let h = |z: f64| {
        let p = kind.derivs(z);
        p[2] * p[2] + p[1] * p[3]
    };
    let a1 = gaussian_expectation(s, h);
    let a2 = if s > 1e-10 {
        // ½E[h″] = E[z h′(z)]/(2s) by Stein's lemma; h′ = 3φ″φ‴ + φ′φ⁗.
        gaussian_expectation(s, |z| {
            let p = kind.derivs(z);
            z * (3.0 * p[2] * p[3] + p[1] * p[4])
        }) / (2.0 * s)
    } else {
        // ½h″(0) from h′ by a Richardson-extrapolated central difference.
        let hp = |z: f64| {
            let p = kind.derivs(z);
            3.0 * p[2] * p[3] + p[1] * p[4]
        };
        let central = |t: f64| (hp(t) - hp(-t)) / (2.0 * t);
        let step = 1e-3;
        0.5 * (4.0 * central(0.5 * step) - central(step)) / 3.0
    };
    let b = gaussian_expectation(s, |z| kind.derivs(z)[2].powi(2));
    let b1 = gaussian_expectation(s, |z| {
        let p = kind.derivs(z);
        p[3] * p[3] + p[2] * p[4]
    });
    GaussMoments { a, a1, a2, b, b1 }
}

fn profile_from_moments(prior: &GaussPrior, s: f64, m: GaussMoments) -> OmegaProfile {
    let sig2 = prior.sigma2;
    let ratio1 = m.a1 / m.a;
    OmegaProfile {
        s,
        exp_omega: sig2 * m.a,
        omega: (sig2 * m.a).ln(),
        omega1: sig2 * ratio1,
        omega2: sig2 * sig2 * (m.a2 / m.a - ratio1 * ratio1),
    }
}

pub fn omega_profile(kind: ActivationKind, prior: &GaussPrior, x_norm2: f64) -> Result<OmegaProfile> {
    prior.validate()?;
    let s = prior.variance(x_norm2);
    Ok(profile_from_moments(prior, s, gaussian_moments(kind, s)?))
}

/// As [`omega_profile`] but always by quadrature, for cross-checking the
/// closed forms.
pub fn omega_profile_quadrature(kind: ActivationKind, prior: &GaussPrior, x_norm2: f64) -> Result<OmegaProfile> {
    prior.validate()?;
    kind.validate()?;
    let s = prior.variance(x_norm2);
    check_variance(s)?;
    Ok(profile_from_moments(prior, s, quadrature_moments(kind, s)))
}
