//! Terminating Gauss hypergeometric series.

use crate::error::{Error, Result};

/// `₂F₁(a, b; c; z)` for a non-positive integer `a`, where the series is a
/// polynomial of degree `−a` in `z`.
pub fn hyp2f1_terminating(a: i64, b: f64, c: f64, z: f64) -> Result<f64> {
    if a > 0 {
        return Err(Error::contract(format!("series does not terminate for a = {a}")));
    }
    let terms = (-a) as usize;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..terms {
        let kf = k as f64;
        let denom = (c + kf) * (kf + 1.0);
        if denom == 0.0 {
            return Err(Error::contract(format!("c = {c} hits a pole of the series")));
        }
        term *= (a as f64 + kf) * (b + kf) / denom * z;
        sum += term;
    }
    Ok(sum)
}
