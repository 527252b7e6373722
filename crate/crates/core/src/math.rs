//! Scalar helpers shared by the logistic and neural models.

use crate::{Error, Result};

/// Log-argument clamp used by the cross-entropy losses.
pub const LOG_EPS: f64 = 1e-15;

/// Half an ulp below 1.0; sigmoid outputs are kept in `[P_MIN, 1 - P_MIN]`.
const P_MIN: f64 = f64::EPSILON / 2.0;

/// Logistic function, evaluated without overflow for any finite input and
/// kept strictly inside `(0, 1)`.
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(P_MIN, 1.0 - P_MIN)
}

/// Mean binary cross-entropy of probabilities `p` against labels `y`.
pub fn binary_cross_entropy(p: &[f64], y: &[u8]) -> Result<f64> {
    if p.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probabilities vs {} labels",
            p.len(),
            y.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::Empty("cross-entropy of zero samples"));
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(LOG_EPS, 1.0 - LOG_EPS);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / p.len() as f64)
}
