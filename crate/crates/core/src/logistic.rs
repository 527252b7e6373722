//! Logistic regression fitted by full-batch gradient descent on the mean
//! binary cross-entropy.
//!
//! Inputs are the five standardized features; an intercept column of ones is
//! prepended internally, so `theta` has six entries with the intercept first.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::math::{self, sigmoid};
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_EPOCHS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Intercept first, then one weight per feature.
    pub theta: Vec<f64>,
    pub alpha: f64,
    pub epochs: usize,
    /// Cost after each update.
    pub cost_history: Vec<f64>,
}

/// Prepends a column of ones.
pub fn add_intercept(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let ones = Array2::ones((x.nrows(), 1));
    concatenate(Axis(1), &[ones.view(), x]).expect("row counts agree")
}

fn check_shapes(x: &ArrayView2<'_, f64>, y: &[u8], theta: &ArrayView1<'_, f64>) -> Result<()> {
    if x.nrows() != y.len() || x.ncols() != theta.len() {
        return Err(Error::ShapeMismatch(format!(
            "design {}x{}, {} labels, {} weights",
            x.nrows(),
            x.ncols(),
            y.len(),
            theta.len()
        )));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::ShapeMismatch("labels must be 0 or 1".into()));
    }
    Ok(())
}

fn probabilities(design: &ArrayView2<'_, f64>, theta: &ArrayView1<'_, f64>) -> Array1<f64> {
    design.dot(theta).mapv(sigmoid)
}

/// Mean binary cross-entropy of `sigmoid(design · theta)` against `y`.
///
/// `design` already carries the intercept column.
pub fn entropy_cost(
    design: ArrayView2<'_, f64>,
    y: &[u8],
    theta: ArrayView1<'_, f64>,
) -> Result<f64> {
    check_shapes(&design, y, &theta)?;
    let p = probabilities(&design, &theta);
    math::binary_cross_entropy(p.as_slice().expect("contiguous"), y)
}

/// Gradient of [`entropy_cost`] with respect to `theta`: `Xᵀ(p − y) / N`.
pub fn gradient(
    design: ArrayView2<'_, f64>,
    y: &[u8],
    theta: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    check_shapes(&design, y, &theta)?;
    if y.is_empty() {
        return Err(Error::Empty("gradient of zero samples"));
    }
    let mut residual = probabilities(&design, &theta);
    for (r, &t) in residual.iter_mut().zip(y) {
        *r -= f64::from(t);
    }
    Ok(design.t().dot(&residual) / y.len() as f64)
}

/// Fits a model starting from `theta = 0`, one full-batch step per epoch.
pub fn train(x: ArrayView2<'_, f64>, y: &[u8], alpha: f64, epochs: usize) -> Result<LogisticModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParam(format!("learning rate {alpha}")));
    }
    if y.is_empty() {
        return Err(Error::Empty("logistic regression on zero samples"));
    }
    let design = add_intercept(x);
    let mut theta = Array1::<f64>::zeros(design.ncols());
    let mut cost_history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let grad = gradient(design.view(), y, theta.view())?;
        theta.scaled_add(-alpha, &grad);
        let cost = entropy_cost(design.view(), y, theta.view())?;
        if !cost.is_finite() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Divergence(format!(
                "logistic cost {cost} at epoch {epoch} (alpha {alpha})"
            )));
        }
        cost_history.push(cost);
    }
    Ok(LogisticModel {
        theta: theta.to_vec(),
        alpha,
        epochs,
        cost_history,
    })
}

impl LogisticModel {
    /// Untrained model with all weights zero.
    pub fn zeros(n_features: usize) -> Self {
        LogisticModel {
            theta: vec![0.0; n_features + 1],
            alpha: DEFAULT_ALPHA,
            epochs: 0,
            cost_history: Vec::new(),
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() + 1 != self.theta.len() {
            return Err(Error::ShapeMismatch(format!(
                "model has {} weights, input has {} columns",
                self.theta.len(),
                x.ncols()
            )));
        }
        let (bias, w) = (self.theta[0], ArrayView1::from(&self.theta[1..]));
        Ok(x.dot(&w).iter().map(|s| sigmoid(s + bias)).collect())
    }

    /// Class 1 when the probability is at least one half.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        Ok(threshold(&self.predict_proba(x)?))
    }
}

/// Maps probabilities to classes; `p ≥ 0.5` is class 1.
pub fn threshold(p: &[f64]) -> Vec<u8> {
    p.iter().map(|&p| u8::from(p >= 0.5)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn single_feature(xs: &[f64]) -> Array2<f64> {
        let mut x = Array2::zeros((xs.len(), 5));
        for (i, v) in xs.iter().enumerate() {
            x[[i, 0]] = *v;
        }
        x
    }

    /// Plain-loop gradient descent for one feature plus intercept, written
    /// without ndarray or the module's helpers.
    fn scalar_gd(xs: &[f64], ys: &[u8], alpha: f64, epochs: usize) -> (f64, f64) {
        let (mut b, mut w) = (0.0f64, 0.0f64);
        let n = xs.len() as f64;
        for _ in 0..epochs {
            let (mut gb, mut gw) = (0.0, 0.0);
            for (x, y) in xs.iter().zip(ys) {
                let p = 1.0 / (1.0 + (-(b + w * x)).exp());
                gb += p - *y as f64;
                gw += (p - *y as f64) * x;
            }
            b -= alpha * gb / n;
            w -= alpha * gw / n;
        }
        (b, w)
    }

    #[test]
    fn cost_at_zero_theta_is_ln2() {
        let x =
            add_intercept(array![[1.0, -2.0, 3.0, 0.1, 9.0], [4.0, 5.0, -6.0, 0.0, 1.0]].view());
        let c = entropy_cost(x.view(), &[1, 0], Array1::zeros(6).view()).unwrap();
        assert!((c - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_cost_is_tiny() {
        let x = add_intercept(single_feature(&[-1.0, 1.0, -2.0, 3.0]).view());
        let theta = array![0.0, 50.0, 0.0, 0.0, 0.0, 0.0];
        let c = entropy_cost(x.view(), &[0, 1, 0, 1], theta.view()).unwrap();
        assert!(c < 1e-6);
    }

    #[test]
    fn four_sample_fixture_matches_extended_precision() {
        // z = design · theta = [0.5, -0.45, 1.1, -0.6]; mpmath (50 digits)
        // mean BCE with y = [1, 0, 0, 1]: 0.84803730144471949689...
        let x = array![
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [-1.0, 0.5, 0.0, 0.0, 0.0],
            [2.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0, 2.0]
        ];
        let theta = array![0.1, 0.4, -0.3, 0.2, 0.5, -0.1];
        let c = entropy_cost(add_intercept(x.view()).view(), &[1, 0, 0, 1], theta.view()).unwrap();
        assert!((c - 0.848_037_301_444_719_5).abs() < 1e-14, "{c}");
    }

    #[test]
    fn separable_pair_matches_scalar_oracle() {
        let xs = [-1.0, 1.0];
        let ys = [0u8, 1];
        let model = train(single_feature(&xs).view(), &ys, 0.01, 1000).unwrap();
        let (b, w) = scalar_gd(&xs, &ys, 0.01, 1000);
        assert!((model.theta[0] - b).abs() < 1e-12);
        assert!((model.theta[1] - w).abs() < 1e-12);
        assert!(model.theta[1] > 0.0);
        assert_eq!(model.predict(single_feature(&xs).view()).unwrap(), ys);
        assert_eq!(model.cost_history.len(), 1000);
    }

    #[test]
    fn all_positive_labels_push_intercept_up() {
        let x = single_feature(&[0.3, -0.2, 0.1, 0.0]);
        let y = [1, 1, 1, 1];
        let mut last = 0.0;
        for epochs in [1, 2, 5, 20] {
            let m = train(x.view(), &y, 0.01, epochs).unwrap();
            assert!(m.theta[0] > last);
            last = m.theta[0];
        }
        let m = train(x.view(), &y, 0.01, 20).unwrap();
        assert!(m.predict(x.view()).unwrap().iter().all(|&c| c == 1));
    }

    #[test]
    fn zero_epochs_gives_half_everywhere() {
        let x = single_feature(&[0.3, -0.2]);
        let m = train(x.view(), &[0, 1], 0.01, 0).unwrap();
        assert_eq!(m.theta, vec![0.0; 6]);
        assert!(m.cost_history.is_empty());
        assert_eq!(m.predict_proba(x.view()).unwrap(), vec![0.5, 0.5]);
        assert_eq!(m.predict(x.view()).unwrap(), vec![1, 1]);
    }

    #[test]
    fn threshold_rule() {
        assert_eq!(threshold(&[0.5, 0.4999, 0.9, 0.1]), vec![1, 0, 1, 0]);
    }

    #[test]
    fn predict_proba_is_monotone_in_positive_weight() {
        let m = LogisticModel {
            theta: vec![0.2, 1.5, -0.3, 0.0, 0.0, 0.0],
            ..LogisticModel::zeros(5)
        };
        let lo = m
            .predict_proba(array![[0.1, 1.0, 0.0, 0.0, 0.0]].view())
            .unwrap()[0];
        let hi = m
            .predict_proba(array![[0.2, 1.0, 0.0, 0.0, 0.0]].view())
            .unwrap()[0];
        assert!(hi > lo);
        // sigmoid(0.2 + 0.15 - 0.3) = sigmoid(0.05) = 0.51249739648421034...
        assert!((lo - 0.512_497_396_484_210_3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = single_feature(&[0.3, -0.2]);
        assert!(matches!(
            train(x.view(), &[0, 1], 0.0, 10),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            train(x.view(), &[0], 0.01, 10),
            Err(Error::ShapeMismatch(_))
        ));
        let design = add_intercept(x.view());
        assert!(entropy_cost(design.view(), &[0, 2], Array1::zeros(6).view()).is_err());
        assert!(LogisticModel::zeros(5)
            .predict(array![[1.0, 2.0]].view())
            .is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let x = single_feature(&[0.3, -0.2, 1.1, -0.7, 0.05]);
        let y = [1, 0, 1, 0, 0];
        let a = train(x.view(), &y, 0.01, 300).unwrap();
        let b = train(x.view(), &y, 0.01, 300).unwrap();
        assert_eq!(a, b);
    }
}
