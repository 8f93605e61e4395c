use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{FccaError, Result};

/// Linear margin classifier: label 1 iff `w . x + b >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearParams {
    /// Soft-margin penalty `C`.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams {
            c: 1.0,
            epochs: 200,
            seed: 0,
        }
    }
}

/// Hinge-loss SVM fitted by stochastic subgradient steps of size
/// `1 / (1 + lambda t)` on `lambda/2 |w|^2 + mean(hinge)` with
/// `lambda = 1 / (C n)`, returning the average of the
/// second-half iterates. The intercept is not regularized.
pub fn train_linear_svm(ds: &Dataset, params: &LinearParams) -> Result<LinearModel> {
    let [c0, c1] = ds.class_counts();
    if c0 == 0 || c1 == 0 {
        return Err(FccaError::Model("single-class training labels".into()));
    }
    if !(params.c > 0.0) || params.epochs == 0 {
        return Err(FccaError::Config("linear SVM needs C > 0 and epochs > 0".into()));
    }
    let n = ds.n_rows();
    let m = ds.n_features();
    let lambda = 1.0 / (params.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = vec![0.0; m];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; m];
    let mut avg_b = 0.0;
    let mut averaged = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (1.0 + lambda * t as f64);
            let y = if ds.labels[i] == 1 { 1.0 } else { -1.0 };
            let x = &ds.rows[i];
            let margin = y * (w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b);
            for wj in w.iter_mut() {
                *wj *= 1.0 - eta * lambda;
            }
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                b += eta * y;
            }
            if epoch >= params.epochs / 2 {
                averaged += 1;
                let k = averaged as f64;
                for (a, wj) in avg_w.iter_mut().zip(&w) {
                    *a += (wj - *a) / k;
                }
                avg_b += (b - avg_b) / k;
            }
        }
    }
    Ok(LinearModel { w: avg_w, b: avg_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TargetModel;

    #[test]
    fn separates_a_clear_margin() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let t = i as f64 / 39.0;
            rows.push(vec![0.1 + 0.25 * t, t]);
            labels.push(0);
            rows.push(vec![0.65 + 0.25 * t, 1.0 - t]);
            labels.push(1);
        }
        let ds = Dataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap();
        let model = train_linear_svm(&ds, &LinearParams::default()).unwrap();
        assert!(model.w[0] > 0.0);
        let m = TargetModel::Linear(model);
        assert_eq!(m.accuracy(&ds.rows, &ds.labels), 1.0);
    }
}
