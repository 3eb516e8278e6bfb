//! Gaussian Naive Bayes with variance smoothing.

use serde::{Deserialize, Serialize};

use super::{check_row, NbParams};
use crate::error::{Error, Result};

/// Per-class Gaussian feature densities plus log priors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NbModel {
    log_prior: Vec<f64>,
    /// means[class][feature]
    means: Vec<Vec<f64>>,
    /// variances[class][feature], already smoothed
    variances: Vec<Vec<f64>>,
    n_features: usize,
}

impl NbModel {
    /// Fit means, population variances, and priors; every variance is then
    /// incremented by `var_smoothing` times the largest total variance of
    /// any single feature.
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_classes: usize, p: &NbParams) -> Result<NbModel> {
        let n = x.len();
        let d = x[0].len();

        let mut counts = vec![0usize; n_classes];
        for &c in y {
            counts[usize::from(c)] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass { class: empty });
        }

        // Smoothing scale: the largest per-feature variance over the whole
        // training set, regardless of class.
        let mut max_total_var = 0.0f64;
        for f in 0..d {
            let mean = x.iter().map(|r| r[f]).sum::<f64>() / n as f64;
            let var = x.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n as f64;
            max_total_var = max_total_var.max(var);
        }
        let epsilon = p.var_smoothing * max_total_var;

        let mut means = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            let c = usize::from(c);
            for f in 0..d {
                means[c][f] += row[f];
            }
        }
        for c in 0..n_classes {
            for f in 0..d {
                means[c][f] /= counts[c] as f64;
            }
        }

        let mut variances = vec![vec![0.0; d]; n_classes];
        for (row, &c) in x.iter().zip(y) {
            let c = usize::from(c);
            for f in 0..d {
                let dev = row[f] - means[c][f];
                variances[c][f] += dev * dev;
            }
        }
        for c in 0..n_classes {
            for f in 0..d {
                variances[c][f] = variances[c][f] / counts[c] as f64 + epsilon;
                if !(variances[c][f] > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "feature {f} of class {c} has zero variance and smoothing \
                         leaves no spread; increase var_smoothing"
                    )));
                }
            }
        }

        let log_prior = counts
            .iter()
            .map(|&c| (c as f64 / n as f64).ln())
            .collect();

        Ok(NbModel {
            log_prior,
            means,
            variances,
            n_features: d,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.log_prior.len()
    }

    /// Posterior class probabilities, normalized from the log joint.
    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_row(row, self.n_features)?;
        let mut log_joint: Vec<f64> = (0..self.n_classes())
            .map(|c| {
                let mut acc = self.log_prior[c];
                for f in 0..self.n_features {
                    let var = self.variances[c][f];
                    let dev = row[f] - self.means[c][f];
                    acc += -0.5 * (std::f64::consts::TAU * var).ln() - dev * dev / (2.0 * var);
                }
                acc
            })
            .collect();

        let max = log_joint.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in log_joint.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in log_joint.iter_mut() {
            *v /= total;
        }
        Ok(log_joint)
    }
}
