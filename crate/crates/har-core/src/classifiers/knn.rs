//! K-nearest neighbors with exact brute-force Euclidean search.

use serde::{Deserialize, Serialize};

use super::{check_row, KnnParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    x: Vec<Vec<f64>>,
    y: Vec<u8>,
    k: usize,
    n_classes: usize,
}

impl KnnModel {
    pub fn fit(x: &[Vec<f64>], y: &[u8], n_classes: usize, p: &KnnParams) -> Result<KnnModel> {
        if p.n_neighbors > x.len() {
            return Err(Error::TooFewSamples {
                k: p.n_neighbors,
                n: x.len(),
            });
        }
        // leaf_size and algorithm are accepted for configuration fidelity
        // but never consulted: the search below is exact.
        Ok(KnnModel {
            x: x.to_vec(),
            y: y.to_vec(),
            k: p.n_neighbors,
            n_classes,
        })
    }

    pub fn n_features(&self) -> usize {
        self.x[0].len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Class frequencies among the k nearest training points. Distance
    /// ties resolve to the lower training index.
    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_row(row, self.n_features())?;
        let mut order: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d2: f64 = r
                    .iter()
                    .zip(row)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        order.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });

        let mut scores = vec![0.0; self.n_classes];
        for &(_, i) in order.iter().take(self.k) {
            scores[usize::from(self.y[i])] += 1.0 / self.k as f64;
        }
        Ok(scores)
    }
}
