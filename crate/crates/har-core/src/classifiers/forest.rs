//! Random forest: bagged Gini trees with per-split feature subsampling.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{GrowParams, TreeModel};
use super::{check_row, RfParams};
use crate::dataset::mix_seed;
use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<TreeModel>,
    n_features: usize,
    n_classes: usize,
}

impl ForestModel {
    /// Fit `n_estimators` trees. Tree t draws its own rng seed from the
    /// forest seed, then (when bootstrap is on) a resample of row indices,
    /// so the ensemble is reproducible and order-independent.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[u8],
        n_classes: usize,
        p: &RfParams,
        random_state: u64,
    ) -> Result<ForestModel> {
        let n = x.len();
        let grow = GrowParams {
            max_features: p.max_features,
            min_samples_leaf: p.min_samples_leaf,
            min_samples_split: p.min_samples_split,
        };

        let mut trees = Vec::with_capacity(p.n_estimators);
        for t in 0..p.n_estimators {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(random_state, t as u64));
            let indices: Vec<usize> = if p.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            trees.push(TreeModel::fit_on(x, y, n_classes, &grow, &mut rng, indices)?);
        }

        Ok(ForestModel {
            trees,
            n_features: x[0].len(),
            n_classes,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    #[cfg(test)]
    pub(crate) fn trees(&self) -> &[TreeModel] {
        &self.trees
    }

    /// Mean of the member trees' leaf distributions.
    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_row(row, self.n_features)?;
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            let dist = tree.predict_scores(row)?;
            for (a, d) in acc.iter_mut().zip(&dist) {
                *a += d;
            }
        }
        let k = self.trees.len() as f64;
        for a in acc.iter_mut() {
            *a /= k;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{argmax_low, MaxFeatures};
    use rand_chacha::ChaCha8Rng;

    fn two_clusters(n_per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for c in 0..2u8 {
            let center = f64::from(c) * 8.0;
            for _ in 0..n_per {
                x.push(vec![
                    center + rng.random_range(-1.0..1.0),
                    center + rng.random_range(-1.0..1.0),
                ]);
                y.push(c);
            }
        }
        (x, y)
    }

    #[test]
    fn single_tree_without_bootstrap_equals_its_constituent() {
        let (x, y) = two_clusters(20, 3);
        let p = RfParams {
            n_estimators: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..RfParams::default()
        };
        let f = ForestModel::fit(&x, &y, 2, &p, 100).unwrap();
        assert_eq!(f.n_trees(), 1);
        for row in &x {
            assert_eq!(
                f.predict_scores(row).unwrap(),
                f.trees()[0].predict_scores(row).unwrap()
            );
        }
    }

    #[test]
    fn uniform_labels_predict_that_label_with_certainty() {
        let (x, _) = two_clusters(10, 4);
        let y = vec![2u8; x.len()];
        let p = RfParams {
            n_estimators: 5,
            ..RfParams::default()
        };
        let f = ForestModel::fit(&x, &y, 3, &p, 100).unwrap();
        assert_eq!(f.predict_scores(&x[0]).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn separated_clusters_are_memorized_and_match_per_tree_averaging() {
        let (x, y) = two_clusters(25, 7);
        let p = RfParams {
            n_estimators: 16,
            ..RfParams::default()
        };
        let f = ForestModel::fit(&x, &y, 2, &p, 100).unwrap();

        let mut correct = 0;
        for (row, &want) in x.iter().zip(&y) {
            let scores = f.predict_scores(row).unwrap();
            assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if argmax_low(&scores) == usize::from(want) {
                correct += 1;
            }
            // Aggregation really is the mean over the members.
            let mut manual = vec![0.0; 2];
            for t in f.trees() {
                for (m, s) in manual.iter_mut().zip(t.predict_scores(row).unwrap()) {
                    *m += s / 16.0;
                }
            }
            for (a, b) in scores.iter().zip(&manual) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(correct, x.len());
    }

    #[test]
    fn bootstraps_differ_between_trees() {
        let (x, y) = two_clusters(30, 8);
        let p = RfParams {
            n_estimators: 4,
            ..RfParams::default()
        };
        let f = ForestModel::fit(&x, &y, 2, &p, 100).unwrap();
        // With 60 samples the odds of two identical bootstraps are nil, so
        // some probe must split the trees' opinions.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let disagreement = (0..200).any(|_| {
            let probe = vec![rng.random_range(2.0..6.0), rng.random_range(2.0..6.0)];
            let opinions: Vec<Vec<f64>> = f
                .trees()
                .iter()
                .map(|t| t.predict_scores(&probe).unwrap())
                .collect();
            opinions.windows(2).any(|w| w[0] != w[1])
        });
        assert!(disagreement, "all trees returned identical distributions");
    }

    #[test]
    fn same_seed_same_forest_different_seed_may_differ() {
        let (x, y) = two_clusters(15, 11);
        let p = RfParams {
            n_estimators: 8,
            ..RfParams::default()
        };
        let a = ForestModel::fit(&x, &y, 2, &p, 100).unwrap();
        let b = ForestModel::fit(&x, &y, 2, &p, 100).unwrap();
        for row in &x {
            assert_eq!(
                a.predict_scores(row).unwrap(),
                b.predict_scores(row).unwrap()
            );
        }
    }

    #[test]
    fn serde_round_trip() {
        let (x, y) = two_clusters(10, 12);
        let p = RfParams {
            n_estimators: 3,
            ..RfParams::default()
        };
        let f = ForestModel::fit(&x, &y, 2, &p, 9).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: ForestModel = serde_json::from_str(&text).unwrap();
        for row in &x {
            assert_eq!(
                f.predict_scores(row).unwrap(),
                back.predict_scores(row).unwrap()
            );
        }
    }
}
