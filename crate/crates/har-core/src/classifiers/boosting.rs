//! Gradient boosting on the multinomial deviance.
//!
//! Raw scores start at the class log priors. Each stage fits one
//! squared-error regression tree per class to the softmax residuals
//! (one-hot minus probability), optionally on a per-stage subsample, and
//! replaces every leaf value with the standard Newton step for the
//! deviance before the learning rate is applied.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_row, GbParams};
use crate::dataset::mix_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
enum RegNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegTree {
    nodes: Vec<RegNode>,
}

impl RegTree {
    /// Grow a depth-capped least-squares tree over `idx` and assign each
    /// leaf the Newton value factor * sum(residual) / sum(weight).
    fn fit(
        x: &[Vec<f64>],
        idx: &[usize],
        residual: &[f64],
        weight: &[f64],
        max_depth: usize,
        factor: f64,
    ) -> RegTree {
        let d = x[0].len();
        let mut nodes = vec![RegNode::Leaf { value: 0.0 }];
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, idx.to_vec(), 0)];
        let mut ordered: Vec<(f64, f64)> = Vec::new();

        while let Some((slot, members, depth)) = stack.pop() {
            let n = members.len();
            let split = if depth < max_depth && n >= 2 {
                best_ls_split(x, residual, &members, d, &mut ordered)
            } else {
                None
            };
            match split {
                Some((feature, threshold)) => {
                    let mut left = Vec::new();
                    let mut right = Vec::new();
                    for &i in &members {
                        if x[i][feature] <= threshold {
                            left.push(i);
                        } else {
                            right.push(i);
                        }
                    }
                    let left_slot = nodes.len();
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    let right_slot = nodes.len();
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    nodes[slot] = RegNode::Split {
                        feature,
                        threshold,
                        left: left_slot,
                        right: right_slot,
                    };
                    stack.push((right_slot, right, depth + 1));
                    stack.push((left_slot, left, depth + 1));
                }
                None => {
                    let num: f64 = members.iter().map(|&i| residual[i]).sum();
                    let den: f64 = members.iter().map(|&i| weight[i]).sum();
                    // Degenerate regions (all probabilities saturated) get a
                    // zero step rather than a huge one.
                    let value = if den.abs() < 1e-150 {
                        0.0
                    } else {
                        factor * num / den
                    };
                    nodes[slot] = RegNode::Leaf { value };
                }
            }
        }
        RegTree { nodes }
    }

    fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    #[cfg(test)]
    fn depth(&self) -> usize {
        fn walk(nodes: &[RegNode], at: usize) -> usize {
            match &nodes[at] {
                RegNode::Leaf { .. } => 0,
                RegNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Best squared-error split: maximize sum_l^2/n_l + sum_r^2/n_r, which is
/// equivalent to minimizing the within-child sum of squares. Ties keep the
/// lowest feature index, then the lowest threshold. Returns None when no
/// candidate strictly improves on the parent.
fn best_ls_split(
    x: &[Vec<f64>],
    residual: &[f64],
    members: &[usize],
    d: usize,
    ordered: &mut Vec<(f64, f64)>,
) -> Option<(usize, f64)> {
    let n = members.len();
    let total: f64 = members.iter().map(|&i| residual[i]).sum();
    let parent_term = total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;

    for f in 0..d {
        ordered.clear();
        ordered.extend(members.iter().map(|&i| (x[i][f], residual[i])));
        ordered.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        if ordered[0].0 == ordered[n - 1].0 {
            continue;
        }

        let mut sum_left = 0.0;
        for i in 0..n - 1 {
            sum_left += ordered[i].1;
            if ordered[i].0 == ordered[i + 1].0 {
                continue;
            }
            let n_left = (i + 1) as f64;
            let n_right = (n - i - 1) as f64;
            let sum_right = total - sum_left;
            let term = sum_left * sum_left / n_left + sum_right * sum_right / n_right;
            let replaces = match &best {
                None => term > parent_term,
                Some((b, _, _)) => term > *b,
            };
            if replaces {
                let mut threshold = 0.5 * (ordered[i].0 + ordered[i + 1].0);
                if threshold >= ordered[i + 1].0 {
                    threshold = ordered[i].0;
                }
                best = Some((term, f, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbModel {
    /// Log priors, the stage-zero raw scores.
    init_raw: Vec<f64>,
    /// stages[m][c] is the class-c tree of boosting stage m.
    stages: Vec<Vec<RegTree>>,
    learning_rate: f64,
    n_features: usize,
    n_classes: usize,
    /// Mean multinomial deviance on the full training set; entry 0 is the
    /// prior-only model, entry m the model after stage m.
    train_deviance: Vec<f64>,
}

impl GbModel {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[u8],
        n_classes: usize,
        p: &GbParams,
        random_state: u64,
    ) -> Result<GbModel> {
        let n = x.len();
        let k = n_classes;

        let mut counts = vec![0usize; k];
        for &c in y {
            counts[usize::from(c)] += 1;
        }
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::SingleClass);
        }
        if !(p.subsample > 0.0 && p.subsample <= 1.0) {
            return Err(Error::InvalidParameterValue {
                name: "subsample".into(),
                message: format!("must be in (0, 1], got {}", p.subsample),
            });
        }
        if p.max_depth < 1 {
            return Err(Error::InvalidParameterValue {
                name: "max_depth".into(),
                message: "must be at least 1".into(),
            });
        }

        let init_raw: Vec<f64> = counts
            .iter()
            .map(|&c| (c as f64 / n as f64).ln())
            .collect();
        let mut raw: Vec<Vec<f64>> = vec![init_raw.clone(); n];
        let factor = (k as f64 - 1.0) / k as f64;
        let n_inbag = ((p.subsample * n as f64) as usize).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(random_state, 0x6b00));

        let mut train_deviance = Vec::with_capacity(p.n_estimators + 1);
        train_deviance.push(mean_deviance(&raw, y));

        let mut stages = Vec::with_capacity(p.n_estimators);
        let mut probs = vec![vec![0.0; k]; n];
        for _ in 0..p.n_estimators {
            for (pr, rw) in probs.iter_mut().zip(&raw) {
                softmax_into(rw, pr);
            }
            // One subsample per stage, shared by the K class trees.
            let inbag: Vec<usize> = if n_inbag < n {
                let mut s: Vec<usize> = rand::seq::index::sample(&mut rng, n, n_inbag).into_vec();
                s.sort_unstable();
                s
            } else {
                (0..n).collect()
            };

            let mut stage_trees = Vec::with_capacity(k);
            for c in 0..k {
                let mut residual = vec![0.0; n];
                let mut weight = vec![0.0; n];
                for i in 0..n {
                    let pc = probs[i][c];
                    let target = if usize::from(y[i]) == c { 1.0 } else { 0.0 };
                    residual[i] = target - pc;
                    weight[i] = pc * (1.0 - pc);
                }
                let tree = RegTree::fit(x, &inbag, &residual, &weight, p.max_depth, factor);
                for (i, row) in x.iter().enumerate() {
                    raw[i][c] += p.learning_rate * tree.predict(row);
                }
                stage_trees.push(tree);
            }
            stages.push(stage_trees);
            train_deviance.push(mean_deviance(&raw, y));
        }

        Ok(GbModel {
            init_raw,
            stages,
            learning_rate: p.learning_rate,
            n_features: x[0].len(),
            n_classes,
            train_deviance,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Deviance trace; entry 0 is before any boosting stage.
    pub fn train_deviance(&self) -> &[f64] {
        &self.train_deviance
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_row(row, self.n_features)?;
        let mut raw = self.init_raw.clone();
        for stage in &self.stages {
            for (c, tree) in stage.iter().enumerate() {
                raw[c] += self.learning_rate * tree.predict(row);
            }
        }
        let mut out = vec![0.0; self.n_classes];
        softmax_into(&raw, &mut out);
        Ok(out)
    }
}

fn softmax_into(raw: &[f64], out: &mut [f64]) {
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &r) in out.iter_mut().zip(raw) {
        *o = (r - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Mean negative log-likelihood of the true classes under softmax(raw).
fn mean_deviance(raw: &[Vec<f64>], y: &[u8]) -> f64 {
    let mut acc = 0.0;
    let mut buf = vec![0.0; raw[0].len()];
    for (rw, &c) in raw.iter().zip(y) {
        softmax_into(rw, &mut buf);
        acc -= buf[usize::from(c)].max(1e-300).ln();
    }
    acc / raw.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{argmax_low, Algorithm, ClassifierSpec, Model};
    use crate::config::Representation;
    use rand_chacha::ChaCha8Rng;

    fn gb(lr: f64, depth: usize, stages: usize, subsample: f64) -> GbParams {
        GbParams {
            learning_rate: lr,
            max_depth: depth,
            n_estimators: stages,
            subsample,
        }
    }

    fn col(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn zero_learning_rate_reduces_to_priors() {
        let x = col(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let y = vec![0, 0, 0, 1, 2];
        let m = GbModel::fit(&x, &y, 3, &gb(0.0, 3, 10, 1.0), 100).unwrap();
        for probe in [-1.0, 0.5, 3.5, 10.0] {
            let scores = m.predict_scores(&[probe]).unwrap();
            assert!((scores[0] - 0.6).abs() < 1e-12, "{scores:?}");
            assert!((scores[1] - 0.2).abs() < 1e-12, "{scores:?}");
            assert!((scores[2] - 0.2).abs() < 1e-12, "{scores:?}");
            assert_eq!(argmax_low(&scores), 0);
        }
    }

    #[test]
    fn stumps_learn_a_threshold_and_deviance_never_rises() {
        let x = col(&[0.0, 1.0, 2.0, 3.0]);
        let y = vec![0, 0, 1, 1];
        let m = GbModel::fit(&x, &y, 2, &gb(0.1, 1, 100, 1.0), 100).unwrap();
        for (row, &want) in x.iter().zip(&y) {
            let scores = m.predict_scores(row).unwrap();
            assert_eq!(argmax_low(&scores), usize::from(want), "{row:?} {scores:?}");
        }
        let dev = m.train_deviance();
        assert_eq!(dev.len(), 101);
        for w in dev.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "deviance rose from {} to {}",
                w[0],
                w[1]
            );
        }
        assert!(dev[100] < 0.25 * dev[0], "barely learned: {dev:?}");
    }

    #[test]
    fn depth_cap_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let y: Vec<u8> = (0..60).map(|_| rng.random_range(0..3) as u8).collect();
        for depth in [1, 2, 4] {
            let m = GbModel::fit(&x, &y, 3, &gb(0.1, depth, 5, 1.0), 100).unwrap();
            for stage in &m.stages {
                for tree in stage {
                    assert!(tree.depth() <= depth);
                }
            }
        }
    }

    #[test]
    fn separable_clusters_reach_full_training_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for c in 0..3u8 {
            for _ in 0..20 {
                x.push(vec![
                    f64::from(c) * 5.0 + rng.random_range(-1.0..1.0),
                    f64::from(c) * -3.0 + rng.random_range(-1.0..1.0),
                ]);
                y.push(c);
            }
        }
        let m = GbModel::fit(&x, &y, 3, &gb(0.2, 3, 40, 1.0), 100).unwrap();
        let mut correct = 0;
        for (row, &want) in x.iter().zip(&y) {
            let scores = m.predict_scores(row).unwrap();
            assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if argmax_low(&scores) == usize::from(want) {
                correct += 1;
            }
        }
        assert_eq!(correct, x.len());
    }

    #[test]
    fn subsampling_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] > 0.5)).collect();
        let a = GbModel::fit(&x, &y, 2, &gb(0.05, 4, 20, 0.5), 7).unwrap();
        let b = GbModel::fit(&x, &y, 2, &gb(0.05, 4, 20, 0.5), 7).unwrap();
        for row in &x {
            assert_eq!(
                a.predict_scores(row).unwrap(),
                b.predict_scores(row).unwrap()
            );
        }
        // A different seed draws different subsamples.
        let c = GbModel::fit(&x, &y, 2, &gb(0.05, 4, 20, 0.5), 8).unwrap();
        let differs = x
            .iter()
            .any(|row| a.predict_scores(row).unwrap() != c.predict_scores(row).unwrap());
        assert!(differs);
    }

    #[test]
    fn tuned_spec_is_reproducible_end_to_end() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..6).map(|_| rng.random_range(0.0..90.0)).collect())
            .collect();
        let y: Vec<u8> = (0..40).map(|_| rng.random_range(0..3) as u8).collect();
        let spec = ClassifierSpec::tuned(Algorithm::GradientBoosting, Representation::Features);
        let a = Model::train(&spec, &x, &y, 3).unwrap();
        let b = Model::train(&spec, &x, &y, 3).unwrap();
        for row in &x {
            assert_eq!(
                a.predict_scores(row).unwrap(),
                b.predict_scores(row).unwrap()
            );
        }
    }

    #[test]
    fn single_class_input_is_rejected() {
        let x = col(&[0.0, 1.0, 2.0]);
        let y = vec![1, 1, 1];
        assert!(matches!(
            GbModel::fit(&x, &y, 3, &gb(0.1, 2, 5, 1.0), 100),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn serde_round_trip_preserves_scores() {
        let x = col(&[0.0, 1.0, 2.0, 3.0]);
        let y = vec![0, 1, 0, 1];
        let m = GbModel::fit(&x, &y, 2, &gb(0.1, 2, 10, 1.0), 100).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: GbModel = serde_json::from_str(&text).unwrap();
        for probe in [0.2, 1.7, 2.9] {
            assert_eq!(
                m.predict_scores(&[probe]).unwrap(),
                back.predict_scores(&[probe]).unwrap()
            );
        }
    }
}
