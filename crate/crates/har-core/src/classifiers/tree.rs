//! CART classification tree with Gini splits.
//!
//! Split quality is compared in exact integer arithmetic (cross-multiplied
//! class counts in i128), so equal-quality candidates are true ties and the
//! documented tie-breaks (lowest feature index, then lowest threshold) are
//! exact rather than float-order accidents.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_row, DtParams, MaxFeatures};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Class frequencies of the training samples in this leaf.
        dist: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<Node>,
    n_features: usize,
    n_classes: usize,
}

/// Growth settings shared by the standalone tree and the forest.
pub(crate) struct GrowParams {
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl GrowParams {
    fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameterValue {
                name: "min_samples_leaf".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameterValue {
                name: "min_samples_split".into(),
                message: "must be at least 2".into(),
            });
        }
        Ok(())
    }
}

/// Split quality as an exact rational: the weighted child impurity of a
/// candidate is A_l/n_l + A_r/n_r with A = n_side^2 - sum_c count_c^2,
/// kept as (numerator, denominator) over a common denominator n_l*n_r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SplitScore {
    num: i128,
    den: i128,
}

impl SplitScore {
    fn new(n_left: i128, s_left: i128, n_right: i128, s_right: i128) -> SplitScore {
        let a_left = n_left * n_left - s_left;
        let a_right = n_right * n_right - s_right;
        SplitScore {
            num: a_left * n_right + a_right * n_left,
            den: n_left * n_right,
        }
    }

    fn better_than(&self, other: &SplitScore) -> bool {
        self.num * other.den < other.num * self.den
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: SplitScore,
    n_left: usize,
}

impl TreeModel {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[u8],
        n_classes: usize,
        p: &DtParams,
        random_state: u64,
    ) -> Result<TreeModel> {
        let grow = GrowParams {
            max_features: p.max_features,
            min_samples_leaf: p.min_samples_leaf,
            min_samples_split: p.min_samples_split,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(random_state);
        let indices: Vec<usize> = (0..x.len()).collect();
        Self::fit_on(x, y, n_classes, &grow, &mut rng, indices)
    }

    /// Grow a tree over the given row indices (duplicates allowed, as with
    /// bootstrap samples). The rng drives per-split feature subsampling.
    pub(crate) fn fit_on(
        x: &[Vec<f64>],
        y: &[u8],
        n_classes: usize,
        grow: &GrowParams,
        rng: &mut ChaCha8Rng,
        indices: Vec<usize>,
    ) -> Result<TreeModel> {
        grow.validate()?;
        let d = x[0].len();
        let m = grow.max_features.count(d);

        let mut nodes: Vec<Node> = vec![Node::Leaf { dist: Vec::new() }];
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, indices)];
        let mut feature_pool: Vec<usize> = Vec::new();

        while let Some((slot, idx)) = stack.pop() {
            let n = idx.len();
            let mut counts = vec![0usize; n_classes];
            for &i in &idx {
                counts[usize::from(y[i])] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;

            if pure || n < grow.min_samples_split || n < 2 * grow.min_samples_leaf {
                nodes[slot] = leaf_from_counts(&counts, n);
                continue;
            }

            // Candidate features: a seeded subset when m < d, else all of
            // them (no randomness consumed). Ascending order makes the
            // lowest-index tie-break deterministic.
            feature_pool.clear();
            if m < d {
                feature_pool.extend(rand::seq::index::sample(rng, d, m));
                feature_pool.sort_unstable();
            } else {
                feature_pool.extend(0..d);
            }

            // Growth stops only on purity or the sample-count floors, so a
            // zero-gain best candidate is still taken; children are always
            // strictly smaller, which bounds the recursion.
            match best_split(x, y, n_classes, &idx, &feature_pool, grow.min_samples_leaf) {
                Some(c) => {
                    let mut left = Vec::with_capacity(c.n_left);
                    let mut right = Vec::with_capacity(n - c.n_left);
                    for &i in &idx {
                        if x[i][c.feature] <= c.threshold {
                            left.push(i);
                        } else {
                            right.push(i);
                        }
                    }
                    let left_slot = nodes.len();
                    nodes.push(Node::Leaf { dist: Vec::new() });
                    let right_slot = nodes.len();
                    nodes.push(Node::Leaf { dist: Vec::new() });
                    nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: left_slot,
                        right: right_slot,
                    };
                    // Left is pushed last so it grows first; the rng is
                    // consumed in stable depth-first left-to-right order.
                    stack.push((right_slot, right));
                    stack.push((left_slot, left));
                }
                None => nodes[slot] = leaf_from_counts(&counts, n),
            }
        }

        Ok(TreeModel {
            nodes,
            n_features: d,
            n_classes,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_row(row, self.n_features)?;
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { dist } => return Ok(dist.clone()),
                Node::Split {
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

    /// Number of split levels below the root.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    #[cfg(test)]
    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }
}

fn leaf_from_counts(counts: &[usize], n: usize) -> Node {
    Node::Leaf {
        dist: counts.iter().map(|&c| c as f64 / n as f64).collect(),
    }
}

/// Scan the candidate features for the best Gini split. Candidates that
/// would leave a child below `min_samples_leaf` are skipped; ties keep the
/// lowest feature index, then the lowest threshold.
fn best_split(
    x: &[Vec<f64>],
    y: &[u8],
    n_classes: usize,
    idx: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<Candidate> {
    let n = idx.len();
    let mut best: Option<Candidate> = None;
    let mut ordered: Vec<(f64, u8)> = Vec::with_capacity(n);

    for &f in features {
        ordered.clear();
        ordered.extend(idx.iter().map(|&i| (x[i][f], y[i])));
        ordered.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        if ordered[0].0 == ordered[n - 1].0 {
            continue;
        }

        let mut left_counts = vec![0i128; n_classes];
        let mut right_counts = vec![0i128; n_classes];
        for &(_, c) in ordered.iter() {
            right_counts[usize::from(c)] += 1;
        }
        let mut s_left: i128 = 0;
        let mut s_right: i128 = right_counts.iter().map(|&c| c * c).sum();

        for i in 0..n - 1 {
            let c = usize::from(ordered[i].1);
            // Moving one sample of class c across updates the squared sums
            // incrementally: (k+1)^2 - k^2 = 2k + 1.
            s_left += 2 * left_counts[c] + 1;
            left_counts[c] += 1;
            s_right -= 2 * right_counts[c] - 1;
            right_counts[c] -= 1;

            if ordered[i].0 == ordered[i + 1].0 {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }

            let score = SplitScore::new(n_left as i128, s_left, n_right as i128, s_right);
            let replaces = match &best {
                None => true,
                Some(b) => score.better_than(&b.score),
            };
            if replaces {
                let mut threshold = 0.5 * (ordered[i].0 + ordered[i + 1].0);
                // Midpoints can round up onto the right-hand value; pin the
                // threshold so `<=` reproduces the counted partition.
                if threshold >= ordered[i + 1].0 {
                    threshold = ordered[i].0;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    score,
                    n_left,
                });
            }
        }
    }
    best
}
