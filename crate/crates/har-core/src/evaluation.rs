//! Leave-one-subject-out evaluation, ranking metrics, grid search and the
//! raw-versus-features benchmark.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{argmax_low, Algorithm, ClassifierSpec, Model, ParamValue};
use crate::config::{PipelineConfig, Representation};
use crate::dataset::{ActivityLabel, Dataset};
use crate::error::{Error, Result};
use crate::features::{matrix_for, LabeledMatrix};
use crate::signal::{windows_for_recording, Window};

/// One leave-one-subject-out fold: train on everyone else, test on one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LosoFold {
    pub held_out_subject: u32,
    pub train_subjects: Vec<u32>,
}

/// Folds in ascending order of held-out subject id, one per subject.
pub fn loso_folds(ds: &Dataset) -> Result<Vec<LosoFold>> {
    let subjects = ds.subject_ids();
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects(subjects.len()));
    }
    Ok(subjects
        .iter()
        .map(|&held| LosoFold {
            held_out_subject: held,
            train_subjects: subjects.iter().copied().filter(|&s| s != held).collect(),
        })
        .collect())
}

/// Fraction of predictions matching the truth.
pub fn accuracy(predictions: &[u8], truth: &[u8]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyMetricInput);
    }
    let hits = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Probability that a random positive outscores a random negative, with
/// half credit for ties (midrank construction).
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: positive.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyMetricInput);
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassTruth);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .expect("scores must be comparable")
    });

    // Average the 1-based ranks across each run of tied scores.
    let mut rank_sum_pos = 0.0;
    let mut at = 0;
    while at < order.len() {
        let mut end = at + 1;
        while end < order.len() && scores[order[end]] == scores[order[at]] {
            end += 1;
        }
        let mid_rank = (at + 1 + end) as f64 / 2.0;
        for &idx in &order[at..end] {
            if positive[idx] {
                rank_sum_pos += mid_rank;
            }
        }
        at = end;
    }
    let n_pos = n_pos as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// One-vs-rest AUC macro-averaged over the classes present in the truth.
/// `scores[i][c]` ranks instance i for class c; columns of absent classes
/// are skipped because their one-vs-rest split is degenerate.
pub fn auc_ovr_macro(scores: &[Vec<f64>], truth: &[u8]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyMetricInput);
    }
    let width = scores[0].len();
    for row in scores {
        if row.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: row.len(),
            });
        }
    }
    let mut present = vec![false; width];
    for &t in truth {
        let t = usize::from(t);
        if t >= width {
            return Err(Error::DimensionMismatch {
                expected: width,
                got: t + 1,
            });
        }
        present[t] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::SingleClassTruth);
    }

    let mut total = 0.0;
    let mut n_classes = 0;
    for (c, &is_present) in present.iter().enumerate() {
        if !is_present {
            continue;
        }
        let column: Vec<f64> = scores.iter().map(|row| row[c]).collect();
        let labels: Vec<bool> = truth.iter().map(|&t| usize::from(t) == c).collect();
        total += binary_auc(&column, &labels)?;
        n_classes += 1;
    }
    Ok(total / f64::from(n_classes))
}

/// Per-fold outcome of one cross-validated cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub held_out_subject: u32,
    pub accuracy: f64,
    pub auc: f64,
    pub train_time_s: f64,
    pub test_time_s: f64,
    pub n_train: usize,
    pub n_test: usize,
}

fn collect_windows(ds: &Dataset, cfg: &PipelineConfig) -> Result<Vec<Window>> {
    let mut windows = Vec::new();
    for rec in ds.recordings() {
        windows.extend(windows_for_recording(rec, cfg)?);
    }
    Ok(windows)
}

fn run_fold(
    matrix: &LabeledMatrix,
    fold: &LosoFold,
    spec: &ClassifierSpec,
    n_classes: usize,
) -> Result<FoldResult> {
    let subject = fold.held_out_subject;
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (i, &s) in matrix.subjects.iter().enumerate() {
        if s == subject {
            test_idx.push(i);
        } else {
            train_idx.push(i);
        }
    }
    if test_idx.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "held-out subject {subject} produced no windows under the configured pipeline"
        )));
    }
    let train = matrix.select(&train_idx);
    let test = matrix.select(&test_idx);
    // No-leakage invariant: the held-out subject must not appear on the
    // training side, window-level splits would otherwise leak.
    assert!(
        train.subjects.iter().all(|&s| s != subject),
        "leakage: subject {subject} present in its own training fold"
    );

    let train_start = Instant::now();
    let model = Model::train(spec, &train.rows, &train.labels, n_classes)?;
    let train_time_s = train_start.elapsed().as_secs_f64();

    let test_start = Instant::now();
    let scores = model.predict_scores_batch(&test.rows)?;
    let test_time_s = test_start.elapsed().as_secs_f64();

    let predictions: Vec<u8> = scores.iter().map(|row| argmax_low(row) as u8).collect();
    let accuracy = accuracy(&predictions, &test.labels)?;
    let auc = auc_ovr_macro(&scores, &test.labels).map_err(|e| match e {
        Error::SingleClassTruth => Error::FoldAucUndefined { subject },
        other => other,
    })?;

    Ok(FoldResult {
        held_out_subject: subject,
        accuracy,
        auc,
        train_time_s,
        test_time_s,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
    })
}

/// Leave-one-subject-out cross-validation of one (classifier,
/// representation) cell. Folds are independent; with `jobs > 1` they run
/// on a dedicated thread pool and the returned order is still ascending by
/// subject. Timing starts before model construction, so setup cost counts
/// as training time. Any fold error is wrapped with the cell coordinates.
pub fn cross_validate(
    ds: &Dataset,
    spec: &ClassifierSpec,
    representation: Representation,
    cfg: &PipelineConfig,
    jobs: usize,
) -> Result<Vec<FoldResult>> {
    cfg.validate()?;
    if jobs == 0 {
        return Err(Error::InvalidArgument("jobs must be at least 1".into()));
    }
    let folds = loso_folds(ds)?;
    let windows = collect_windows(ds, cfg)?;
    let matrix = matrix_for(&windows, representation, cfg.median_mode)?;
    let n_classes = ActivityLabel::ALL.len();

    let wrap = |e: Error, subject: u32| Error::CellFailed {
        algorithm: spec.algorithm().tag().to_string(),
        representation: representation.name().to_string(),
        subject,
        source: Box::new(e),
    };

    if jobs == 1 {
        folds
            .iter()
            .map(|fold| {
                run_fold(&matrix, fold, spec, n_classes)
                    .map_err(|e| wrap(e, fold.held_out_subject))
            })
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            folds
                .par_iter()
                .map(|fold| {
                    run_fold(&matrix, fold, spec, n_classes)
                        .map_err(|e| wrap(e, fold.held_out_subject))
                })
                .collect()
        })
    }
}

/// One axis of a parameter grid; values are tried in the order given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<ParamValue>,
}

/// An ordered parameter grid for one algorithm. Combinations are
/// enumerated with the first axis most significant, and ties on the
/// selection metric keep the earliest combination in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub algorithm: Algorithm,
    #[serde(rename = "param")]
    pub axes: Vec<GridAxis>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::InvalidArgument(
                "grid must define at least one parameter axis".into(),
            ));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "grid axis {:?} has no values",
                    axis.name
                )));
            }
        }
        Ok(())
    }

    pub fn n_combinations(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    fn combination(&self, mut index: usize) -> Vec<(String, ParamValue)> {
        let mut out = vec![None; self.axes.len()];
        for (slot, axis) in self.axes.iter().enumerate().rev() {
            let pick = index % axis.values.len();
            index /= axis.values.len();
            out[slot] = Some((axis.name.clone(), axis.values[pick].clone()));
        }
        out.into_iter().map(|o| o.expect("every slot filled")).collect()
    }
}

pub fn format_combination(combination: &[(String, ParamValue)]) -> String {
    combination
        .iter()
        .map(|(name, value)| format!("{name}={value}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// One evaluated grid combination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPoint {
    pub combination: Vec<(String, ParamValue)>,
    pub spec: ClassifierSpec,
    pub accuracy: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub algorithm: Algorithm,
    pub representation: Representation,
    pub validation_subject: u32,
    pub points: Vec<GridPoint>,
    pub best_index: usize,
}

impl GridSearchResult {
    pub fn best(&self) -> &GridPoint {
        &self.points[self.best_index]
    }
}

/// Exhaustive search over `grid`, selecting by AUC on a single held-out
/// validation subject (default: the highest subject id). Each combination
/// starts from the tuned baseline spec for the cell and overrides only the
/// listed parameters.
pub fn grid_search(
    ds: &Dataset,
    grid: &GridSpec,
    representation: Representation,
    cfg: &PipelineConfig,
    validation_subject: Option<u32>,
    jobs: usize,
) -> Result<GridSearchResult> {
    cfg.validate()?;
    grid.validate()?;
    if jobs == 0 {
        return Err(Error::InvalidArgument("jobs must be at least 1".into()));
    }
    let subjects = ds.subject_ids();
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects(subjects.len()));
    }
    let validation = match validation_subject {
        Some(s) => {
            if !subjects.contains(&s) {
                return Err(Error::UnknownSubject(s));
            }
            s
        }
        None => *subjects.last().expect("at least two subjects"),
    };

    let windows = collect_windows(ds, cfg)?;
    let matrix = matrix_for(&windows, representation, cfg.median_mode)?;
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for (i, &s) in matrix.subjects.iter().enumerate() {
        if s == validation {
            val_idx.push(i);
        } else {
            train_idx.push(i);
        }
    }
    if val_idx.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "validation subject {validation} produced no windows"
        )));
    }
    let train = matrix.select(&train_idx);
    let val = matrix.select(&val_idx);
    let n_classes = ActivityLabel::ALL.len();

    let evaluate_one = |index: usize| -> Result<GridPoint> {
        let combination = grid.combination(index);
        let run = || -> Result<GridPoint> {
            let mut spec = ClassifierSpec::tuned(grid.algorithm, representation);
            for (name, value) in &combination {
                spec.set_param(name, value)?;
            }
            let model = Model::train(&spec, &train.rows, &train.labels, n_classes)?;
            let scores = model.predict_scores_batch(&val.rows)?;
            let predictions: Vec<u8> = scores.iter().map(|row| argmax_low(row) as u8).collect();
            let accuracy = accuracy(&predictions, &val.labels)?;
            let auc = auc_ovr_macro(&scores, &val.labels).map_err(|e| match e {
                Error::SingleClassTruth => Error::FoldAucUndefined {
                    subject: validation,
                },
                other => other,
            })?;
            Ok(GridPoint {
                combination: combination.clone(),
                spec,
                accuracy,
                auc,
            })
        };
        run().map_err(|e| Error::GridCellFailed {
            combination: format_combination(&combination),
            source: Box::new(e),
        })
    };

    let points: Vec<GridPoint> = if jobs == 1 {
        (0..grid.n_combinations())
            .map(evaluate_one)
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            (0..grid.n_combinations())
                .into_par_iter()
                .map(evaluate_one)
                .collect::<Result<_>>()
        })?
    };

    let mut best_index = 0;
    for (i, point) in points.iter().enumerate() {
        if point.auc > points[best_index].auc {
            best_index = i;
        }
    }
    Ok(GridSearchResult {
        algorithm: grid.algorithm,
        representation,
        validation_subject: validation,
        points,
        best_index,
    })
}

/// Relative change from raw to features, in percent. Negative means the
/// features side is cheaper.
pub fn percent_delta(raw: f64, features: f64) -> f64 {
    (features - raw) / raw * 100.0
}

/// Median train/test cost of one algorithm under both representations.
/// Times are mean seconds per fold, medianed over `repeats` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub algorithm: Algorithm,
    pub train_s_raw: f64,
    pub train_s_features: f64,
    pub train_delta_pct: f64,
    pub test_s_raw: f64,
    pub test_s_features: f64,
    pub test_delta_pct: f64,
    pub mean_accuracy_raw: f64,
    pub mean_accuracy_features: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Run the full LOSO evaluation `repeats` times per representation with a
/// single worker (so timings are not contaminated by contention) and
/// summarize per-fold mean times by their median across repeats.
pub fn benchmark_pair(
    ds: &Dataset,
    spec_raw: &ClassifierSpec,
    spec_features: &ClassifierSpec,
    cfg: &PipelineConfig,
    repeats: usize,
) -> Result<BenchmarkCell> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if spec_raw.algorithm() != spec_features.algorithm() {
        return Err(Error::InvalidArgument(format!(
            "benchmark specs disagree on the algorithm: {} vs {}",
            spec_raw.algorithm().tag(),
            spec_features.algorithm().tag()
        )));
    }

    let side = |spec: &ClassifierSpec, repr: Representation| -> Result<(f64, f64, f64)> {
        let mut train_means = Vec::with_capacity(repeats);
        let mut test_means = Vec::with_capacity(repeats);
        let mut accuracy_mean = 0.0;
        for _ in 0..repeats {
            let folds = cross_validate(ds, spec, repr, cfg, 1)?;
            let k = folds.len() as f64;
            train_means.push(folds.iter().map(|f| f.train_time_s).sum::<f64>() / k);
            test_means.push(folds.iter().map(|f| f.test_time_s).sum::<f64>() / k);
            accuracy_mean = folds.iter().map(|f| f.accuracy).sum::<f64>() / k;
        }
        Ok((
            median(&mut train_means),
            median(&mut test_means),
            accuracy_mean,
        ))
    };

    let (train_raw, test_raw, acc_raw) = side(spec_raw, Representation::Raw)?;
    let (train_features, test_features, acc_features) =
        side(spec_features, Representation::Features)?;

    Ok(BenchmarkCell {
        algorithm: spec_raw.algorithm(),
        train_s_raw: train_raw,
        train_s_features: train_features,
        train_delta_pct: percent_delta(train_raw, train_features),
        test_s_raw: test_raw,
        test_s_features: test_features,
        test_delta_pct: percent_delta(test_raw, test_features),
        mean_accuracy_raw: acc_raw,
        mean_accuracy_features: acc_features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthesize_dataset, RawRecording};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn folds_cover_each_subject_exactly_once() {
        let ds = synthesize_dataset(4, 12.0, 9).unwrap();
        let folds = loso_folds(&ds).unwrap();
        assert_eq!(folds.len(), 4);
        let held: Vec<u32> = folds.iter().map(|f| f.held_out_subject).collect();
        assert_eq!(held, vec![1, 2, 3, 4]);
        for fold in &folds {
            assert_eq!(fold.train_subjects.len(), 3);
            assert!(!fold.train_subjects.contains(&fold.held_out_subject));
        }
    }

    #[test]
    fn single_subject_dataset_cannot_be_folded() {
        let rec = RawRecording::new(
            7,
            ActivityLabel::Gait,
            (0..400).map(|i| f64::from(i % 50)).collect(),
            100.0,
        )
        .unwrap();
        let ds = Dataset::new(vec![rec]).unwrap();
        assert!(matches!(loso_folds(&ds), Err(Error::TooFewSubjects(1))));
    }

    #[test]
    fn accuracy_counts_matches() {
        assert_eq!(accuracy(&[0, 1, 2, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
        assert_eq!(accuracy(&[0], &[2]).unwrap(), 0.0);
        assert!(matches!(
            accuracy(&[], &[]),
            Err(Error::EmptyMetricInput)
        ));
        assert!(matches!(
            accuracy(&[0, 1], &[0]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn binary_auc_hand_cases() {
        // Perfect ranking and its reverse.
        let truth = [true, true, false, false];
        assert_eq!(
            binary_auc(&[0.9, 0.8, 0.2, 0.1], &truth).unwrap(),
            1.0
        );
        assert_eq!(
            binary_auc(&[0.1, 0.2, 0.8, 0.9], &truth).unwrap(),
            0.0
        );
        // Pairs: 2>1, 2<3, 4>3, 4>1 gives 3 of 4.
        let scores = [2.0, 3.0, 4.0, 1.0];
        let positive = [true, false, true, false];
        assert_eq!(binary_auc(&scores, &positive).unwrap(), 0.75);
        // All scores equal: every pair is a tie worth half credit.
        assert_eq!(binary_auc(&[5.0; 6], &[true, false, true, false, true, false]).unwrap(), 0.5);
        assert!(matches!(
            binary_auc(&[1.0, 2.0], &[true, true]),
            Err(Error::SingleClassTruth)
        ));
    }

    /// O(n^2) pair-counting definition used to confirm the midrank form.
    fn auc_by_pairs(scores: &[f64], positive: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &pi) in positive.iter().enumerate() {
            if !pi {
                continue;
            }
            for (j, &pj) in positive.iter().enumerate() {
                if pj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn midrank_auc_matches_pair_counting_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for case in 0..200 {
            let n = rng.random_range(2..40);
            // A coarse score grid forces plenty of ties.
            let scores: Vec<f64> = (0..n)
                .map(|_| f64::from(rng.random_range(0..6i32)) / 2.0)
                .collect();
            let mut positive: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            positive[0] = true;
            if n > 1 {
                positive[1] = false;
            }
            let got = binary_auc(&scores, &positive).unwrap();
            let want = auc_by_pairs(&scores, &positive);
            assert!((got - want).abs() < 1e-12, "case {case}: {got} vs {want}");
        }
    }

    #[test]
    fn macro_auc_averages_present_classes() {
        // Class 1 column ranks perfectly; class 0 column is its mirror.
        let scores = vec![
            vec![0.9, 0.1],
            vec![0.8, 0.2],
            vec![0.3, 0.7],
            vec![0.4, 0.6],
        ];
        let truth = [0u8, 0, 1, 1];
        assert_eq!(auc_ovr_macro(&scores, &truth).unwrap(), 1.0);

        // Class 2 never occurs: macro averages only classes 0 and 1.
        let scores3 = vec![
            vec![0.9, 0.1, 0.5],
            vec![0.2, 0.8, 0.5],
            vec![0.3, 0.7, 0.5],
        ];
        let truth3 = [0u8, 1, 1];
        let got = auc_ovr_macro(&scores3, &truth3).unwrap();
        assert_eq!(got, 1.0);

        assert!(matches!(
            auc_ovr_macro(&scores, &[1, 1, 1, 1]),
            Err(Error::SingleClassTruth)
        ));
        let ragged = vec![vec![0.1, 0.9], vec![0.5]];
        assert!(matches!(
            auc_ovr_macro(&ragged, &[0, 1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn macro_auc_mixes_per_class_scores() {
        // Class 0 ranked perfectly; class 1 ranked at chance-with-ties.
        let scores = vec![
            vec![0.9, 0.5],
            vec![0.8, 0.5],
            vec![0.1, 0.5],
            vec![0.2, 0.5],
        ];
        let truth = [0u8, 0, 1, 1];
        let got = auc_ovr_macro(&scores, &truth).unwrap();
        assert!((got - 0.75).abs() < 1e-12, "{got}");
    }

    fn nb_spec() -> ClassifierSpec {
        ClassifierSpec::tuned(Algorithm::NaiveBayes, Representation::Features)
    }

    #[test]
    fn cross_validate_runs_every_fold_and_keeps_sizes_consistent() {
        let ds = synthesize_dataset(4, 30.0, 5).unwrap();
        let cfg = PipelineConfig::default();
        let folds = cross_validate(&ds, &nb_spec(), Representation::Features, &cfg, 1).unwrap();
        assert_eq!(folds.len(), 4);
        let total = folds[0].n_train + folds[0].n_test;
        for f in &folds {
            assert_eq!(f.n_train + f.n_test, total);
            assert!(f.n_test > 0);
            assert!((0.0..=1.0).contains(&f.accuracy));
            assert!((0.0..=1.0).contains(&f.auc));
            assert!(f.train_time_s > 0.0);
            assert!(f.test_time_s > 0.0);
        }
        let held: Vec<u32> = folds.iter().map(|f| f.held_out_subject).collect();
        assert_eq!(held, vec![1, 2, 3, 4]);
    }

    #[test]
    fn fold_metrics_do_not_depend_on_the_worker_count() {
        let ds = synthesize_dataset(3, 24.0, 6).unwrap();
        let cfg = PipelineConfig::default();
        let serial = cross_validate(&ds, &nb_spec(), Representation::Features, &cfg, 1).unwrap();
        let parallel = cross_validate(&ds, &nb_spec(), Representation::Features, &cfg, 3).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.held_out_subject, b.held_out_subject);
            assert_eq!(a.accuracy, b.accuracy);
            assert_eq!(a.auc, b.auc);
            assert_eq!(a.n_train, b.n_train);
            assert_eq!(a.n_test, b.n_test);
        }
    }

    #[test]
    fn fold_failures_carry_the_cell_coordinates() {
        let ds = synthesize_dataset(3, 24.0, 6).unwrap();
        let cfg = PipelineConfig::default();
        let mut spec = ClassifierSpec::tuned(Algorithm::Svm, Representation::Raw);
        spec.set_param("max_iter", &ParamValue::Int(1)).unwrap();
        let err = cross_validate(&ds, &spec, Representation::Raw, &cfg, 1).unwrap_err();
        assert!(err.is_numerical_error(), "{err:?}");
        match err {
            Error::CellFailed {
                algorithm,
                representation,
                subject,
                source,
            } => {
                assert_eq!(algorithm, "svm");
                assert_eq!(representation, "raw");
                assert_eq!(subject, 1);
                assert!(matches!(*source, Error::SvmNonConvergence { .. }));
            }
            other => panic!("expected CellFailed, got {other:?}"),
        }
    }

    #[test]
    fn grid_enumerates_first_axis_most_significant() {
        let grid = GridSpec {
            algorithm: Algorithm::Knn,
            axes: vec![
                GridAxis {
                    name: "n_neighbors".into(),
                    values: vec![ParamValue::Int(1), ParamValue::Int(2)],
                },
                GridAxis {
                    name: "weights".into(),
                    values: vec![ParamValue::Text("uniform".into())],
                },
            ],
        };
        assert_eq!(grid.n_combinations(), 2);
        assert_eq!(
            format_combination(&grid.combination(0)),
            "n_neighbors=1, weights=uniform"
        );
        assert_eq!(
            format_combination(&grid.combination(1)),
            "n_neighbors=2, weights=uniform"
        );
    }

    #[test]
    fn grid_search_finds_the_planted_optimum() {
        let ds = synthesize_dataset(3, 20.0, 11).unwrap();
        let cfg = PipelineConfig::default();
        // Two training subjects, 3 activities, 19 windows each: 114 rows.
        // k equal to the training-set size makes every vote identical, so
        // ranking collapses to all-ties AUC 0.5 and 1-NN must win.
        let grid = GridSpec {
            algorithm: Algorithm::Knn,
            axes: vec![GridAxis {
                name: "n_neighbors".into(),
                values: vec![ParamValue::Int(114), ParamValue::Int(1)],
            }],
        };
        let result =
            grid_search(&ds, &grid, Representation::Features, &cfg, None, 1).unwrap();
        assert_eq!(result.validation_subject, 3);
        assert_eq!(result.points.len(), 2);
        assert_eq!(result.points[0].auc, 0.5);
        assert_eq!(result.best_index, 1);
        assert!(result.best().auc > result.points[0].auc);
        assert_eq!(
            format_combination(&result.best().combination),
            "n_neighbors=1"
        );
    }

    #[test]
    fn grid_ties_keep_the_earliest_combination() {
        let ds = synthesize_dataset(3, 20.0, 11).unwrap();
        let cfg = PipelineConfig::default();
        let grid = GridSpec {
            algorithm: Algorithm::Knn,
            axes: vec![GridAxis {
                name: "n_neighbors".into(),
                // Identical cells tie exactly; the first must be kept.
                values: vec![ParamValue::Int(6), ParamValue::Int(6)],
            }],
        };
        let result =
            grid_search(&ds, &grid, Representation::Features, &cfg, None, 1).unwrap();
        assert_eq!(result.points[0].auc, result.points[1].auc);
        assert_eq!(result.best_index, 0);
    }

    #[test]
    fn grid_failures_name_the_combination() {
        let ds = synthesize_dataset(3, 20.0, 11).unwrap();
        let cfg = PipelineConfig::default();
        let grid = GridSpec {
            algorithm: Algorithm::Knn,
            axes: vec![GridAxis {
                name: "n_neighbors".into(),
                values: vec![ParamValue::Int(1_000_000)],
            }],
        };
        let err = grid_search(&ds, &grid, Representation::Features, &cfg, None, 1).unwrap_err();
        match err {
            Error::GridCellFailed {
                combination,
                source,
            } => {
                assert_eq!(combination, "n_neighbors=1000000");
                assert!(matches!(*source, Error::TooFewSamples { .. }));
            }
            other => panic!("expected GridCellFailed, got {other:?}"),
        }
    }

    #[test]
    fn unknown_validation_subject_is_rejected() {
        let ds = synthesize_dataset(3, 20.0, 11).unwrap();
        let cfg = PipelineConfig::default();
        let grid = GridSpec {
            algorithm: Algorithm::Knn,
            axes: vec![GridAxis {
                name: "n_neighbors".into(),
                values: vec![ParamValue::Int(1)],
            }],
        };
        assert!(matches!(
            grid_search(&ds, &grid, Representation::Features, &cfg, Some(42), 1),
            Err(Error::UnknownSubject(42))
        ));
    }

    #[test]
    fn percent_delta_hand_case() {
        assert_eq!(percent_delta(8.0, 6.0), -25.0);
        assert_eq!(percent_delta(2.0, 3.0), 50.0);
    }

    #[test]
    fn benchmark_reports_consistent_deltas() {
        let ds = synthesize_dataset(3, 16.0, 13).unwrap();
        let cfg = PipelineConfig::default();
        let raw = ClassifierSpec::tuned(Algorithm::NaiveBayes, Representation::Raw);
        let features = ClassifierSpec::tuned(Algorithm::NaiveBayes, Representation::Features);
        let cell = benchmark_pair(&ds, &raw, &features, &cfg, 2).unwrap();
        assert_eq!(cell.algorithm, Algorithm::NaiveBayes);
        assert!(cell.train_s_raw > 0.0 && cell.train_s_features > 0.0);
        assert_eq!(
            cell.train_delta_pct,
            percent_delta(cell.train_s_raw, cell.train_s_features)
        );
        assert_eq!(
            cell.test_delta_pct,
            percent_delta(cell.test_s_raw, cell.test_s_features)
        );
        assert!((0.0..=1.0).contains(&cell.mean_accuracy_raw));
        assert!((0.0..=1.0).contains(&cell.mean_accuracy_features));
    }

    #[test]
    fn benchmark_rejects_mismatched_algorithms() {
        let ds = synthesize_dataset(3, 16.0, 13).unwrap();
        let cfg = PipelineConfig::default();
        let raw = ClassifierSpec::tuned(Algorithm::NaiveBayes, Representation::Raw);
        let features = ClassifierSpec::tuned(Algorithm::Knn, Representation::Features);
        assert!(benchmark_pair(&ds, &raw, &features, &cfg, 1).is_err());
    }
}
