//! The six classifiers, implemented from scratch behind one train/predict
//! interface.
//!
//! Every model consumes a row-major `&[Vec<f64>]` matrix with `u8` class
//! codes in `0..n_classes` and produces per-class scores. Scores from the
//! probabilistic models (all but the SVM) are normalized distributions;
//! the SVM reports raw one-vs-rest decision values, which is all the
//! rank-based AUC downstream needs.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod nb;
pub mod svm;
pub mod tree;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Representation;
use crate::error::{Error, Result};

/// Algorithm identity, in the fixed reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NaiveBayes,
    DecisionTree,
    RandomForest,
    Knn,
    GradientBoosting,
    Svm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::NaiveBayes,
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::Knn,
        Algorithm::GradientBoosting,
        Algorithm::Svm,
    ];

    /// Short tag used in reports and on the command line.
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "nb",
            Algorithm::DecisionTree => "dt",
            Algorithm::RandomForest => "rf",
            Algorithm::Knn => "knn",
            Algorithm::GradientBoosting => "gb",
            Algorithm::Svm => "svm",
        }
    }

    pub fn full_name(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "gaussian_naive_bayes",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::RandomForest => "random_forest",
            Algorithm::Knn => "k_nearest_neighbors",
            Algorithm::GradientBoosting => "gradient_boosting",
            Algorithm::Svm => "support_vector_machine",
        }
    }

    pub fn parse(text: &str) -> Result<Algorithm> {
        match text.trim().to_ascii_lowercase().as_str() {
            "nb" | "naive_bayes" | "naivebayes" | "gaussian_naive_bayes" | "gaussiannb" => {
                Ok(Algorithm::NaiveBayes)
            }
            "dt" | "decision_tree" | "decisiontree" | "tree" => Ok(Algorithm::DecisionTree),
            "rf" | "random_forest" | "randomforest" | "forest" => Ok(Algorithm::RandomForest),
            "knn" | "k_nearest_neighbors" | "kneighbors" => Ok(Algorithm::Knn),
            "gb" | "gradient_boosting" | "gradientboosting" | "boosting" => {
                Ok(Algorithm::GradientBoosting)
            }
            "svm" | "support_vector_machine" | "svc" => Ok(Algorithm::Svm),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?}; valid tags: nb, dt, rf, knn, gb, svm"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Split quality measure for the classification trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
}

/// Number of candidate features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    /// Resolve to a concrete count for `d` features, at least 1.
    pub fn count(self, d: usize) -> usize {
        let m = match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => (d as f64).sqrt() as usize,
            MaxFeatures::Log2 => (d as f64).log2() as usize,
        };
        m.clamp(1, d.max(1))
    }

    pub fn parse(text: &str) -> Result<MaxFeatures> {
        match text.trim().to_ascii_lowercase().as_str() {
            "all" | "none" => Ok(MaxFeatures::All),
            // "auto" is the historical alias for sqrt.
            "sqrt" | "auto" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            other => Err(Error::InvalidParameterValue {
                name: "max_features".into(),
                message: format!("expected all, sqrt/auto, or log2, got {other:?}"),
            }),
        }
    }
}

/// Neighbor vote weighting. Only uniform votes are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Rbf,
    Linear,
}

impl Kernel {
    pub fn parse(text: &str) -> Result<Kernel> {
        match text.trim().to_ascii_lowercase().as_str() {
            "rbf" => Ok(Kernel::Rbf),
            "linear" => Ok(Kernel::Linear),
            other => Err(Error::InvalidParameterValue {
                name: "kernel".into(),
                message: format!("expected rbf or linear, got {other:?}"),
            }),
        }
    }
}

/// One hyperparameter value, as it appears in grids and override files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    /// Parse a command-line string: integer, then float, then text.
    pub fn parse(text: &str) -> ParamValue {
        if let Ok(i) = text.parse::<i64>() {
            ParamValue::Int(i)
        } else if let Ok(f) = text.parse::<f64>() {
            ParamValue::Float(f)
        } else {
            ParamValue::Text(text.to_string())
        }
    }

    pub fn as_f64(&self, name: &str) -> Result<f64> {
        match self {
            ParamValue::Int(i) => Ok(*i as f64),
            ParamValue::Float(f) => Ok(*f),
            ParamValue::Text(t) => Err(Error::InvalidParameterValue {
                name: name.into(),
                message: format!("expected a number, got {t:?}"),
            }),
        }
    }

    pub fn as_usize(&self, name: &str) -> Result<usize> {
        match self {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as usize),
            other => Err(Error::InvalidParameterValue {
                name: name.into(),
                message: format!("expected a nonnegative integer, got {other}"),
            }),
        }
    }

    pub fn as_u64(&self, name: &str) -> Result<u64> {
        match self {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as u64),
            other => Err(Error::InvalidParameterValue {
                name: name.into(),
                message: format!("expected a nonnegative integer, got {other}"),
            }),
        }
    }

    pub fn as_str(&self, name: &str) -> Result<&str> {
        match self {
            ParamValue::Text(t) => Ok(t),
            other => Err(Error::InvalidParameterValue {
                name: name.into(),
                message: format!("expected text, got {other}"),
            }),
        }
    }

    pub fn as_bool(&self, name: &str) -> Result<bool> {
        match self {
            ParamValue::Int(0) => Ok(false),
            ParamValue::Int(1) => Ok(true),
            ParamValue::Text(t) if t.eq_ignore_ascii_case("true") => Ok(true),
            ParamValue::Text(t) if t.eq_ignore_ascii_case("false") => Ok(false),
            other => Err(Error::InvalidParameterValue {
                name: name.into(),
                message: format!("expected a boolean, got {other}"),
            }),
        }
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbParams {
    /// Fraction of the largest per-feature variance added to every
    /// class-conditional variance.
    pub var_smoothing: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams {
            var_smoothing: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtParams {
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for DtParams {
    fn default() -> Self {
        DtParams {
            criterion: Criterion::Gini,
            max_features: MaxFeatures::All,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfParams {
    pub n_estimators: usize,
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_estimators: 100,
            criterion: Criterion::Gini,
            max_features: MaxFeatures::Sqrt,
            min_samples_leaf: 1,
            min_samples_split: 2,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub n_neighbors: usize,
    pub weights: Weights,
    /// Accepted for configuration fidelity; the exact brute-force search
    /// ignores it. A search-structure choice ("algorithm" in some tools)
    /// is likewise accepted by `set_param` but not stored, since the key
    /// would collide with the spec's own algorithm tag.
    pub leaf_size: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            n_neighbors: 5,
            weights: Weights::Uniform,
            leaf_size: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbParams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    /// Fraction of rows drawn (without replacement) per boosting stage.
    pub subsample: f64,
}

impl Default for GbParams {
    fn default() -> Self {
        GbParams {
            learning_rate: 0.1,
            max_depth: 3,
            n_estimators: 100,
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    #[serde(alias = "C")]
    pub c: f64,
    pub gamma: f64,
    pub kernel: Kernel,
    /// KKT stopping tolerance of the SMO solver.
    pub tol: f64,
    /// Iteration cap; exceeding it is reported as non-convergence.
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: 1e-3,
            kernel: Kernel::Rbf,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// Algorithm tag plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum AlgoParams {
    NaiveBayes(NbParams),
    DecisionTree(DtParams),
    RandomForest(RfParams),
    Knn(KnnParams),
    GradientBoosting(GbParams),
    Svm(SvmParams),
}

/// Complete recipe for training one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    /// Seed for the stochastic algorithms; carried (and ignored) by the
    /// deterministic ones.
    pub random_state: u64,
    #[serde(flatten)]
    pub params: AlgoParams,
}

impl ClassifierSpec {
    pub fn algorithm(&self) -> Algorithm {
        match self.params {
            AlgoParams::NaiveBayes(_) => Algorithm::NaiveBayes,
            AlgoParams::DecisionTree(_) => Algorithm::DecisionTree,
            AlgoParams::RandomForest(_) => Algorithm::RandomForest,
            AlgoParams::Knn(_) => Algorithm::Knn,
            AlgoParams::GradientBoosting(_) => Algorithm::GradientBoosting,
            AlgoParams::Svm(_) => Algorithm::Svm,
        }
    }

    /// Plain defaults for an algorithm, before any tuning.
    pub fn new(algorithm: Algorithm) -> ClassifierSpec {
        let params = match algorithm {
            Algorithm::NaiveBayes => AlgoParams::NaiveBayes(NbParams::default()),
            Algorithm::DecisionTree => AlgoParams::DecisionTree(DtParams::default()),
            Algorithm::RandomForest => AlgoParams::RandomForest(RfParams::default()),
            Algorithm::Knn => AlgoParams::Knn(KnnParams::default()),
            Algorithm::GradientBoosting => AlgoParams::GradientBoosting(GbParams::default()),
            Algorithm::Svm => AlgoParams::Svm(SvmParams::default()),
        };
        ClassifierSpec {
            random_state: 100,
            params,
        }
    }

    /// The grid-search winners shipped as per-representation defaults.
    pub fn tuned(algorithm: Algorithm, representation: Representation) -> ClassifierSpec {
        let raw = representation == Representation::Raw;
        match algorithm {
            Algorithm::NaiveBayes => ClassifierSpec {
                random_state: 100,
                params: AlgoParams::NaiveBayes(NbParams {
                    var_smoothing: if raw { 0.000187382 } else { 0.0004328761 },
                }),
            },
            Algorithm::DecisionTree => ClassifierSpec {
                random_state: 100,
                params: AlgoParams::DecisionTree(DtParams {
                    criterion: Criterion::Gini,
                    max_features: if raw {
                        MaxFeatures::Log2
                    } else {
                        MaxFeatures::Sqrt
                    },
                    min_samples_leaf: if raw { 2 } else { 5 },
                    min_samples_split: if raw { 10 } else { 13 },
                }),
            },
            Algorithm::RandomForest => ClassifierSpec {
                random_state: if raw { 100 } else { 123 },
                params: AlgoParams::RandomForest(RfParams {
                    n_estimators: if raw { 16 } else { 8 },
                    criterion: Criterion::Gini,
                    max_features: MaxFeatures::Sqrt,
                    min_samples_leaf: if raw { 2 } else { 1 },
                    min_samples_split: if raw { 9 } else { 5 },
                    bootstrap: true,
                }),
            },
            Algorithm::Knn => ClassifierSpec {
                random_state: 100,
                params: AlgoParams::Knn(KnnParams {
                    n_neighbors: 6,
                    weights: Weights::Uniform,
                    leaf_size: 1,
                }),
            },
            Algorithm::GradientBoosting => ClassifierSpec {
                random_state: 100,
                params: AlgoParams::GradientBoosting(GbParams {
                    learning_rate: 0.01,
                    max_depth: if raw { 7 } else { 6 },
                    n_estimators: 50,
                    subsample: 0.5,
                }),
            },
            Algorithm::Svm => ClassifierSpec {
                random_state: 100,
                params: AlgoParams::Svm(SvmParams {
                    c: if raw { 1.0 } else { 1e-4 },
                    gamma: if raw { 1e-5 } else { 1e-6 },
                    kernel: if raw { Kernel::Rbf } else { Kernel::Linear },
                    tol: 1e-3,
                    max_iter: 1_000_000,
                }),
            },
        }
    }

    /// Set one named hyperparameter from a dynamically typed value.
    pub fn set_param(&mut self, name: &str, value: &ParamValue) -> Result<()> {
        if name == "random_state" {
            self.random_state = value.as_u64(name)?;
            return Ok(());
        }
        match &mut self.params {
            AlgoParams::NaiveBayes(p) => match name {
                "var_smoothing" => {
                    let v = value.as_f64(name)?;
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(Error::InvalidParameterValue {
                            name: name.into(),
                            message: format!("must be a nonnegative finite number, got {v}"),
                        });
                    }
                    p.var_smoothing = v;
                }
                _ => return Err(self.unknown_param(name)),
            },
            AlgoParams::DecisionTree(p) => match name {
                "criterion" => p.criterion = parse_criterion(value.as_str(name)?)?,
                "max_features" => p.max_features = MaxFeatures::parse(value.as_str(name)?)?,
                "min_samples_leaf" => p.min_samples_leaf = positive(name, value)?,
                "min_samples_split" => p.min_samples_split = at_least(name, value, 2)?,
                _ => return Err(self.unknown_param(name)),
            },
            AlgoParams::RandomForest(p) => match name {
                "n_estimators" => p.n_estimators = positive(name, value)?,
                "criterion" => p.criterion = parse_criterion(value.as_str(name)?)?,
                "max_features" => p.max_features = MaxFeatures::parse(value.as_str(name)?)?,
                "min_samples_leaf" => p.min_samples_leaf = positive(name, value)?,
                "min_samples_split" => p.min_samples_split = at_least(name, value, 2)?,
                "bootstrap" => p.bootstrap = value.as_bool(name)?,
                _ => return Err(self.unknown_param(name)),
            },
            AlgoParams::Knn(p) => match name {
                "n_neighbors" => p.n_neighbors = positive(name, value)?,
                "weights" => {
                    let w = value.as_str(name)?;
                    if !w.eq_ignore_ascii_case("uniform") {
                        return Err(Error::InvalidParameterValue {
                            name: name.into(),
                            message: format!("only uniform votes are supported, got {w:?}"),
                        });
                    }
                    p.weights = Weights::Uniform;
                }
                "leaf_size" => p.leaf_size = positive(name, value)?,
                "algorithm" => {
                    // Accepted and ignored; brute-force search is exact.
                    let v = value.as_str(name)?;
                    if !["auto", "brute", "ball_tree", "kd_tree"].contains(&v) {
                        return Err(Error::InvalidParameterValue {
                            name: name.into(),
                            message: format!("unknown search structure {v:?}"),
                        });
                    }
                }
                _ => return Err(self.unknown_param(name)),
            },
            AlgoParams::GradientBoosting(p) => match name {
                "learning_rate" => {
                    let v = value.as_f64(name)?;
                    if !(v >= 0.0) || !v.is_finite() {
                        return Err(Error::InvalidParameterValue {
                            name: name.into(),
                            message: format!("must be a nonnegative finite number, got {v}"),
                        });
                    }
                    p.learning_rate = v;
                }
                "max_depth" => p.max_depth = positive(name, value)?,
                "n_estimators" => p.n_estimators = positive(name, value)?,
                "subsample" => {
                    let v = value.as_f64(name)?;
                    if !(v > 0.0 && v <= 1.0) {
                        return Err(Error::InvalidParameterValue {
                            name: name.into(),
                            message: format!("must be in (0, 1], got {v}"),
                        });
                    }
                    p.subsample = v;
                }
                _ => return Err(self.unknown_param(name)),
            },
            AlgoParams::Svm(p) => match name {
                "C" | "c" => {
                    let v = value.as_f64(name)?;
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::InvalidParameterValue {
                            name: name.into(),
                            message: format!("must be a positive finite number, got {v}"),
                        });
                    }
                    p.c = v;
                }
                "gamma" => {
                    let v = value.as_f64(name)?;
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::InvalidParameterValue {
                            name: name.into(),
                            message: format!("must be a positive finite number, got {v}"),
                        });
                    }
                    p.gamma = v;
                }
                "kernel" => p.kernel = Kernel::parse(value.as_str(name)?)?,
                "tol" => {
                    let v = value.as_f64(name)?;
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::InvalidParameterValue {
                            name: name.into(),
                            message: format!("must be a positive finite number, got {v}"),
                        });
                    }
                    p.tol = v;
                }
                "max_iter" => p.max_iter = positive(name, value)?,
                _ => return Err(self.unknown_param(name)),
            },
        }
        Ok(())
    }

    /// Apply a name → value map, e.g. an override table from a config file.
    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, ParamValue>) -> Result<()> {
        for (name, value) in overrides {
            self.set_param(name, value)?;
        }
        Ok(())
    }

    fn unknown_param(&self, name: &str) -> Error {
        Error::UnknownParameter {
            algorithm: self.algorithm().tag().into(),
            name: name.into(),
        }
    }
}

fn parse_criterion(text: &str) -> Result<Criterion> {
    if text.eq_ignore_ascii_case("gini") {
        Ok(Criterion::Gini)
    } else {
        Err(Error::InvalidParameterValue {
            name: "criterion".into(),
            message: format!("only gini is supported, got {text:?}"),
        })
    }
}

fn positive(name: &str, value: &ParamValue) -> Result<usize> {
    at_least(name, value, 1)
}

fn at_least(name: &str, value: &ParamValue, min: usize) -> Result<usize> {
    let v = value.as_usize(name)?;
    if v < min {
        return Err(Error::InvalidParameterValue {
            name: name.into(),
            message: format!("must be at least {min}, got {v}"),
        });
    }
    Ok(v)
}

/// Index of the largest score; ties resolve to the lowest class code.
pub(crate) fn argmax_low(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Common validation of a training matrix; returns the feature count.
pub(crate) fn check_training_inputs(x: &[Vec<f64>], y: &[u8], n_classes: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if n_classes < 1 {
        return Err(Error::InvalidArgument("n_classes must be at least 1".into()));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::InvalidArgument("rows have zero features".into()));
    }
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "training value {bad} is not finite"
            )));
        }
    }
    if let Some(&bad) = y.iter().find(|&&c| usize::from(c) >= n_classes) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} is outside 0..{n_classes}"
        )));
    }
    Ok(d)
}

pub(crate) fn check_row(row: &[f64], expected: usize) -> Result<()> {
    if row.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: row.len(),
        });
    }
    Ok(())
}

/// A fitted model of any of the six algorithms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Model {
    NaiveBayes(nb::NbModel),
    DecisionTree(tree::TreeModel),
    RandomForest(forest::ForestModel),
    Knn(knn::KnnModel),
    GradientBoosting(boosting::GbModel),
    Svm(svm::SvmModel),
}

impl Model {
    pub fn train(
        spec: &ClassifierSpec,
        x: &[Vec<f64>],
        y: &[u8],
        n_classes: usize,
    ) -> Result<Model> {
        check_training_inputs(x, y, n_classes)?;
        Ok(match &spec.params {
            AlgoParams::NaiveBayes(p) => Model::NaiveBayes(nb::NbModel::fit(x, y, n_classes, p)?),
            AlgoParams::DecisionTree(p) => {
                Model::DecisionTree(tree::TreeModel::fit(x, y, n_classes, p, spec.random_state)?)
            }
            AlgoParams::RandomForest(p) => Model::RandomForest(forest::ForestModel::fit(
                x,
                y,
                n_classes,
                p,
                spec.random_state,
            )?),
            AlgoParams::Knn(p) => Model::Knn(knn::KnnModel::fit(x, y, n_classes, p)?),
            AlgoParams::GradientBoosting(p) => Model::GradientBoosting(boosting::GbModel::fit(
                x,
                y,
                n_classes,
                p,
                spec.random_state,
            )?),
            AlgoParams::Svm(p) => Model::Svm(svm::SvmModel::fit(x, y, n_classes, p)?),
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Model::NaiveBayes(_) => Algorithm::NaiveBayes,
            Model::DecisionTree(_) => Algorithm::DecisionTree,
            Model::RandomForest(_) => Algorithm::RandomForest,
            Model::Knn(_) => Algorithm::Knn,
            Model::GradientBoosting(_) => Algorithm::GradientBoosting,
            Model::Svm(_) => Algorithm::Svm,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::NaiveBayes(m) => m.n_features(),
            Model::DecisionTree(m) => m.n_features(),
            Model::RandomForest(m) => m.n_features(),
            Model::Knn(m) => m.n_features(),
            Model::GradientBoosting(m) => m.n_features(),
            Model::Svm(m) => m.n_features(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Model::NaiveBayes(m) => m.n_classes(),
            Model::DecisionTree(m) => m.n_classes(),
            Model::RandomForest(m) => m.n_classes(),
            Model::Knn(m) => m.n_classes(),
            Model::GradientBoosting(m) => m.n_classes(),
            Model::Svm(m) => m.n_classes(),
        }
    }

    /// One score per class. Probabilistic models return a distribution;
    /// the SVM returns one-vs-rest decision values.
    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::NaiveBayes(m) => m.predict_scores(row),
            Model::DecisionTree(m) => m.predict_scores(row),
            Model::RandomForest(m) => m.predict_scores(row),
            Model::Knn(m) => m.predict_scores(row),
            Model::GradientBoosting(m) => m.predict_scores(row),
            Model::Svm(m) => m.predict_scores(row),
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        Ok(argmax_low(&self.predict_scores(row)?) as u8)
    }

    pub fn predict_scores_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.predict_scores(r)).collect()
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        let text = serde_json::to_string(&file).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!(
                "expected format {MODEL_FORMAT:?}, found {:?}",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {} (supported: {MODEL_VERSION})",
                file.version
            )));
        }
        Ok(file.model)
    }
}

const MODEL_FORMAT: &str = "har-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Model,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_tags_round_trip() {
        for algo in Algorithm::ALL {
            assert_eq!(Algorithm::parse(algo.tag()).unwrap(), algo);
            assert_eq!(Algorithm::parse(algo.full_name()).unwrap(), algo);
        }
        assert!(Algorithm::parse("mlp").is_err());
    }

    #[test]
    fn tuned_defaults_carry_the_shipped_values() {
        let nb = ClassifierSpec::tuned(Algorithm::NaiveBayes, Representation::Raw);
        match &nb.params {
            AlgoParams::NaiveBayes(p) => assert_eq!(p.var_smoothing, 0.000187382),
            _ => panic!("wrong variant"),
        }
        let nb_f = ClassifierSpec::tuned(Algorithm::NaiveBayes, Representation::Features);
        match &nb_f.params {
            AlgoParams::NaiveBayes(p) => assert_eq!(p.var_smoothing, 0.0004328761),
            _ => panic!("wrong variant"),
        }

        let dt = ClassifierSpec::tuned(Algorithm::DecisionTree, Representation::Raw);
        match &dt.params {
            AlgoParams::DecisionTree(p) => {
                assert_eq!(p.max_features, MaxFeatures::Log2);
                assert_eq!(p.min_samples_leaf, 2);
                assert_eq!(p.min_samples_split, 10);
            }
            _ => panic!("wrong variant"),
        }
        assert_eq!(dt.random_state, 100);

        let rf = ClassifierSpec::tuned(Algorithm::RandomForest, Representation::Features);
        match &rf.params {
            AlgoParams::RandomForest(p) => {
                assert_eq!(p.n_estimators, 8);
                assert_eq!(p.min_samples_leaf, 1);
                assert_eq!(p.min_samples_split, 5);
            }
            _ => panic!("wrong variant"),
        }
        assert_eq!(rf.random_state, 123);

        let knn = ClassifierSpec::tuned(Algorithm::Knn, Representation::Raw);
        match &knn.params {
            AlgoParams::Knn(p) => {
                assert_eq!(p.n_neighbors, 6);
                assert_eq!(p.leaf_size, 1);
            }
            _ => panic!("wrong variant"),
        }

        let gb = ClassifierSpec::tuned(Algorithm::GradientBoosting, Representation::Raw);
        match &gb.params {
            AlgoParams::GradientBoosting(p) => {
                assert_eq!(p.learning_rate, 0.01);
                assert_eq!(p.max_depth, 7);
                assert_eq!(p.n_estimators, 50);
                assert_eq!(p.subsample, 0.5);
            }
            _ => panic!("wrong variant"),
        }

        let svm = ClassifierSpec::tuned(Algorithm::Svm, Representation::Features);
        match &svm.params {
            AlgoParams::Svm(p) => {
                assert_eq!(p.c, 1e-4);
                assert_eq!(p.gamma, 1e-6);
                assert_eq!(p.kernel, Kernel::Linear);
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::All.count(80), 80);
        assert_eq!(MaxFeatures::Sqrt.count(80), 8);
        assert_eq!(MaxFeatures::Log2.count(80), 6);
        assert_eq!(MaxFeatures::Sqrt.count(6), 2);
        assert_eq!(MaxFeatures::Log2.count(6), 2);
        assert_eq!(MaxFeatures::Log2.count(1), 1);
        assert_eq!(MaxFeatures::parse("auto").unwrap(), MaxFeatures::Sqrt);
    }

    #[test]
    fn set_param_accepts_known_names_and_rejects_others() {
        let mut spec = ClassifierSpec::tuned(Algorithm::Svm, Representation::Raw);
        spec.set_param("C", &ParamValue::Float(10.0)).unwrap();
        spec.set_param("kernel", &ParamValue::Text("linear".into()))
            .unwrap();
        spec.set_param("random_state", &ParamValue::Int(7)).unwrap();
        match &spec.params {
            AlgoParams::Svm(p) => {
                assert_eq!(p.c, 10.0);
                assert_eq!(p.kernel, Kernel::Linear);
            }
            _ => panic!("wrong variant"),
        }
        assert_eq!(spec.random_state, 7);

        assert!(matches!(
            spec.set_param("n_neighbors", &ParamValue::Int(3)),
            Err(Error::UnknownParameter { .. })
        ));
        assert!(matches!(
            spec.set_param("C", &ParamValue::Float(-1.0)),
            Err(Error::InvalidParameterValue { .. })
        ));
        assert!(matches!(
            spec.set_param("kernel", &ParamValue::Text("poly".into())),
            Err(Error::InvalidParameterValue { .. })
        ));

        let mut knn = ClassifierSpec::tuned(Algorithm::Knn, Representation::Raw);
        assert!(knn
            .set_param("weights", &ParamValue::Text("distance".into()))
            .is_err());
        knn.set_param("weights", &ParamValue::Text("uniform".into()))
            .unwrap();
        knn.set_param("algorithm", &ParamValue::Text("brute".into()))
            .unwrap();
    }

    #[test]
    fn param_value_parsing_and_display() {
        assert_eq!(ParamValue::parse("16"), ParamValue::Int(16));
        assert_eq!(ParamValue::parse("0.5"), ParamValue::Float(0.5));
        assert_eq!(ParamValue::parse("1e-5"), ParamValue::Float(1e-5));
        assert_eq!(ParamValue::parse("rbf"), ParamValue::Text("rbf".into()));
        assert_eq!(ParamValue::Int(3).to_string(), "3");
        assert_eq!(ParamValue::Float(0.25).to_string(), "0.25");
    }

    #[test]
    fn spec_round_trips_through_toml_and_json() {
        let spec = ClassifierSpec::tuned(Algorithm::GradientBoosting, Representation::Features);
        let toml_text = toml::to_string(&spec).unwrap();
        let back: ClassifierSpec = toml::from_str(&toml_text).unwrap();
        assert_eq!(back, spec);

        let json_text = serde_json::to_string(&spec).unwrap();
        let back: ClassifierSpec = serde_json::from_str(&json_text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn spec_parses_from_plain_toml_with_defaults() {
        let spec: ClassifierSpec = toml::from_str(
            "algorithm = \"svm\"\nrandom_state = 5\nC = 2.5\nkernel = \"rbf\"\n",
        )
        .unwrap();
        assert_eq!(spec.algorithm(), Algorithm::Svm);
        match &spec.params {
            AlgoParams::Svm(p) => {
                assert_eq!(p.c, 2.5);
                assert_eq!(p.tol, 1e-3);
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn argmax_breaks_ties_toward_low_codes() {
        assert_eq!(argmax_low(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax_low(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax_low(&[0.1, 0.3, 0.3]), 1);
    }

    #[test]
    fn training_input_validation() {
        let x = vec![vec![0.0, 1.0], vec![2.0, 3.0]];
        assert_eq!(check_training_inputs(&x, &[0, 1], 2).unwrap(), 2);
        assert!(check_training_inputs(&[], &[], 2).is_err());
        assert!(check_training_inputs(&x, &[0], 2).is_err());
        assert!(check_training_inputs(&x, &[0, 2], 2).is_err());
        let ragged = vec![vec![0.0, 1.0], vec![2.0]];
        assert!(check_training_inputs(&ragged, &[0, 1], 2).is_err());
        let nan = vec![vec![0.0, f64::NAN]];
        assert!(check_training_inputs(&nan, &[0], 2).is_err());
    }

    #[test]
    fn model_save_load_round_trip_preserves_predictions() {
        let x = vec![
            vec![0.0, 0.1],
            vec![0.2, 0.0],
            vec![4.0, 4.1],
            vec![4.2, 3.9],
        ];
        let y = vec![0, 0, 1, 1];
        let spec = ClassifierSpec::new(Algorithm::NaiveBayes);
        let model = Model::train(&spec, &x, &y, 2).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = Model::load(&path).unwrap();

        let probes = vec![vec![0.1, 0.1], vec![3.9, 4.0], vec![2.0, 2.0]];
        for p in &probes {
            assert_eq!(
                model.predict_scores(p).unwrap(),
                loaded.predict_scores(p).unwrap()
            );
        }

        std::fs::write(&path, "{\"format\":\"other\",\"version\":1,\"model\":null}").unwrap();
        assert!(Model::load(&path).is_err());
    }
}
