//! Result aggregation and on-disk report formats.
//!
//! Metric files are deterministic: identical inputs produce identical
//! bytes. Timing fields are confined to `folds.csv` and the benchmark
//! outputs so that the metric files can be compared across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::Algorithm;
use crate::config::{PipelineConfig, Representation};
use crate::error::{Error, Result};
use crate::evaluation::{BenchmarkCell, FoldResult, GridSearchResult};

/// Wording recorded next to every AUC so reports are self-describing.
pub const AUC_DEFINITION: &str =
    "one-vs-rest AUC, macro-averaged over classes present in the held-out truth; ties get half credit";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub n_subjects: usize,
    pub n_windows: usize,
    pub pipeline: PipelineConfig,
}

/// One (algorithm, representation) cell aggregated over its LOSO folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub algorithm: Algorithm,
    pub representation: Representation,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub mean_train_s: f64,
    pub mean_test_s: f64,
}

fn mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    values.sum::<f64>() / n as f64
}

/// Population standard deviation: folds are the whole population here,
/// not a sample from a larger one.
fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = mean(values.clone());
    let n = values.clone().count();
    (values.map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt()
}

impl CellResult {
    pub fn from_folds(
        algorithm: Algorithm,
        representation: Representation,
        folds: Vec<FoldResult>,
    ) -> Result<CellResult> {
        if folds.is_empty() {
            return Err(Error::EmptyMetricInput);
        }
        let acc = folds.iter().map(|f| f.accuracy);
        let auc = folds.iter().map(|f| f.auc);
        Ok(CellResult {
            algorithm,
            representation,
            mean_accuracy: mean(acc.clone()),
            std_accuracy: population_std(acc),
            mean_auc: mean(auc.clone()),
            std_auc: population_std(auc),
            mean_train_s: mean(folds.iter().map(|f| f.train_time_s)),
            mean_test_s: mean(folds.iter().map(|f| f.test_time_s)),
            folds,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub meta: ReportMeta,
    pub cells: Vec<CellResult>,
}

#[derive(Serialize)]
struct SummaryBestSide<'a> {
    algorithm: &'a str,
    representation: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct SummaryBest<'a> {
    by_accuracy: SummaryBestSide<'a>,
    by_auc: SummaryBestSide<'a>,
}

#[derive(Serialize)]
struct SummaryDataset {
    n_subjects: usize,
    n_windows: usize,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    algorithm: &'a str,
    representation: &'a str,
    mean_accuracy: f64,
    std_accuracy: f64,
    mean_auc: f64,
    std_auc: f64,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    auc_definition: &'a str,
    dataset: SummaryDataset,
    pipeline: &'a PipelineConfig,
    best: SummaryBest<'a>,
    results: Vec<SummaryRow<'a>>,
}

impl ExperimentReport {
    pub fn new(meta: ReportMeta, cells: Vec<CellResult>) -> Result<ExperimentReport> {
        if cells.is_empty() {
            return Err(Error::EmptyMetricInput);
        }
        Ok(ExperimentReport { meta, cells })
    }

    /// Per-fold detail, including timing. One row per (cell, fold).
    pub fn folds_csv(&self) -> String {
        let mut out = String::from("algorithm,representation,subject,accuracy,auc,train_s,test_s\n");
        for cell in &self.cells {
            for f in &cell.folds {
                writeln!(
                    out,
                    "{},{},{},{:.6},{:.6},{:.6},{:.6}",
                    cell.algorithm.tag(),
                    cell.representation.name(),
                    f.held_out_subject,
                    f.accuracy,
                    f.auc,
                    f.train_time_s,
                    f.test_time_s,
                )
                .expect("writing to a String cannot fail");
            }
        }
        out
    }

    /// Aggregate metrics only; no timing, so bytes are run-independent.
    pub fn metrics_csv(&self) -> String {
        let mut out =
            String::from("algorithm,representation,mean_accuracy,std_accuracy,mean_auc,std_auc\n");
        for cell in &self.cells {
            writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                cell.algorithm.tag(),
                cell.representation.name(),
                cell.mean_accuracy,
                cell.std_accuracy,
                cell.mean_auc,
                cell.std_auc,
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    fn best_by<F: Fn(&CellResult) -> f64>(&self, key: F) -> &CellResult {
        let mut best = &self.cells[0];
        for cell in &self.cells[1..] {
            if key(cell) > key(best) {
                best = cell;
            }
        }
        best
    }

    /// Human-oriented summary, also free of timing fields.
    pub fn summary_toml(&self) -> Result<String> {
        let by_accuracy = self.best_by(|c| c.mean_accuracy);
        let by_auc = self.best_by(|c| c.mean_auc);
        let doc = SummaryDoc {
            auc_definition: AUC_DEFINITION,
            dataset: SummaryDataset {
                n_subjects: self.meta.n_subjects,
                n_windows: self.meta.n_windows,
            },
            pipeline: &self.meta.pipeline,
            best: SummaryBest {
                by_accuracy: SummaryBestSide {
                    algorithm: by_accuracy.algorithm.tag(),
                    representation: by_accuracy.representation.name(),
                    value: by_accuracy.mean_accuracy,
                },
                by_auc: SummaryBestSide {
                    algorithm: by_auc.algorithm.tag(),
                    representation: by_auc.representation.name(),
                    value: by_auc.mean_auc,
                },
            },
            results: self
                .cells
                .iter()
                .map(|c| SummaryRow {
                    algorithm: c.algorithm.tag(),
                    representation: c.representation.name(),
                    mean_accuracy: c.mean_accuracy,
                    std_accuracy: c.std_accuracy,
                    mean_auc: c.mean_auc,
                    std_auc: c.std_auc,
                })
                .collect(),
        };
        toml::to_string(&doc).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Write folds.csv, metrics.csv and summary.toml into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_text(&dir.join("folds.csv"), &self.folds_csv())?;
        write_text(&dir.join("metrics.csv"), &self.metrics_csv())?;
        write_text(&dir.join("summary.toml"), &self.summary_toml()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub repeats: usize,
    /// Free-form description of the machine or run conditions.
    pub notes: String,
    pub cells: Vec<BenchmarkCell>,
}

#[derive(Serialize)]
struct BenchmarkDoc<'a> {
    repeats: usize,
    notes: &'a str,
    delta_definition: &'a str,
    cells: Vec<BenchmarkTomlRow<'a>>,
}

#[derive(Serialize)]
struct BenchmarkTomlRow<'a> {
    algorithm: &'a str,
    train_s_raw: f64,
    train_s_features: f64,
    train_delta_pct: f64,
    test_s_raw: f64,
    test_s_features: f64,
    test_delta_pct: f64,
    mean_accuracy_raw: f64,
    mean_accuracy_features: f64,
}

impl BenchmarkReport {
    pub fn csv(&self) -> String {
        let mut out = String::from(
            "algorithm,train_s_raw,train_s_features,train_delta_pct,test_s_raw,test_s_features,test_delta_pct\n",
        );
        for cell in &self.cells {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                cell.algorithm.tag(),
                cell.train_s_raw,
                cell.train_s_features,
                cell.train_delta_pct,
                cell.test_s_raw,
                cell.test_s_features,
                cell.test_delta_pct,
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn toml(&self) -> Result<String> {
        let doc = BenchmarkDoc {
            repeats: self.repeats,
            notes: &self.notes,
            delta_definition: "delta_pct = (features - raw) / raw * 100; negative means features are cheaper",
            cells: self
                .cells
                .iter()
                .map(|c| BenchmarkTomlRow {
                    algorithm: c.algorithm.tag(),
                    train_s_raw: c.train_s_raw,
                    train_s_features: c.train_s_features,
                    train_delta_pct: c.train_delta_pct,
                    test_s_raw: c.test_s_raw,
                    test_s_features: c.test_s_features,
                    test_delta_pct: c.test_delta_pct,
                    mean_accuracy_raw: c.mean_accuracy_raw,
                    mean_accuracy_features: c.mean_accuracy_features,
                })
                .collect(),
        };
        toml::to_string(&doc).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Write benchmark.csv and benchmark.toml into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_text(&dir.join("benchmark.csv"), &self.csv())?;
        write_text(&dir.join("benchmark.toml"), &self.toml()?)
    }
}

/// One row per evaluated grid combination, in enumeration order.
pub fn grid_csv(result: &GridSearchResult) -> String {
    let mut out = String::from("combination,accuracy,auc,best\n");
    for (i, point) in result.points.iter().enumerate() {
        writeln!(
            out,
            "\"{}\",{:.6},{:.6},{}",
            crate::evaluation::format_combination(&point.combination),
            point.accuracy,
            point.auc,
            i == result.best_index,
        )
        .expect("writing to a String cannot fail");
    }
    out
}

#[derive(Serialize)]
struct GridBestDoc<'a> {
    algorithm: &'a str,
    representation: &'a str,
    validation_subject: u32,
    combination: String,
    accuracy: f64,
    auc: f64,
    spec: &'a crate::classifiers::ClassifierSpec,
}

/// The winning combination as a loadable classifier spec plus its scores.
pub fn grid_best_toml(result: &GridSearchResult) -> Result<String> {
    let best = result.best();
    let doc = GridBestDoc {
        algorithm: result.algorithm.tag(),
        representation: result.representation.name(),
        validation_subject: result.validation_subject,
        combination: crate::evaluation::format_combination(&best.combination),
        accuracy: best.accuracy,
        auc: best.auc,
        spec: &best.spec,
    };
    toml::to_string(&doc).map_err(|e| Error::Serialize(e.to_string()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
