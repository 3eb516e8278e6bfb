//! The six window statistics used as the compact instance representation.

use serde::{Deserialize, Serialize};

use crate::config::{MedianMode, Representation};
use crate::error::{Error, Result};
use crate::signal::Window;

/// Column order of the feature representation.
pub const FEATURE_NAMES: [&str; 6] = ["min", "max", "mean", "median", "std", "mad"];

/// Summary statistics of one window, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation (denominator n).
    pub std: f64,
    /// Mean absolute deviation around the mean.
    pub mad: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 6] {
        [self.min, self.max, self.mean, self.median, self.std, self.mad]
    }
}

/// Compute the six statistics of a window.
///
/// Mean and the deviations use a two-pass computation in double precision.
/// For even-length windows the median follows `median_mode`.
pub fn extract_features(values: &[f64], median_mode: MedianMode) -> Result<FeatureVector> {
    if values.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "window contains a non-finite value {bad}"
        )));
    }

    let n = values.len() as f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    let mean = sum / n;

    let mut sq_dev = 0.0;
    let mut abs_dev = 0.0;
    for &v in values {
        let d = v - mean;
        sq_dev += d * d;
        abs_dev += d.abs();
    }
    let std = (sq_dev / n).sqrt();
    let mad = abs_dev / n;

    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        match median_mode {
            MedianMode::Midpoint => (sorted[mid - 1] + sorted[mid]) / 2.0,
            MedianMode::Lower => sorted[mid - 1],
        }
    };

    Ok(FeatureVector {
        min,
        max,
        mean,
        median,
        std,
        mad,
    })
}

/// Instance matrix with per-row labels and subject ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    /// Row-major instances; all rows have `column_names.len()` entries.
    pub rows: Vec<Vec<f64>>,
    /// Activity codes, one per row.
    pub labels: Vec<u8>,
    /// Source subject, one per row.
    pub subjects: Vec<u32>,
    pub column_names: Vec<String>,
}

impl LabeledMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.column_names.len()
    }

    /// New matrix holding the rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> LabeledMatrix {
        LabeledMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            subjects: indices.iter().map(|&i| self.subjects[i]).collect(),
            column_names: self.column_names.clone(),
        }
    }
}

/// Row i = extract_features(windows[i]), columns in `FEATURE_NAMES` order.
pub fn featurize_all(windows: &[Window], median_mode: MedianMode) -> Result<LabeledMatrix> {
    let mut rows = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    let mut subjects = Vec::with_capacity(windows.len());
    for w in windows {
        let fv = extract_features(&w.values, median_mode)?;
        rows.push(fv.as_array().to_vec());
        labels.push(w.label.code() as u8);
        subjects.push(w.subject_id);
    }
    Ok(LabeledMatrix {
        rows,
        labels,
        subjects,
        column_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    })
}

/// The raw representation: each window's samples as one row.
pub fn raw_matrix(windows: &[Window]) -> Result<LabeledMatrix> {
    let width = match windows.first() {
        Some(w) => w.values.len(),
        None => 0,
    };
    let mut rows = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    let mut subjects = Vec::with_capacity(windows.len());
    for w in windows {
        if w.values.len() != width {
            return Err(Error::InvalidArgument(format!(
                "windows have mixed lengths {} and {}",
                width,
                w.values.len()
            )));
        }
        rows.push(w.values.clone());
        labels.push(w.label.code() as u8);
        subjects.push(w.subject_id);
    }
    Ok(LabeledMatrix {
        rows,
        labels,
        subjects,
        column_names: (0..width).map(|i| format!("s{i}")).collect(),
    })
}

/// Build the matrix for the requested representation.
pub fn matrix_for(
    windows: &[Window],
    representation: Representation,
    median_mode: MedianMode,
) -> Result<LabeledMatrix> {
    match representation {
        Representation::Raw => raw_matrix(windows),
        Representation::Features => featurize_all(windows, median_mode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ActivityLabel;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn feats(values: &[f64]) -> FeatureVector {
        extract_features(values, MedianMode::Midpoint).unwrap()
    }

    /// Brute-force reimplementation straight from the definitions, written
    /// independently of the library code path.
    fn oracle(values: &[f64], median_mode: MedianMode) -> [f64; 6] {
        let n = values.len();
        let mut min = values[0];
        let mut max = values[0];
        for &v in values {
            if v < min {
                min = v;
            }
            if v > max {
                max = v;
            }
        }
        let mut total = 0.0;
        for &v in values {
            total += v;
        }
        let mean = total / n as f64;
        let mut var_acc = 0.0;
        for &v in values {
            var_acc += (v - mean) * (v - mean);
        }
        let std = (var_acc / n as f64).sqrt();
        let mut mad_acc = 0.0;
        for &v in values {
            mad_acc += (v - mean).abs();
        }
        let mad = mad_acc / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            match median_mode {
                MedianMode::Midpoint => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
                MedianMode::Lower => sorted[n / 2 - 1],
            }
        };
        [min, max, mean, median, std, mad]
    }

    fn assert_close(a: f64, b: f64, what: &str) {
        let scale = 1.0_f64.max(a.abs()).max(b.abs());
        assert!((a - b).abs() <= 1e-9 * scale, "{what}: {a} vs {b}");
    }

    #[test]
    fn hand_computed_example() {
        let fv = feats(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(fv.min, 1.0);
        assert_eq!(fv.max, 5.0);
        assert_eq!(fv.mean, 3.0);
        assert_eq!(fv.median, 3.0);
        assert_close(fv.std, 2.0_f64.sqrt(), "std");
        assert_close(fv.mad, 1.2, "mad");
    }

    #[test]
    fn constant_window() {
        let fv = feats(&[7.25; 80]);
        assert_eq!(fv.min, 7.25);
        assert_eq!(fv.max, 7.25);
        assert_eq!(fv.mean, 7.25);
        assert_eq!(fv.median, 7.25);
        assert_eq!(fv.std, 0.0);
        assert_eq!(fv.mad, 0.0);
    }

    #[test]
    fn even_length_median_conventions() {
        let fv = feats(&[0.0, 10.0]);
        assert_eq!(fv.median, 5.0);
        assert_eq!(fv.mean, 5.0);
        assert_eq!(fv.std, 5.0);
        assert_eq!(fv.mad, 5.0);

        let lower = extract_features(&[0.0, 10.0], MedianMode::Lower).unwrap();
        assert_eq!(lower.median, 0.0);

        let four = extract_features(&[4.0, 1.0, 3.0, 2.0], MedianMode::Lower).unwrap();
        assert_eq!(four.median, 2.0);
    }

    #[test]
    fn empty_and_non_finite_windows_are_rejected() {
        assert!(matches!(
            extract_features(&[], MedianMode::Midpoint),
            Err(Error::EmptyWindow)
        ));
        assert!(extract_features(&[1.0, f64::NAN], MedianMode::Midpoint).is_err());
    }

    #[test]
    fn thousand_random_windows_match_the_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xFEA7);
        for case in 0..1000 {
            let values: Vec<f64> = (0..80).map(|_| rng.random_range(-50.0..170.0)).collect();
            for mode in [MedianMode::Midpoint, MedianMode::Lower] {
                let got = extract_features(&values, mode).unwrap().as_array();
                let want = oracle(&values, mode);
                for (i, name) in FEATURE_NAMES.iter().enumerate() {
                    assert_close(got[i], want[i], &format!("case {case} {name}"));
                }
            }
        }
    }

    #[test]
    fn ordering_invariants_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let values: Vec<f64> = (0..79).map(|_| rng.random_range(0.0..120.0)).collect();
            let fv = feats(&values);
            assert!(fv.min <= fv.median && fv.median <= fv.max);
            assert!(fv.min <= fv.mean && fv.mean <= fv.max);
            assert!(fv.std >= 0.0 && fv.mad >= 0.0);
            assert!(fv.mad <= fv.std + 1e-12);
        }
    }

    fn window(values: Vec<f64>, label: ActivityLabel, subject: u32) -> Window {
        Window {
            values,
            label,
            subject_id: subject,
        }
    }

    #[test]
    fn featurize_all_keeps_order_labels_and_subjects() {
        let windows = vec![
            window(vec![1.0, 2.0, 3.0, 4.0, 5.0], ActivityLabel::Gait, 3),
            window(vec![5.0, 5.0, 5.0, 5.0, 5.0], ActivityLabel::SitExtension, 8),
        ];
        let m = featurize_all(&windows, MedianMode::Midpoint).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.n_columns(), 6);
        assert_eq!(m.column_names, FEATURE_NAMES);
        assert_eq!(m.labels, vec![0, 1]);
        assert_eq!(m.subjects, vec![3, 8]);
        assert_eq!(m.rows[1], vec![5.0, 5.0, 5.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_input_yields_empty_matrix_with_declared_columns() {
        let m = featurize_all(&[], MedianMode::Midpoint).unwrap();
        assert_eq!(m.n_rows(), 0);
        assert_eq!(m.n_columns(), 6);
        let raw = raw_matrix(&[]).unwrap();
        assert_eq!(raw.n_rows(), 0);
        assert_eq!(raw.n_columns(), 0);
    }

    #[test]
    fn raw_matrix_copies_samples_verbatim() {
        let windows = vec![
            window(vec![1.0, 2.0], ActivityLabel::Gait, 1),
            window(vec![3.0, 4.0], ActivityLabel::StandFlexion, 2),
        ];
        let m = raw_matrix(&windows).unwrap();
        assert_eq!(m.rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(m.labels, vec![0, 2]);
        assert_eq!(m.column_names, vec!["s0", "s1"]);

        let mixed = vec![
            window(vec![1.0, 2.0], ActivityLabel::Gait, 1),
            window(vec![3.0], ActivityLabel::Gait, 1),
        ];
        assert!(raw_matrix(&mixed).is_err());
    }

    #[test]
    fn select_reorders_rows() {
        let windows = vec![
            window(vec![0.0; 4], ActivityLabel::Gait, 1),
            window(vec![1.0; 4], ActivityLabel::SitExtension, 2),
            window(vec![2.0; 4], ActivityLabel::StandFlexion, 3),
        ];
        let m = raw_matrix(&windows).unwrap();
        let sub = m.select(&[2, 0]);
        assert_eq!(sub.subjects, vec![3, 1]);
        assert_eq!(sub.rows[0], vec![2.0; 4]);
        assert_eq!(sub.n_columns(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shift_moves_location_and_preserves_spread(
            values in proptest::collection::vec(-100.0f64..100.0, 1..120),
            c in -50.0f64..50.0,
        ) {
            let base = feats(&values);
            let shifted_vals: Vec<f64> = values.iter().map(|v| v + c).collect();
            let shifted = feats(&shifted_vals);
            let tol = 1e-9 * (1.0 + c.abs() + base.max.abs());
            prop_assert!((shifted.min - (base.min + c)).abs() <= tol);
            prop_assert!((shifted.max - (base.max + c)).abs() <= tol);
            prop_assert!((shifted.mean - (base.mean + c)).abs() <= tol);
            prop_assert!((shifted.median - (base.median + c)).abs() <= tol);
            prop_assert!((shifted.std - base.std).abs() <= tol);
            prop_assert!((shifted.mad - base.mad).abs() <= tol);
        }

        #[test]
        fn positive_scaling_scales_every_field(
            values in proptest::collection::vec(-100.0f64..100.0, 1..120),
            a in 0.01f64..20.0,
        ) {
            let base = feats(&values);
            let scaled_vals: Vec<f64> = values.iter().map(|v| v * a).collect();
            let scaled = feats(&scaled_vals);
            let tol = 1e-9 * a * (1.0 + base.max.abs() + base.std);
            prop_assert!((scaled.min - a * base.min).abs() <= tol);
            prop_assert!((scaled.max - a * base.max).abs() <= tol);
            prop_assert!((scaled.mean - a * base.mean).abs() <= tol);
            prop_assert!((scaled.median - a * base.median).abs() <= tol);
            prop_assert!((scaled.std - a * base.std).abs() <= tol);
            prop_assert!((scaled.mad - a * base.mad).abs() <= tol);
        }
    }
}
