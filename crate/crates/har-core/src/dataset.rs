//! Dataset loading, filtering, and synthetic data generation.
//!
//! The interchange format is a delimited text file with the header
//! `subject,activity,ordinal,angle_deg` plus a sidecar `<stem>.meta.toml`
//! carrying the source sample rate. Rows belonging to one
//! (subject, activity) recording must appear with strictly increasing
//! ordinals; the loader rejects duplicates and out-of-order rows instead
//! of silently sorting.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three activities recognisable from the knee channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityLabel {
    /// Walking / marching.
    Gait,
    /// Extension of the leg from a seated position.
    SitExtension,
    /// Flexion of the knee from a standing position.
    StandFlexion,
}

impl ActivityLabel {
    pub const ALL: [ActivityLabel; 3] = [
        ActivityLabel::Gait,
        ActivityLabel::SitExtension,
        ActivityLabel::StandFlexion,
    ];

    /// Stable integer code used as the class index everywhere downstream.
    pub fn code(self) -> usize {
        match self {
            ActivityLabel::Gait => 0,
            ActivityLabel::SitExtension => 1,
            ActivityLabel::StandFlexion => 2,
        }
    }

    pub fn from_code(code: usize) -> Option<ActivityLabel> {
        ActivityLabel::ALL.get(code).copied()
    }

    /// Canonical name used when writing the interchange format.
    pub fn canonical_name(self) -> &'static str {
        match self {
            ActivityLabel::Gait => "gait",
            ActivityLabel::SitExtension => "sit_extension",
            ActivityLabel::StandFlexion => "stand_flexion",
        }
    }

    /// Parse an activity name, case-insensitively, accepting a few aliases
    /// ("march" for gait, punctuation variants of the two exercises).
    pub fn parse(name: &str) -> Option<ActivityLabel> {
        let norm: String = name
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == '-' || c == ' ' { '_' } else { c })
            .collect();
        match norm.as_str() {
            "gait" | "march" | "walk" | "walking" => Some(ActivityLabel::Gait),
            "sit_extension" | "sitextension" | "extension_from_sit" | "sit_ext" => {
                Some(ActivityLabel::SitExtension)
            }
            "stand_flexion" | "standflexion" | "flexion_from_stand" | "stand_flex" => {
                Some(ActivityLabel::StandFlexion)
            }
            _ => None,
        }
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical_name())
    }
}

/// One subject performing one activity: a single knee-angle series at the
/// source sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    pub subject_id: u32,
    pub activity: ActivityLabel,
    /// Knee angle in degrees, in sample order.
    pub samples: Vec<f64>,
    pub source_rate_hz: f64,
}

impl RawRecording {
    pub fn new(
        subject_id: u32,
        activity: ActivityLabel,
        samples: Vec<f64>,
        source_rate_hz: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "recording {subject_id}/{activity} has no samples"
            )));
        }
        if !(source_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "source_rate_hz must be positive, got {source_rate_hz}"
            )));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "recording {subject_id}/{activity} contains a non-finite angle {bad}"
            )));
        }
        Ok(RawRecording {
            subject_id,
            activity,
            samples,
            source_rate_hz,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.source_rate_hz
    }
}

/// An immutable collection of recordings with at most one recording per
/// (subject, activity) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    recordings: Vec<RawRecording>,
    subject_ids: Vec<u32>,
}

impl Dataset {
    /// Build a dataset, validating the one-recording-per-pair invariant.
    pub fn new(recordings: Vec<RawRecording>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for rec in &recordings {
            if !seen.insert((rec.subject_id, rec.activity)) {
                return Err(Error::DuplicateRecording {
                    subject: rec.subject_id,
                    activity: rec.activity.to_string(),
                });
            }
        }
        let subject_ids: Vec<u32> = recordings
            .iter()
            .map(|r| r.subject_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Dataset {
            recordings,
            subject_ids,
        })
    }

    pub fn recordings(&self) -> &[RawRecording] {
        &self.recordings
    }

    /// Distinct subject ids in ascending order.
    pub fn subject_ids(&self) -> &[u32] {
        &self.subject_ids
    }

    pub fn len(&self) -> usize {
        self.recordings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recordings.is_empty()
    }
}

/// Maps the interchange columns onto the caller's header names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSchema {
    pub subject: String,
    pub activity: String,
    pub ordinal: String,
    pub angle: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            subject: "subject".into(),
            activity: "activity".into(),
            ordinal: "ordinal".into(),
            angle: "angle_deg".into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarMeta {
    source_rate_hz: f64,
}

/// Path of the metadata sidecar that accompanies a dataset file.
pub fn sidecar_path(data_path: &Path) -> PathBuf {
    let stem = data_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    data_path.with_file_name(format!("{stem}.meta.toml"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Load a dataset from the interchange format.
///
/// Recordings are grouped by (subject, activity) in order of first
/// appearance; within a group, ordinals must be strictly increasing.
pub fn load_dataset(path: &Path, schema: &ColumnSchema) -> Result<Dataset> {
    let meta_path = sidecar_path(path);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: SidecarMeta = toml::from_str(&meta_text).map_err(|e| Error::Parse {
        path: meta_path.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    if !(meta.source_rate_hz > 0.0) {
        return Err(Error::Parse {
            path: meta_path,
            line: 0,
            message: format!("source_rate_hz must be positive, got {}", meta.source_rate_hz),
        });
    }

    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("missing column {name:?} in header"),
            })
    };
    let subject_col = col(&schema.subject)?;
    let activity_col = col(&schema.activity)?;
    let ordinal_col = col(&schema.ordinal)?;
    let angle_col = col(&schema.angle)?;

    // Group index in first-appearance order.
    let mut groups: Vec<(u32, ActivityLabel, Vec<f64>, u64)> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .position()
                .map(|p| p.line())
                .unwrap_or_default(),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or_default();
        let field = |idx: usize, what: &str| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("row has no {what} field"),
            })
        };
        let parse_err = |what: &str, raw: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("cannot parse {what} from {raw:?}"),
        };

        let subject_raw = field(subject_col, "subject")?;
        let subject: u32 = subject_raw
            .trim()
            .parse()
            .map_err(|_| parse_err("subject id", subject_raw))?;
        let activity_raw = field(activity_col, "activity")?;
        let activity =
            ActivityLabel::parse(activity_raw).ok_or_else(|| Error::UnknownActivity {
                path: path.to_path_buf(),
                line,
                name: activity_raw.to_string(),
            })?;
        let ordinal_raw = field(ordinal_col, "ordinal")?;
        let ordinal: u64 = ordinal_raw
            .trim()
            .parse()
            .map_err(|_| parse_err("ordinal", ordinal_raw))?;
        let angle_raw = field(angle_col, "angle")?;
        let angle: f64 = angle_raw
            .trim()
            .parse()
            .map_err(|_| parse_err("angle", angle_raw))?;
        if !angle.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("angle {angle} is not finite"),
            });
        }

        match groups
            .iter_mut()
            .find(|(s, a, _, _)| *s == subject && *a == activity)
        {
            Some((_, _, samples, last_ordinal)) => {
                if ordinal == *last_ordinal {
                    return Err(Error::DuplicateSample {
                        subject,
                        activity: activity.to_string(),
                        ordinal,
                        line,
                    });
                }
                if ordinal < *last_ordinal {
                    return Err(Error::NonMonotonicOrdinal {
                        subject,
                        activity: activity.to_string(),
                        ordinal,
                        previous: *last_ordinal,
                        line,
                    });
                }
                samples.push(angle);
                *last_ordinal = ordinal;
            }
            None => groups.push((subject, activity, vec![angle], ordinal)),
        }
    }

    let recordings = groups
        .into_iter()
        .map(|(subject, activity, samples, _)| {
            RawRecording::new(subject, activity, samples, meta.source_rate_hz)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(recordings)
}

/// Write a dataset in the interchange format (data file plus sidecar).
///
/// All recordings must share one source rate; the sidecar carries it.
pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let rate = match ds.recordings().first() {
        Some(first) => first.source_rate_hz,
        None => return Err(Error::InvalidArgument("cannot write an empty dataset".into())),
    };
    if let Some(other) = ds
        .recordings()
        .iter()
        .find(|r| r.source_rate_hz != rate)
    {
        return Err(Error::InvalidArgument(format!(
            "mixed source rates ({} vs {}); the interchange sidecar holds a single rate",
            rate, other.source_rate_hz
        )));
    }

    let meta_path = sidecar_path(path);
    let meta = toml::to_string(&SidecarMeta {
        source_rate_hz: rate,
    })
    .map_err(|e| Error::Serialize(e.to_string()))?;
    std::fs::write(&meta_path, meta).map_err(io_err(&meta_path))?;

    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "subject,activity,ordinal,angle_deg").map_err(io_err(path))?;
    for rec in ds.recordings() {
        for (i, angle) in rec.samples.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                rec.subject_id,
                rec.activity.canonical_name(),
                i,
                angle
            )
            .map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

/// Keep only the recordings of the given subjects, preserving order.
pub fn filter_subjects(ds: &Dataset, keep: &BTreeSet<u32>) -> Result<Dataset> {
    if keep.is_empty() {
        return Err(Error::EmptySubjectFilter);
    }
    let known: BTreeSet<u32> = ds.subject_ids().iter().copied().collect();
    if let Some(&unknown) = keep.difference(&known).next() {
        return Err(Error::UnknownSubject(unknown));
    }
    let recordings = ds
        .recordings()
        .iter()
        .filter(|r| keep.contains(&r.subject_id))
        .cloned()
        .collect();
    Dataset::new(recordings)
}

/// Source rate of synthesized datasets. An integer multiple of the 40 Hz
/// pipeline target so the decimation precondition holds out of the box.
pub const SYNTH_SOURCE_RATE_HZ: f64 = 200.0;

/// Angle clamp applied to synthesized signals, in degrees.
pub const SYNTH_ANGLE_RANGE: (f64, f64) = (0.0, 120.0);

// Stable mixer for deriving per-recording seeds; splitmix64 finalizer.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generate a deterministic surrogate dataset: per subject, one quasi-periodic
/// knee-angle signal per activity.
///
/// Each signal is a sum of two harmonics of a base cycle plus Gaussian noise,
/// clamped to `SYNTH_ANGLE_RANGE`. The gait cycle is roughly a third of the
/// two exercise cycles, and the three activities occupy distinct angle bands
/// so that windows are separable by their order statistics.
pub fn synthesize_dataset(n_subjects: u32, duration_s: f64, seed: u64) -> Result<Dataset> {
    if n_subjects < 2 {
        return Err(Error::InvalidArgument(format!(
            "synthesis needs at least 2 subjects, got {n_subjects}"
        )));
    }
    if !(duration_s >= 4.0) {
        return Err(Error::InvalidArgument(format!(
            "synthesis needs at least 4 seconds per recording, got {duration_s}"
        )));
    }

    let rate = SYNTH_SOURCE_RATE_HZ;
    let n_samples = (duration_s * rate).round() as usize;
    let mut recordings = Vec::with_capacity(n_subjects as usize * 3);

    for subject in 1..=n_subjects {
        // Per-subject gait tempo; the two exercises are slower by 2.9-3.5x.
        let mut subject_rng =
            ChaCha8Rng::seed_from_u64(mix_seed(seed, u64::from(subject) << 8));
        let gait_period_s: f64 = subject_rng.random_range(0.90..1.15);

        for activity in ActivityLabel::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
                seed,
                (u64::from(subject) << 8) | (activity.code() as u64 + 1),
            ));
            let (period_s, offset, amp1, amp2) = match activity {
                ActivityLabel::Gait => (
                    gait_period_s,
                    rng.random_range(28.0..34.0),
                    rng.random_range(12.0..16.0),
                    rng.random_range(4.0..7.0),
                ),
                ActivityLabel::SitExtension => (
                    gait_period_s * rng.random_range(2.9..3.5),
                    rng.random_range(62.0..72.0),
                    rng.random_range(20.0..26.0),
                    rng.random_range(4.0..8.0),
                ),
                ActivityLabel::StandFlexion => (
                    gait_period_s * rng.random_range(2.9..3.5),
                    rng.random_range(8.0..14.0),
                    rng.random_range(14.0..18.0),
                    rng.random_range(3.0..6.0),
                ),
            };
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let harmonic_shift: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let noise_std: f64 = rng.random_range(0.5..1.5);
            let noise = Normal::new(0.0, noise_std).expect("positive std");

            let omega = std::f64::consts::TAU / period_s;
            let samples: Vec<f64> = (0..n_samples)
                .map(|i| {
                    let t = i as f64 / rate;
                    let angle = offset
                        + amp1 * (omega * t + phase).sin()
                        + amp2 * (2.0 * omega * t + 2.0 * phase + harmonic_shift).sin()
                        + noise.sample(&mut rng);
                    angle.clamp(SYNTH_ANGLE_RANGE.0, SYNTH_ANGLE_RANGE.1)
                })
                .collect();

            recordings.push(RawRecording::new(subject, activity, samples, rate)?);
        }
    }

    Dataset::new(recordings)
}
