//! Implementations behind the subcommands. Each takes its parsed arguments
//! plus the loaded configuration file and returns the crate-wide `Result`;
//! exit-code mapping happens in `main`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use har_core::classifiers::{Algorithm, ClassifierSpec};
use har_core::dataset::{
    load_dataset, sidecar_path, synthesize_dataset, write_dataset, ActivityLabel, ColumnSchema,
    Dataset,
};
use har_core::evaluation::{benchmark_pair, cross_validate, format_combination, grid_search};
use har_core::features::extract_features;
use har_core::report::{
    grid_best_toml, grid_csv, BenchmarkReport, CellResult, ExperimentReport, ReportMeta,
};
use har_core::signal::windows_for_recording;
use har_core::{Error, PipelineConfig, Representation, Result};

use crate::config_file::FileConfig;
use crate::{
    BenchmarkArgs, EvaluateArgs, FeaturesArgs, GridsearchArgs, InspectArgs, SynthArgs,
};

/// Relative input paths are taken under the data directory when one is
/// configured; absolute paths and bare relative paths pass through.
pub fn resolve_data_path(data_dir: Option<&Path>, path: &Path) -> PathBuf {
    match data_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

/// Comma-separated algorithm tags; "all" expands to the reporting order.
/// Duplicates collapse to their first occurrence.
pub fn parse_algo_list(text: &str) -> Result<Vec<Algorithm>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let algo = Algorithm::parse(part)?;
        if !out.contains(&algo) {
            out.push(algo);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(
            "algorithm list is empty; expected tags like nb,dt or \"all\"".into(),
        ));
    }
    Ok(out)
}

/// Comma-separated representation names; "all" means raw then features.
pub fn parse_repr_list(text: &str) -> Result<Vec<Representation>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(Representation::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let repr = Representation::parse(part)?;
        if !out.contains(&repr) {
            out.push(repr);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(
            "representation list is empty; expected raw, features, or all".into(),
        ));
    }
    Ok(out)
}

fn load_data(path: &Path) -> Result<Dataset> {
    if !path.is_file() {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        });
    }
    load_dataset(path, &ColumnSchema::default())
}

fn count_windows(ds: &Dataset, cfg: &PipelineConfig) -> Result<usize> {
    let mut n = 0;
    for rec in ds.recordings() {
        n += windows_for_recording(rec, cfg)?.len();
    }
    Ok(n)
}

/// The tuned baseline for a cell, after config overrides and the optional
/// master seed. The seed is a flag, so it wins over the file.
fn build_spec(
    algorithm: Algorithm,
    representation: Representation,
    config: &FileConfig,
    master_seed: Option<u64>,
) -> Result<ClassifierSpec> {
    let mut spec = ClassifierSpec::tuned(algorithm, representation);
    config.apply_overrides(&mut spec)?;
    if let Some(seed) = master_seed.or(config.experiment.master_seed) {
        spec.random_state = seed;
    }
    Ok(spec)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn cmd_synth(args: &SynthArgs, data_dir: Option<&Path>) -> Result<()> {
    let ds = synthesize_dataset(args.subjects, args.seconds, args.seed)?;
    let path = resolve_data_path(data_dir, &args.out);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_dataset(&ds, &path)?;
    println!(
        "wrote {} recordings ({} subjects x {} activities) to {}",
        ds.len(),
        args.subjects,
        ActivityLabel::ALL.len(),
        path.display()
    );
    println!("sidecar: {}", sidecar_path(&path).display());
    Ok(())
}

pub fn cmd_evaluate(
    args: &EvaluateArgs,
    config: &FileConfig,
    data_dir: Option<&Path>,
) -> Result<()> {
    let cfg = &config.pipeline;
    let ds = load_data(&resolve_data_path(data_dir, &args.data))?;

    let algo_text = args
        .algos
        .clone()
        .or_else(|| config.experiment.algorithms.clone())
        .unwrap_or_else(|| "all".into());
    let repr_text = args
        .repr
        .clone()
        .or_else(|| config.experiment.representations.clone())
        .unwrap_or_else(|| "all".into());
    let algos = parse_algo_list(&algo_text)?;
    let reprs = parse_repr_list(&repr_text)?;

    let n_subjects = ds.subject_ids().len();
    let jobs = args
        .jobs
        .or(config.experiment.jobs)
        .unwrap_or(n_subjects.max(1));
    let out = args
        .out
        .clone()
        .or_else(|| config.experiment.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));

    let n_windows = count_windows(&ds, cfg)?;
    let mut cells = Vec::with_capacity(algos.len() * reprs.len());
    for &algo in &algos {
        for &repr in &reprs {
            let spec = build_spec(algo, repr, config, args.seed)?;
            let folds = cross_validate(&ds, &spec, repr, cfg, jobs)?;
            let cell = CellResult::from_folds(algo, repr, folds)?;
            println!(
                "{}/{}: mean accuracy {:.4}, mean auc {:.4}, train {:.3} s/fold",
                algo.tag(),
                repr.name(),
                cell.mean_accuracy,
                cell.mean_auc,
                cell.mean_train_s,
            );
            cells.push(cell);
        }
    }

    let report = ExperimentReport::new(
        ReportMeta {
            n_subjects,
            n_windows,
            pipeline: cfg.clone(),
        },
        cells,
    )?;
    report.write_all(&out)?;
    println!(
        "wrote folds.csv, metrics.csv, summary.toml under {}",
        out.display()
    );
    Ok(())
}

pub fn cmd_gridsearch(
    args: &GridsearchArgs,
    config: &FileConfig,
    data_dir: Option<&Path>,
) -> Result<()> {
    let grid = config.grid.as_ref().ok_or_else(|| {
        Error::InvalidArgument("grid search needs a [grid] table in the config file".into())
    })?;
    grid.validate()?;
    let cfg = &config.pipeline;
    let ds = load_data(&resolve_data_path(data_dir, &args.data))?;
    let repr = Representation::parse(&args.repr)?;
    let validation = args.subject.or(config.experiment.validation_subject);
    // Combinations, not folds, are the parallel unit here; the cap keeps
    // huge grids from spawning one thread each.
    let jobs = args
        .jobs
        .or(config.experiment.jobs)
        .unwrap_or_else(|| grid.n_combinations().clamp(1, 32));
    let out = args
        .out
        .clone()
        .or_else(|| config.experiment.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));

    let result = grid_search(&ds, grid, repr, cfg, validation, jobs)?;

    create_dir(&out)?;
    write_text(&out.join("grid.csv"), &grid_csv(&result))?;
    write_text(&out.join("grid_best.toml"), &grid_best_toml(&result)?)?;

    let best = result.best();
    println!(
        "evaluated {} combinations against held-out subject {}",
        result.points.len(),
        result.validation_subject,
    );
    println!(
        "best: {} (accuracy {:.4}, auc {:.4})",
        format_combination(&best.combination),
        best.accuracy,
        best.auc,
    );
    println!("wrote grid.csv, grid_best.toml under {}", out.display());
    Ok(())
}

pub fn cmd_benchmark(
    args: &BenchmarkArgs,
    config: &FileConfig,
    data_dir: Option<&Path>,
) -> Result<()> {
    let cfg = &config.pipeline;
    let ds = load_data(&resolve_data_path(data_dir, &args.data))?;
    let algo_text = args
        .algos
        .clone()
        .or_else(|| config.experiment.algorithms.clone())
        .unwrap_or_else(|| "all".into());
    let algos = parse_algo_list(&algo_text)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.experiment.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));

    let mut cells = Vec::with_capacity(algos.len());
    for &algo in &algos {
        let spec_raw = build_spec(algo, Representation::Raw, config, args.seed)?;
        let spec_features = build_spec(algo, Representation::Features, config, args.seed)?;
        let cell = benchmark_pair(&ds, &spec_raw, &spec_features, cfg, args.repeats)?;
        println!(
            "{}: train {:.4} s -> {:.4} s ({:+.1}%), test {:.4} s -> {:.4} s ({:+.1}%)",
            algo.tag(),
            cell.train_s_raw,
            cell.train_s_features,
            cell.train_delta_pct,
            cell.test_s_raw,
            cell.test_s_features,
            cell.test_delta_pct,
        );
        cells.push(cell);
    }

    let report = BenchmarkReport {
        repeats: args.repeats,
        notes: args.notes.clone().unwrap_or_default(),
        cells,
    };
    report.write_all(&out)?;
    println!("wrote benchmark.csv, benchmark.toml under {}", out.display());
    Ok(())
}

pub fn cmd_features(
    args: &FeaturesArgs,
    config: &FileConfig,
    data_dir: Option<&Path>,
) -> Result<()> {
    let cfg = &config.pipeline;
    cfg.validate()?;
    let ds = load_data(&resolve_data_path(data_dir, &args.data))?;
    let repr = Representation::parse(&args.repr)?;

    let mut out = String::new();
    match repr {
        Representation::Features => {
            out.push_str("subject,activity,window,min,max,mean,median,std,mad\n");
        }
        Representation::Raw => {
            out.push_str("subject,activity,window");
            for i in 0..cfg.window_size {
                write!(out, ",s{i}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
    }

    let mut rows = 0usize;
    for rec in ds.recordings() {
        for (index, window) in windows_for_recording(rec, cfg)?.iter().enumerate() {
            write!(
                out,
                "{},{},{index}",
                window.subject_id,
                window.label.canonical_name(),
            )
            .expect("writing to a String cannot fail");
            let values: Vec<f64> = match repr {
                Representation::Features => {
                    extract_features(&window.values, cfg.median_mode)?.as_array().to_vec()
                }
                Representation::Raw => window.values.clone(),
            };
            for v in values {
                write!(out, ",{v}").expect("writing to a String cannot fail");
            }
            out.push('\n');
            rows += 1;
        }
    }

    write_text(&args.out, &out)?;
    println!(
        "wrote {rows} {} rows to {}",
        repr.name(),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_inspect(
    args: &InspectArgs,
    config: &FileConfig,
    data_dir: Option<&Path>,
) -> Result<()> {
    let cfg = &config.pipeline;
    cfg.validate()?;
    let path = resolve_data_path(data_dir, &args.data);
    let ds = load_data(&path)?;

    let subjects = ds.subject_ids();
    let subject_list = subjects
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(", ");
    println!("dataset: {}", path.display());
    println!("recordings: {}", ds.len());
    println!("subjects ({}): {subject_list}", subjects.len());

    let rate = ds.recordings()[0].source_rate_hz;
    let mut min_s = f64::INFINITY;
    let mut max_s = 0.0f64;
    let mut per_activity: BTreeMap<ActivityLabel, usize> = BTreeMap::new();
    for rec in ds.recordings() {
        min_s = min_s.min(rec.duration_s());
        max_s = max_s.max(rec.duration_s());
        *per_activity.entry(rec.activity).or_insert(0) += 1;
    }
    println!("source rate: {rate} Hz");
    let activity_list = per_activity
        .iter()
        .map(|(a, n)| format!("{} x{n}", a.canonical_name()))
        .collect::<Vec<_>>()
        .join(", ");
    println!("activities: {activity_list}");
    println!("duration per recording: {min_s:.1} s min, {max_s:.1} s max");

    println!(
        "pipeline: cutoff {} Hz order {}, target {} Hz, window {}, stride {}",
        cfg.cutoff_hz, cfg.filter_order, cfg.target_hz, cfg.window_size, cfg.stride
    );
    let mut window_counts: BTreeMap<ActivityLabel, usize> = BTreeMap::new();
    let mut total = 0usize;
    for rec in ds.recordings() {
        let n = windows_for_recording(rec, cfg)?.len();
        *window_counts.entry(rec.activity).or_insert(0) += n;
        total += n;
    }
    println!("windows: {total} total");
    for (activity, n) in &window_counts {
        println!("  {}: {n}", activity.canonical_name());
    }
    Ok(())
}
