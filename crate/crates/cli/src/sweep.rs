//! Resumable sweeps and the full reproduction run.
//!
//! Layout under the output directory:
//!
//! ```text
//! data/train_n{n}.alds, data/test_n{n}.alds
//! models/n{n}_{arch}.json    trained networks
//! cells/n{n}_{arch}.json     per-cell scores, keyed by data digests and training config
//! sweep_points.csv, sweep_width.csv
//! figures/n20_{arch}_scatter.{csv,svg}, figures/n20_{arch}_report.json
//! summary.json, manifest.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use aldsat::dataset::{self, percentile, Dataset, STANDARD_POINT_COUNTS};
use aldsat::evaluation::{self, SweepData, SweepSummary, DEFAULT_WIDTHS};
use aldsat::neuralnet::{self, hidden_label as hidden_label_of, TrainConfig};
use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::{ensure_stats, evaluation_error, write_report_files};
use crate::config::{check_point_count, parse_hidden, prepare_dir, DataSettings, RunConfig};
use crate::manifest::{sha256_file, FileDigest, Manifest, Seeds};
use crate::{usage, CliError, CliResult, ReproduceArgs, Scale, SweepArgs, SweepPointsArgs, SweepWidthArgs};

/// Point count used for the width sweep and the headline models.
pub const REFERENCE_POINTS: usize = 20;
pub const DEFAULT_ARCHS: [&str; 3] = ["none", "30", "30,10"];

/// Resolved settings shared by every cell of a study.
#[derive(Debug, Clone)]
pub struct Study {
    pub out: PathBuf,
    pub data: DataSettings,
    pub train_samples: usize,
    pub test_samples: usize,
    pub config: TrainConfig,
    pub workers: usize,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CellKey {
    n_points: usize,
    hidden: Vec<usize>,
    train_sha256: String,
    test_sha256: String,
    config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub n_points: usize,
    key: serde_json::Value,
    pub arch: String,
    pub hidden: Vec<usize>,
    pub param_count: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
    pub mean_eps: f64,
    pub std_eps: f64,
    pub mse_log: f64,
    pub n_samples: usize,
    pub model: String,
    pub model_sha256: String,
}

impl CellRecord {
    pub fn summary(&self) -> SweepSummary {
        SweepSummary {
            n_points: self.n_points,
            arch: self.arch.clone(),
            mean_eps: self.mean_eps,
            std_eps: self.std_eps,
            mse_log: self.mse_log,
        }
    }
}

/// Loaded train/test pair and the digests of their files.
pub struct DataPair {
    pub n_points: usize,
    pub train: Dataset,
    pub test: Dataset,
    pub train_path: PathBuf,
    pub test_path: PathBuf,
    train_sha256: String,
    test_sha256: String,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CellCounts {
    pub computed: usize,
    pub reused: usize,
}

impl Study {
    fn data_dir(&self) -> PathBuf {
        self.out.join("data")
    }

    pub fn model_path(&self, n: usize, hidden: &[usize]) -> PathBuf {
        self.out.join("models").join(format!("n{n}_{}.json", hidden_label_of(hidden)))
    }

    fn cell_path(&self, n: usize, hidden: &[usize]) -> PathBuf {
        self.out.join("cells").join(format!("n{n}_{}.json", hidden_label_of(hidden)))
    }

    fn prepare(&self) -> CliResult<()> {
        for dir in [self.out.clone(), self.data_dir(), self.out.join("models"), self.out.join("cells")] {
            prepare_dir(&dir)?;
        }
        Ok(())
    }

    /// Loads the split at `path` if it matches `meta` and `n`, else regenerates it.
    fn ensure_split(&self, path: &Path, meta: &dataset::DatasetMeta, n: usize) -> anyhow::Result<Dataset> {
        if let Ok(ds) = dataset::load(path) {
            if ds.meta == *meta && ds.len() == n {
                return Ok(ds);
            }
        }
        let ds = dataset::generate_dataset(meta, n, self.workers)
            .with_context(|| format!("generating {}", path.display()))?;
        dataset::save(&ds, path).with_context(|| format!("writing {}", path.display()))?;
        Ok(ds)
    }

    pub fn ensure_data(&self, n_points: usize) -> CliResult<DataPair> {
        let train_path = self.data_dir().join(format!("train_n{n_points}.alds"));
        let test_path = self.data_dir().join(format!("test_n{n_points}.alds"));
        let mut train = self.ensure_split(
            &train_path,
            &self.data.meta(n_points, self.data.seed),
            self.train_samples,
        )?;
        let test = self.ensure_split(
            &test_path,
            &self.data.meta(n_points, self.data.test_seed()),
            self.test_samples,
        )?;
        ensure_stats(&mut train)?;
        Ok(DataPair {
            n_points,
            train_sha256: sha256_file(&train_path)?,
            test_sha256: sha256_file(&test_path)?,
            train,
            test,
            train_path,
            test_path,
        })
    }

    fn cached(&self, n: usize, hidden: &[usize], key: &serde_json::Value) -> Option<CellRecord> {
        if self.force {
            return None;
        }
        let text = fs::read_to_string(self.cell_path(n, hidden)).ok()?;
        let record: CellRecord = serde_json::from_str(&text).ok()?;
        let model = self.out.join(&record.model);
        (record.key == *key && sha256_file(&model).ok()? == record.model_sha256).then_some(record)
    }

    fn compute_cell(&self, pair: &DataPair, hidden: &[usize], key: serde_json::Value) -> CliResult<CellRecord> {
        let data = SweepData {
            train: &pair.train,
            test: &pair.test,
        };
        let arch = neuralnet::Architecture::for_profile(pair.n_points, hidden)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let (mlp, train_report) = neuralnet::fit(arch.clone(), data.train, &self.config).context("training")?;
        let report = evaluation::evaluate(&mlp, data.test).map_err(evaluation_error)?;
        let model_path = self.model_path(pair.n_points, hidden);
        neuralnet::save_model(&mlp, Some(&self.config), &model_path).context("writing model")?;
        let record = CellRecord {
            n_points: pair.n_points,
            key,
            arch: arch.label(),
            hidden: hidden.to_vec(),
            param_count: arch.param_count(),
            initial_loss: train_report.initial_loss,
            final_loss: train_report.final_loss(),
            epoch_losses: train_report.epoch_losses,
            mean_eps: report.mean_eps,
            std_eps: report.std_eps,
            mse_log: report.mse_log,
            n_samples: report.n_samples,
            model: relative(&model_path, &self.out),
            model_sha256: sha256_file(&model_path)?,
        };
        let mut text = serde_json::to_string_pretty(&record).context("encoding cell")?;
        text.push('\n');
        fs::write(self.cell_path(pair.n_points, hidden), text).context("writing cell")?;
        Ok(record)
    }

    /// Runs (or reuses) every `(n_points, hidden)` cell, returning records in
    /// the order given.
    pub fn run_cells(&self, pairs: &[DataPair], cells: &[(usize, Vec<usize>)]) -> CliResult<(Vec<CellRecord>, CellCounts)> {
        let one = |(n, hidden): &(usize, Vec<usize>)| -> CliResult<(CellRecord, bool)> {
            let pair = pairs
                .iter()
                .find(|p| p.n_points == *n)
                .ok_or_else(|| CliError::Internal(anyhow::anyhow!("no data for {n} points")))?;
            let key = serde_json::to_value(CellKey {
                n_points: *n,
                hidden: hidden.clone(),
                train_sha256: pair.train_sha256.clone(),
                test_sha256: pair.test_sha256.clone(),
                config: self.config,
            })
            .context("encoding cell key")?;
            if let Some(record) = self.cached(*n, hidden, &key) {
                eprintln!("cell n={n} {}: reused std_eps={:.4}", record.arch, record.std_eps);
                return Ok((record, false));
            }
            let record = self.compute_cell(pair, hidden, key)?;
            eprintln!("cell n={n} {}: computed std_eps={:.4}", record.arch, record.std_eps);
            Ok((record, true))
        };
        let results: Vec<CliResult<(CellRecord, bool)>> = if self.workers <= 1 {
            cells.iter().map(one).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .context("worker pool")?;
            pool.install(|| cells.par_iter().map(one).collect())
        };
        let mut counts = CellCounts::default();
        let mut records = Vec::with_capacity(cells.len());
        for r in results {
            let (record, computed) = r?;
            if computed {
                counts.computed += 1;
            } else {
                counts.reused += 1;
            }
            records.push(record);
        }
        Ok((records, counts))
    }

    fn manifest(&self, command: &'static str, extra: serde_json::Value) -> Manifest {
        let mut m = Manifest::new(
            command,
            Seeds {
                data: Some(self.data.seed),
                training: Some(self.config.init_seed),
            },
            json!({
                "train_samples": self.train_samples,
                "test_samples": self.test_samples,
                "data": self.data,
                "config": self.config,
                "sweep": extra,
            }),
        );
        m.training = Some(self.config.summary());
        m
    }
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

fn study(args: &SweepArgs, defaults: (usize, usize, Option<usize>)) -> CliResult<(Study, RunConfig)> {
    let cfg = RunConfig::from_common(&args.common)?;
    let mut config = cfg.train_config(&args.training)?;
    if args.training.epochs.is_none() && cfg.epochs.is_none() {
        if let Some(e) = defaults.2 {
            config.epochs = e;
        }
    }
    let train_samples = args.train_samples.or(cfg.train_samples).unwrap_or(defaults.0);
    let test_samples = args.test_samples.or(cfg.test_samples).unwrap_or(defaults.1);
    if train_samples < 2 || test_samples < 1 {
        return usage("need at least 2 training and 1 test sample");
    }
    let s = Study {
        out: args.out.clone(),
        data: cfg.data_settings(&args.data)?,
        train_samples,
        test_samples,
        config,
        workers: cfg.workers(&args.common)?,
        force: args.force,
    };
    s.prepare()?;
    Ok((s, cfg))
}

fn write_outputs(
    study: &Study,
    manifest: &mut Manifest,
    pairs: &[DataPair],
    records: &[CellRecord],
    files: &[PathBuf],
    config_path: Option<&Path>,
) -> CliResult<()> {
    if let Some(p) = config_path {
        manifest.inputs.push(FileDigest::of(p, None)?);
    }
    for pair in pairs {
        manifest.outputs.push(FileDigest::of(&pair.train_path, Some(&study.out))?);
        manifest.outputs.push(FileDigest::of(&pair.test_path, Some(&study.out))?);
    }
    for r in records {
        manifest.outputs.push(FileDigest::of(&study.out.join(&r.model), Some(&study.out))?);
    }
    for f in files {
        manifest.outputs.push(FileDigest::of(f, Some(&study.out))?);
    }
    Ok(())
}

fn print_rows(rows: &[SweepSummary]) {
    println!("n_points arch        mean_eps   std_eps");
    for r in rows {
        println!("{:>8} {:<10} {:>9.5} {:>9.5}", r.n_points, r.arch, r.mean_eps, r.std_eps);
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepSummary>,
    pub counts: CellCounts,
    pub csv: PathBuf,
}

pub fn sweep_points_cmd(args: &SweepPointsArgs) -> CliResult<SweepOutcome> {
    let (study, cfg) = study(&args.sweep, (100_000, 10_000, None))?;
    let counts = args
        .points
        .clone()
        .or(cfg.point_counts.clone())
        .unwrap_or_else(|| STANDARD_POINT_COUNTS.iter().rev().copied().collect());
    for &n in &counts {
        check_point_count(n, args.allow_custom)?;
    }
    let arch_specs: Vec<String> = args
        .archs
        .clone()
        .or(cfg.archs.clone())
        .unwrap_or_else(|| DEFAULT_ARCHS.iter().map(|s| s.to_string()).collect());
    let archs = arch_specs.iter().map(|s| parse_hidden(s)).collect::<CliResult<Vec<_>>>()?;

    let pairs = counts.iter().map(|&n| study.ensure_data(n)).collect::<CliResult<Vec<_>>>()?;
    let cells: Vec<(usize, Vec<usize>)> = counts
        .iter()
        .flat_map(|&n| archs.iter().map(move |h| (n, h.clone())))
        .collect();
    let (records, cell_counts) = study.run_cells(&pairs, &cells)?;
    let rows: Vec<SweepSummary> = records.iter().map(CellRecord::summary).collect();
    let csv = study.out.join("sweep_points.csv");
    evaluation::write_sweep_csv(&rows, &csv).context("writing sweep CSV")?;

    let mut manifest = study.manifest("sweep-points", json!({ "points": counts, "archs": arch_specs }));
    write_outputs(&study, &mut manifest, &pairs, &records, &[csv.clone()], args.sweep.common.config.as_deref())?;
    manifest.write(&study.out.join("sweep_points.manifest.json"))?;
    print_rows(&rows);
    println!("cells computed={} reused={}", cell_counts.computed, cell_counts.reused);
    Ok(SweepOutcome {
        rows,
        counts: cell_counts,
        csv,
    })
}

pub fn sweep_width_cmd(args: &SweepWidthArgs) -> CliResult<SweepOutcome> {
    let (study, cfg) = study(&args.sweep, (100_000, 10_000, None))?;
    let widths = args
        .widths
        .clone()
        .or(cfg.widths.clone())
        .unwrap_or_else(|| DEFAULT_WIDTHS.to_vec());
    if widths.is_empty() || widths.contains(&0) {
        return usage("--widths must list positive widths");
    }
    let n = args.points.or(cfg.points).unwrap_or(REFERENCE_POINTS);
    check_point_count(n, args.allow_custom)?;

    let pairs = vec![study.ensure_data(n)?];
    let cells: Vec<(usize, Vec<usize>)> = widths.iter().map(|&m| (n, vec![m])).collect();
    let (records, cell_counts) = study.run_cells(&pairs, &cells)?;
    let rows: Vec<SweepSummary> = records.iter().map(CellRecord::summary).collect();
    let csv = study.out.join("sweep_width.csv");
    evaluation::write_sweep_csv(&rows, &csv).context("writing sweep CSV")?;

    let mut manifest = study.manifest("sweep-width", json!({ "points": n, "widths": widths }));
    write_outputs(&study, &mut manifest, &pairs, &records, &[csv.clone()], args.sweep.common.config.as_deref())?;
    manifest.write(&study.out.join("sweep_width.manifest.json"))?;
    print_rows(&rows);
    println!("cells computed={} reused={}", cell_counts.computed, cell_counts.reused);
    Ok(SweepOutcome {
        rows,
        counts: cell_counts,
        csv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub architecture: Vec<usize>,
    pub param_count: usize,
    pub mean_eps: f64,
    pub std_eps: f64,
    pub mse_log: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Every metric the reproduction run reports, with the pass/fail of each gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scale: String,
    pub data_seed: u64,
    pub training_seed: u64,
    pub train_samples: usize,
    pub test_samples: usize,
    pub training: String,
    /// One hidden layer of 30 on 20 points.
    pub param_count: usize,
    pub t_sat_p1: f64,
    pub t_sat_p99: f64,
    pub t_sat_ratio: f64,
    pub models: BTreeMap<String, ModelMetrics>,
    pub point_sweep: Vec<SweepSummary>,
    pub width_sweep: Vec<SweepSummary>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub deep_std_eps: f64,
    pub deep_mean_eps: f64,
    pub shallow_factor: f64,
    pub n8_factor: f64,
    pub m20_factor: f64,
    pub m2_factor: f64,
    pub t_sat_ratio: f64,
}

impl Thresholds {
    /// Absolute error gates double at reduced scale.
    pub fn for_scale(scale: Scale) -> Self {
        let relax = if scale == Scale::Paper { 1.0 } else { 2.0 };
        Self {
            deep_std_eps: 0.05 * relax,
            deep_mean_eps: 0.02 * relax,
            shallow_factor: 3.0,
            n8_factor: 2.0,
            m20_factor: 1.5,
            m2_factor: 2.0,
            t_sat_ratio: 100.0,
        }
    }
}

pub struct ReproduceOutcome {
    pub summary: Summary,
    pub counts: CellCounts,
    pub summary_path: PathBuf,
}

fn scale_defaults(scale: Scale) -> (usize, usize, Option<usize>) {
    match scale {
        Scale::Ci => (10_000, 1_000, Some(30)),
        Scale::Paper => (100_000, 10_000, Some(100)),
    }
}

pub fn reproduce_cmd(args: &ReproduceArgs) -> CliResult<ReproduceOutcome> {
    let (study, _) = study(&args.sweep, scale_defaults(args.scale))?;
    let counts: Vec<usize> = STANDARD_POINT_COUNTS.iter().rev().copied().collect();
    let archs: Vec<Vec<usize>> = DEFAULT_ARCHS.iter().map(|s| parse_hidden(s)).collect::<CliResult<_>>()?;
    let pairs = counts.iter().map(|&n| study.ensure_data(n)).collect::<CliResult<Vec<_>>>()?;

    let mut cells: Vec<(usize, Vec<usize>)> = counts
        .iter()
        .flat_map(|&n| archs.iter().map(move |h| (n, h.clone())))
        .collect();
    let point_cells = cells.len();
    for &m in &DEFAULT_WIDTHS {
        let cell = (REFERENCE_POINTS, vec![m]);
        if !cells.contains(&cell) {
            cells.push(cell);
        }
    }
    let (records, cell_counts) = study.run_cells(&pairs, &cells)?;
    let find = |n: usize, hidden: &[usize]| {
        records
            .iter()
            .find(|r| r.n_points == n && r.hidden == hidden)
            .expect("every requested cell has a record")
    };
    let point_rows: Vec<SweepSummary> = records[..point_cells].iter().map(CellRecord::summary).collect();
    let width_rows: Vec<SweepSummary> = DEFAULT_WIDTHS
        .iter()
        .map(|&m| find(REFERENCE_POINTS, &[m]).summary())
        .collect();
    let points_csv = study.out.join("sweep_points.csv");
    let width_csv = study.out.join("sweep_width.csv");
    evaluation::write_sweep_csv(&point_rows, &points_csv).context("writing sweep CSV")?;
    evaluation::write_sweep_csv(&width_rows, &width_csv).context("writing sweep CSV")?;

    let reference = pairs
        .iter()
        .find(|p| p.n_points == REFERENCE_POINTS)
        .expect("reference point count is generated");
    let figures = study.out.join("figures");
    prepare_dir(&figures)?;
    let mut files = vec![points_csv, width_csv];
    let mut models = BTreeMap::new();
    for hidden in &archs {
        let record = find(REFERENCE_POINTS, hidden);
        let (mlp, _) = neuralnet::load_model(study.out.join(&record.model)).context("reloading model")?;
        let report = evaluation::evaluate(&mlp, &reference.test).map_err(evaluation_error)?;
        let stem = format!("n{REFERENCE_POINTS}_{}_", record.arch);
        files.extend(write_report_files(&report, &figures, &stem)?);
        models.insert(
            record.arch.clone(),
            ModelMetrics {
                architecture: mlp.architecture.dims().to_vec(),
                param_count: record.param_count,
                mean_eps: report.mean_eps,
                std_eps: report.std_eps,
                mse_log: report.mse_log,
                initial_loss: record.initial_loss,
                final_loss: record.final_loss,
            },
        );
    }

    let mut t_sat: Vec<f64> = reference.train.records.iter().map(|r| r.saturation_time).collect();
    t_sat.sort_by(f64::total_cmp);
    let (p1, p99) = (percentile(&t_sat, 1.0), percentile(&t_sat, 99.0));

    let std_at = |n: usize, h: &[usize]| find(n, h).std_eps;
    let deep = &models["h30"];
    let shallow = &models["shallow"];
    let mut metrics = BTreeMap::new();
    metrics.insert("deep1_std_eps".to_string(), deep.std_eps);
    metrics.insert("deep1_mean_eps".to_string(), deep.mean_eps);
    metrics.insert("deep2_std_eps".to_string(), models["h30-10"].std_eps);
    metrics.insert("shallow_std_eps".to_string(), shallow.std_eps);
    metrics.insert("shallow_over_deep1".to_string(), shallow.std_eps / deep.std_eps);
    for n in STANDARD_POINT_COUNTS {
        metrics.insert(format!("points_std_eps_n{n}"), std_at(n, &[30]));
    }
    metrics.insert("n8_over_n20".to_string(), std_at(8, &[30]) / std_at(20, &[30]));
    for m in DEFAULT_WIDTHS {
        metrics.insert(format!("width_std_eps_m{m}"), std_at(REFERENCE_POINTS, &[m]));
    }
    let m30 = std_at(REFERENCE_POINTS, &[30]);
    metrics.insert("m20_over_m30".to_string(), std_at(REFERENCE_POINTS, &[20]) / m30);
    metrics.insert("m2_over_m30".to_string(), std_at(REFERENCE_POINTS, &[2]) / m30);
    metrics.insert("t_sat_ratio".to_string(), p99 / p1);

    let th = Thresholds::for_scale(args.scale);
    let mut checks = BTreeMap::new();
    checks.insert("deep1_std_eps".to_string(), deep.std_eps <= th.deep_std_eps);
    checks.insert("deep1_mean_eps".to_string(), deep.mean_eps.abs() <= th.deep_mean_eps);
    checks.insert("shallow_over_deep1".to_string(), shallow.std_eps >= th.shallow_factor * deep.std_eps);
    checks.insert("points_n8".to_string(), std_at(8, &[30]) <= th.n8_factor * std_at(20, &[30]));
    checks.insert("points_n4".to_string(), std_at(4, &[30]) > std_at(8, &[30]));
    checks.insert("width_m20".to_string(), std_at(REFERENCE_POINTS, &[20]) <= th.m20_factor * m30);
    checks.insert("width_m2".to_string(), std_at(REFERENCE_POINTS, &[2]) >= th.m2_factor * m30);
    checks.insert("t_sat_ratio".to_string(), p99 / p1 >= th.t_sat_ratio);
    checks.insert("param_count".to_string(), find(REFERENCE_POINTS, &[30]).param_count == 691);

    let summary = Summary {
        scale: match args.scale {
            Scale::Ci => "ci".into(),
            Scale::Paper => "paper".into(),
        },
        data_seed: study.data.seed,
        training_seed: study.config.init_seed,
        train_samples: study.train_samples,
        test_samples: study.test_samples,
        training: study.config.summary(),
        param_count: find(REFERENCE_POINTS, &[30]).param_count,
        t_sat_p1: p1,
        t_sat_p99: p99,
        t_sat_ratio: p99 / p1,
        models,
        point_sweep: point_rows,
        width_sweep: width_rows,
        metrics,
        checks,
    };
    let summary_path = study.out.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).context("encoding summary")?;
    text.push('\n');
    fs::write(&summary_path, text).context("writing summary")?;
    files.push(summary_path.clone());

    let mut manifest = study.manifest(
        "reproduce",
        json!({ "scale": args.scale, "points": counts, "archs": DEFAULT_ARCHS, "widths": DEFAULT_WIDTHS }),
    );
    write_outputs(&study, &mut manifest, &pairs, &records, &files, args.sweep.common.config.as_deref())?;
    manifest.write(&study.out.join("manifest.json"))?;

    for (name, ok) in &summary.checks {
        println!("{:<20} {}", name, if *ok { "pass" } else { "FAIL" });
    }
    println!("cells computed={} reused={}", cell_counts.computed, cell_counts.reused);
    Ok(ReproduceOutcome {
        summary,
        counts: cell_counts,
        summary_path,
    })
}
