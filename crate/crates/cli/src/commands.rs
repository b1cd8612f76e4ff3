//! `generate`, `train` and `evaluate`.

use std::fs;
use std::path::{Path, PathBuf};

use aldsat::dataset::{self, Dataset};
use aldsat::evaluation::{self, EvalError, EvalReport};
use aldsat::neuralnet::{self, Architecture, Mlp, TrainConfig, TrainReport};
use anyhow::Context;
use serde_json::json;

use crate::config::{
    check_point_count, parse_hidden, prepare_dir, require_file, require_writable_parent, RunConfig,
    DEFAULT_SAMPLES,
};
use crate::manifest::{sidecar, FileDigest, Manifest, Seeds};
use crate::{usage, CliError, CliResult, EvaluateArgs, GenerateArgs, TrainArgs};

pub fn generate(args: &GenerateArgs) -> CliResult<Dataset> {
    let cfg = RunConfig::from_common(&args.common)?;
    let workers = cfg.workers(&args.common)?;
    let data = cfg.data_settings(&args.data)?;
    let points = args.points.or(cfg.points).unwrap_or(20);
    check_point_count(points, args.allow_custom)?;
    let samples = args.samples.or(cfg.samples).unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return usage("--samples must be at least 1");
    }
    require_writable_parent(&args.out)?;
    if let Some(csv) = &args.csv {
        require_writable_parent(csv)?;
    }

    let meta = data.meta(points, data.seed);
    if !meta.is_standard_point_count() {
        eprintln!("note: {points} points is a non-standard point count");
    }
    let ds = dataset::generate_dataset(&meta, samples, workers).context("generating dataset")?;
    dataset::save(&ds, &args.out).context("writing dataset")?;

    let mut manifest = Manifest::new(
        "generate",
        Seeds {
            data: Some(data.seed),
            training: None,
        },
        json!({
            "points": points,
            "samples": samples,
            "spacing": meta.spacing,
            "standard_point_count": meta.is_standard_point_count(),
            "geometry": data.geometry,
            "priors": data.priors,
            "theta_sat": data.theta_sat,
        }),
    );
    if let Some(p) = &args.common.config {
        manifest.inputs.push(FileDigest::of(p, None)?);
    }
    manifest.outputs.push(FileDigest::of(&args.out, None)?);
    if let Some(csv) = &args.csv {
        dataset::export_csv(&ds, csv).context("writing CSV")?;
        manifest.outputs.push(FileDigest::of(csv, None)?);
    }
    manifest.write(&sidecar(&args.out))?;
    println!(
        "wrote {} ({} records, {} points, spacing {} m)",
        args.out.display(),
        ds.len(),
        points,
        meta.spacing
    );
    Ok(ds)
}

/// Loads a dataset, treating unreadable or corrupt files as bad input.
pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    require_file(path)?;
    dataset::load(path).or_else(|e| usage(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> CliResult<(Mlp, Option<TrainConfig>)> {
    require_file(path)?;
    neuralnet::load_model(path).or_else(|e| usage(format!("{}: {e}", path.display())))
}

/// Attaches training-set statistics if the file carries none.
pub fn ensure_stats(ds: &mut Dataset) -> CliResult<()> {
    if ds.stats.is_none() {
        let degenerate = ds.fit_normalization().or_else(|e| usage(format!("normalization: {e}")))?;
        for d in degenerate {
            eprintln!("note: input feature {} is constant (std {:e})", d.index, d.std);
        }
    }
    Ok(())
}

pub fn loss_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,loss\n");
    out.push_str(&format!("0,{:e}\n", report.initial_loss));
    for (i, l) in report.epoch_losses.iter().enumerate() {
        out.push_str(&format!("{},{:e}\n", i + 1, l));
    }
    out
}

fn default_loss_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().unwrap_or_default().to_os_string();
    name.push(".loss.csv");
    model.with_file_name(name)
}

pub fn train(args: &TrainArgs) -> CliResult<(Mlp, TrainReport)> {
    let cfg = RunConfig::from_common(&args.common)?;
    let config = cfg.train_config(&args.training)?;
    let hidden = parse_hidden(args.hidden.as_deref().or(cfg.hidden.as_deref()).unwrap_or("30"))?;
    let loss_path = args.loss_csv.clone().unwrap_or_else(|| default_loss_path(&args.out));
    require_writable_parent(&args.out)?;
    require_writable_parent(&loss_path)?;
    let mut ds = load_dataset(&args.data)?;
    ensure_stats(&mut ds)?;

    let arch = Architecture::for_profile(ds.meta.n_points, &hidden).map_err(|e| CliError::Usage(e.to_string()))?;
    let (mlp, report) = neuralnet::fit(arch.clone(), &ds, &config).context("training")?;
    neuralnet::save_model(&mlp, Some(&config), &args.out).context("writing model")?;
    fs::write(&loss_path, loss_csv(&report)).context("writing loss history")?;

    let mut manifest = Manifest::new(
        "train",
        Seeds {
            data: Some(ds.meta.seed),
            training: Some(config.init_seed),
        },
        json!({
            "architecture": arch.dims(),
            "arch": arch.label(),
            "param_count": arch.param_count(),
            "config": config,
            "initial_loss": report.initial_loss,
            "final_loss": report.final_loss(),
        }),
    );
    manifest.training = Some(config.summary());
    manifest.inputs.push(FileDigest::of(&args.data, None)?);
    if let Some(p) = &args.common.config {
        manifest.inputs.push(FileDigest::of(p, None)?);
    }
    manifest.outputs.push(FileDigest::of(&args.out, None)?);
    manifest.outputs.push(FileDigest::of(&loss_path, None)?);
    manifest.write(&sidecar(&args.out))?;
    println!("{}", config.summary());
    println!("arch={} param_count={}", arch.label(), arch.param_count());
    println!("initial_loss={:e} final_loss={:e}", report.initial_loss, report.final_loss());
    Ok((mlp, report))
}

pub fn evaluation_error(e: EvalError) -> CliError {
    match e {
        EvalError::PointMismatch { .. } | EvalError::EmptyDataset => CliError::Usage(e.to_string()),
        other => CliError::Internal(other.into()),
    }
}

/// Writes `report.json`, `scatter.csv` and `scatter.svg` into `dir`.
pub fn write_report_files(report: &EvalReport, dir: &Path, stem: &str) -> anyhow::Result<Vec<PathBuf>> {
    let json_path = dir.join(format!("{stem}report.json"));
    let csv_path = dir.join(format!("{stem}scatter.csv"));
    let svg_path = dir.join(format!("{stem}scatter.svg"));
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json_path, text)?;
    evaluation::write_scatter_csv(report, &csv_path)?;
    evaluation::write_scatter_svg(report, &svg_path)?;
    Ok(vec![json_path, csv_path, svg_path])
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<EvalReport> {
    let _cfg = RunConfig::from_common(&args.common)?;
    require_file(&args.model)?;
    require_file(&args.data)?;
    prepare_dir(&args.out)?;
    let (mlp, training) = load_model(&args.model)?;
    let ds = load_dataset(&args.data)?;
    let report = evaluation::evaluate(&mlp, &ds).map_err(evaluation_error)?;
    let outputs = write_report_files(&report, &args.out, "")?;

    let mut manifest = Manifest::new(
        "evaluate",
        Seeds {
            data: Some(ds.meta.seed),
            training: training.map(|t| t.init_seed),
        },
        json!({
            "arch": mlp.architecture.label(),
            "n_samples": report.n_samples,
            "mean_eps": report.mean_eps,
            "std_eps": report.std_eps,
            "mse_log": report.mse_log,
        }),
    );
    manifest.inputs.push(FileDigest::of(&args.model, None)?);
    manifest.inputs.push(FileDigest::of(&args.data, None)?);
    for p in &outputs {
        manifest.outputs.push(FileDigest::of(p, Some(&args.out))?);
    }
    manifest.write(&args.out.join("manifest.json"))?;
    Ok(report)
}
