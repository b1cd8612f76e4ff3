//! Relative-error statistics, point-count and width sweeps, report export.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::neuralnet::{self, hidden_label, Architecture, Mlp, ModelError, TrainConfig};

pub const DEFAULT_WIDTHS: [usize; 6] = [2, 5, 10, 20, 30, 50];
pub const SWEEP_CSV_HEADER: &str = "n_points,arch,mean_eps,std_eps,mse_log";
pub const SCATTER_CSV_HEADER: &str = "t_sat,eps,dose_ratio";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("model expects {model} thickness points but the dataset has {dataset}")]
    PointMismatch { model: usize, dataset: usize },
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("sweep input: {0}")]
    Sweep(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// `(t_pred - t_sat) / t_sat`
pub fn relative_error(t_pred: f64, t_sat: f64) -> f64 {
    (t_pred - t_sat) / t_sat
}

/// Anything that maps a thickness profile and dose time to a saturation time.
pub trait SaturationPredictor {
    fn n_points(&self) -> usize;

    fn predict_tsat(&self, thickness: &[f64], dose_time: f64) -> std::result::Result<f64, ModelError>;

    /// Standard deviation of `log10(t_sat)` used to scale `mse_log`.
    fn target_scale(&self) -> f64 {
        1.0
    }
}

impl SaturationPredictor for Mlp {
    fn n_points(&self) -> usize {
        self.architecture.input_dim() - 1
    }

    fn predict_tsat(&self, thickness: &[f64], dose_time: f64) -> std::result::Result<f64, ModelError> {
        Mlp::predict_tsat(self, thickness, dose_time)
    }

    fn target_scale(&self) -> f64 {
        self.stats.as_ref().map_or(1.0, |s| s.target_std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub t_sat: f64,
    pub eps: f64,
    /// `t_dose / t_sat`
    pub dose_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mean_eps: f64,
    /// Population standard deviation of the relative error.
    pub std_eps: f64,
    /// MSE between predicted and true standardized `log10(t_sat)`.
    pub mse_log: f64,
    pub n_samples: usize,
    pub points: Vec<ScatterPoint>,
}

/// Scores `predictor` on every record of `test`.
pub fn evaluate<P: SaturationPredictor + ?Sized>(predictor: &P, test: &Dataset) -> Result<EvalReport> {
    if predictor.n_points() != test.meta.n_points {
        return Err(EvalError::PointMismatch {
            model: predictor.n_points(),
            dataset: test.meta.n_points,
        });
    }
    if test.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let scale = predictor.target_scale();
    let mut points = Vec::with_capacity(test.len());
    let mut sq_log = 0.0;
    for r in &test.records {
        let t_pred = predictor.predict_tsat(&r.thickness, r.dose_time)?;
        let d = (t_pred.log10() - r.saturation_time.log10()) / scale;
        sq_log += d * d;
        points.push(ScatterPoint {
            t_sat: r.saturation_time,
            eps: relative_error(t_pred, r.saturation_time),
            dose_ratio: r.dose_time / r.saturation_time,
        });
    }
    let n = points.len() as f64;
    let mean_eps = points.iter().map(|p| p.eps).sum::<f64>() / n;
    let var = points.iter().map(|p| (p.eps - mean_eps).powi(2)).sum::<f64>() / n;
    Ok(EvalReport {
        mean_eps,
        std_eps: var.sqrt(),
        mse_log: sq_log / n,
        n_samples: points.len(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Points,
    Width,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Point count or hidden width, depending on the sweep axis.
    pub value: usize,
    pub n_points: usize,
    pub hidden: Vec<usize>,
    pub arch: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, value: usize, hidden: &[usize]) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value && r.hidden == hidden)
    }

    pub fn std_eps(&self, value: usize, hidden: &[usize]) -> Option<f64> {
        self.row(value, hidden).map(|r| r.report.std_eps)
    }

    pub fn summaries(&self) -> Vec<SweepSummary> {
        self.rows
            .iter()
            .map(|r| SweepSummary {
                n_points: r.n_points,
                arch: r.arch.clone(),
                mean_eps: r.report.mean_eps,
                std_eps: r.report.std_eps,
                mse_log: r.report.mse_log,
            })
            .collect()
    }
}

/// One train/test pair of a sweep.
pub struct SweepData<'a> {
    pub train: &'a Dataset,
    pub test: &'a Dataset,
}

/// Fits one network and scores it on the test set.
pub fn train_and_evaluate(
    hidden: &[usize],
    data: &SweepData<'_>,
    config: &TrainConfig,
) -> Result<(Mlp, EvalReport)> {
    let arch = Architecture::for_profile(data.train.meta.n_points, hidden)?;
    let (mlp, _) = neuralnet::fit(arch, data.train, config)?;
    let report = evaluate(&mlp, data.test)?;
    Ok((mlp, report))
}

fn run_cells(
    axis: SweepAxis,
    cells: Vec<(usize, Vec<usize>, &SweepData<'_>)>,
    config: &TrainConfig,
    workers: usize,
) -> Result<SweepResult> {
    let one = |(value, hidden, data): &(usize, Vec<usize>, &SweepData<'_>)| -> Result<SweepRow> {
        let (_, report) = train_and_evaluate(hidden, data, config)?;
        Ok(SweepRow {
            value: *value,
            n_points: data.train.meta.n_points,
            arch: hidden_label(hidden),
            hidden: hidden.clone(),
            report,
        })
    };
    let rows = if workers <= 1 {
        cells.iter().map(one).collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| EvalError::Sweep(format!("worker pool: {e}")))?;
        pool.install(|| cells.par_iter().map(one).collect::<Result<Vec<_>>>())?
    };
    Ok(SweepResult { axis, rows })
}

/// Trains every architecture on every point-count dataset. Each cell uses
/// the same seeds, so the result does not depend on `workers`.
pub fn sweep_points(
    family: &[SweepData<'_>],
    architectures: &[Vec<usize>],
    config: &TrainConfig,
    workers: usize,
) -> Result<SweepResult> {
    for data in family {
        if data.train.meta.n_points != data.test.meta.n_points {
            return Err(EvalError::PointMismatch {
                model: data.train.meta.n_points,
                dataset: data.test.meta.n_points,
            });
        }
    }
    let cells = family
        .iter()
        .flat_map(|d| architectures.iter().map(move |h| (d.train.meta.n_points, h.clone(), d)))
        .collect();
    run_cells(SweepAxis::Points, cells, config, workers)
}

/// Trains one-hidden-layer networks of each width on a single dataset pair.
pub fn sweep_width(
    widths: &[usize],
    data: &SweepData<'_>,
    config: &TrainConfig,
    workers: usize,
) -> Result<SweepResult> {
    if widths.contains(&0) {
        return Err(EvalError::Sweep("hidden widths must be positive".into()));
    }
    let cells = widths.iter().map(|&m| (m, vec![m], data)).collect();
    run_cells(SweepAxis::Width, cells, config, workers)
}

/// One line of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n_points: usize,
    pub arch: String,
    pub mean_eps: f64,
    pub std_eps: f64,
    pub mse_log: f64,
}

pub fn sweep_csv(rows: &[SweepSummary]) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:e},{:e},{:e}",
            r.n_points, r.arch, r.mean_eps, r.std_eps, r.mse_log
        );
    }
    out
}

pub fn write_sweep_csv(rows: &[SweepSummary], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, sweep_csv(rows))?;
    Ok(())
}

fn csv_rows(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    if first != header {
        return Err(EvalError::Csv {
            line: 1,
            reason: format!("expected header `{header}`, found `{first}`"),
        });
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<String> = line?.split(',').map(str::to_owned).collect();
        if fields.len() != width {
            return Err(EvalError::Csv {
                line: i + 2,
                reason: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        rows.push((i + 2, fields));
    }
    Ok(rows)
}

fn parse<T: std::str::FromStr>(line: usize, field: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field.parse().map_err(|e: T::Err| EvalError::Csv {
        line,
        reason: format!("`{field}`: {e}"),
    })
}

pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<Vec<SweepSummary>> {
    csv_rows(path.as_ref(), SWEEP_CSV_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(SweepSummary {
                n_points: parse(line, &f[0])?,
                arch: f[1].clone(),
                mean_eps: parse(line, &f[2])?,
                std_eps: parse(line, &f[3])?,
                mse_log: parse(line, &f[4])?,
            })
        })
        .collect()
}

pub fn write_scatter_csv(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{SCATTER_CSV_HEADER}")?;
    for p in &report.points {
        writeln!(w, "{:e},{:e},{:e}", p.t_sat, p.eps, p.dose_ratio)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scatter_csv(path: impl AsRef<Path>) -> Result<Vec<ScatterPoint>> {
    csv_rows(path.as_ref(), SCATTER_CSV_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(ScatterPoint {
                t_sat: parse(line, &f[0])?,
                eps: parse(line, &f[1])?,
                dose_ratio: parse(line, &f[2])?,
            })
        })
        .collect()
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Gray level for a dose ratio: 0 is light, 1 (saturating dose) is black.
pub fn gray_level(dose_ratio: f64) -> u8 {
    (220.0 * (1.0 - dose_ratio.clamp(0.0, 1.0))).round() as u8
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// ε against `log10(t_sat)`, one circle per sample.
pub fn scatter_svg(report: &EvalReport) -> String {
    let (x_lo, x_hi) = span(report.points.iter().map(|p| p.t_sat.log10()));
    let (y_lo, y_hi) = span(report.points.iter().map(|p| p.eps));
    let plot_w = SVG_WIDTH - 2.0 * MARGIN;
    let plot_h = SVG_HEIGHT - 2.0 * MARGIN;
    let sx = |v: f64| MARGIN + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |v: f64| SVG_HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g id="axes" stroke="black" fill="none"><rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}"/></g>"#
    );
    let _ = writeln!(
        s,
        r#"<g id="labels" font-family="sans-serif" font-size="12" fill="black">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">log10 t_sat (s): {:.3} .. {:.3}</text>"#,
        SVG_WIDTH / 2.0,
        SVG_HEIGHT - 20.0,
        x_lo,
        x_hi
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" transform="rotate(-90 20 {})" text-anchor="middle">relative error: {:.4} .. {:.4}</text>"#,
        SVG_HEIGHT / 2.0,
        SVG_HEIGHT / 2.0,
        y_lo,
        y_hi
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="points" stroke="none">"#);
    for p in &report.points {
        let g = gray_level(p.dose_ratio);
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="rgb({g},{g},{g})"/>"#,
            sx(p.t_sat.log10()),
            sy(p.eps)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

pub fn write_scatter_svg(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, scatter_svg(report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, DatasetMeta};

    struct Exact;

    impl SaturationPredictor for Exact {
        fn n_points(&self) -> usize {
            4
        }
        fn predict_tsat(&self, _: &[f64], _: f64) -> std::result::Result<f64, ModelError> {
            unreachable!("replaced by lookup")
        }
    }

    /// Returns the true saturation time by looking the record up.
    struct Lookup<'a>(&'a Dataset);

    impl SaturationPredictor for Lookup<'_> {
        fn n_points(&self) -> usize {
            self.0.meta.n_points
        }
        fn predict_tsat(&self, thickness: &[f64], dose_time: f64) -> std::result::Result<f64, ModelError> {
            let r = self
                .0
                .records
                .iter()
                .find(|r| r.thickness == thickness && r.dose_time == dose_time)
                .unwrap();
            Ok(r.saturation_time)
        }
    }

    struct Constant(f64, usize);

    impl SaturationPredictor for Constant {
        fn n_points(&self) -> usize {
            self.1
        }
        fn predict_tsat(&self, _: &[f64], _: f64) -> std::result::Result<f64, ModelError> {
            Ok(self.0)
        }
    }

    fn test_set(n: usize) -> Dataset {
        generate_dataset(&DatasetMeta::standard(4, 2), n, 1).unwrap()
    }

    #[test]
    fn relative_error_values() {
        assert_eq!(relative_error(10.0, 10.0), 0.0);
        assert!((relative_error(11.0, 10.0) - 0.1).abs() < 1e-15);
        assert_eq!(relative_error(5.0, 10.0), -0.5);
    }

    #[test]
    fn perfect_predictor_scores_zero() {
        let d = test_set(200);
        let r = evaluate(&Lookup(&d), &d).unwrap();
        assert_eq!(r.mean_eps, 0.0);
        assert_eq!(r.std_eps, 0.0);
        assert_eq!(r.mse_log, 0.0);
        assert_eq!(r.n_samples, 200);
        for (p, rec) in r.points.iter().zip(&d.records) {
            assert_eq!(p.t_sat, rec.saturation_time);
            assert_eq!(p.dose_ratio, rec.dose_time / rec.saturation_time);
        }
    }

    #[test]
    fn constant_predictor_matches_direct_statistics() {
        let d = test_set(300);
        let c = 2.5;
        let r = evaluate(&Constant(c, 4), &d).unwrap();
        let eps: Vec<f64> = d.records.iter().map(|r| c / r.saturation_time - 1.0).collect();
        let n = eps.len() as f64;
        let mean = eps.iter().sum::<f64>() / n;
        let std = (eps.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n).sqrt();
        assert!((r.mean_eps - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((r.std_eps - std).abs() <= 1e-12 * std.max(1.0));
    }

    #[test]
    fn mismatched_points_are_rejected() {
        let d = test_set(5);
        assert!(matches!(
            evaluate(&Exact, &generate_dataset(&DatasetMeta::standard(8, 2), 3, 1).unwrap()),
            Err(EvalError::PointMismatch { model: 4, dataset: 8 })
        ));
        let mut empty = d.clone();
        empty.records.clear();
        assert!(matches!(evaluate(&Constant(1.0, 4), &empty), Err(EvalError::EmptyDataset)));
    }

    #[test]
    fn gray_is_darker_near_saturation() {
        assert_eq!(gray_level(1.0), 0);
        assert!(gray_level(0.05) > gray_level(0.5));
        assert!(gray_level(0.5) > gray_level(0.99));
    }

    #[test]
    fn sweep_csv_shapes() {
        assert_eq!(sweep_csv(&[]), format!("{SWEEP_CSV_HEADER}\n"));
        let row = SweepSummary {
            n_points: 20,
            arch: "h30".into(),
            mean_eps: -1.0 / 3.0,
            std_eps: 0.1,
            mse_log: 1e-300,
        };
        let text = sweep_csv(&[row.clone(), row]);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("20,h30,"));
    }

    #[test]
    fn width_sweep_rejects_zero() {
        let d = test_set(5);
        let data = SweepData { train: &d, test: &d };
        assert!(matches!(
            sweep_width(&[0], &data, &TrainConfig::default(), 1),
            Err(EvalError::Sweep(_))
        ));
    }
}
