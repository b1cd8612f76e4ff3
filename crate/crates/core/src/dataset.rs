//! Synthetic growth-profile datasets.
//!
//! Every record is `(thickness profile, dose time, saturation time)`. Sample
//! `i` of a dataset draws from its own stream seeded by
//! [`streams::stream_seed`]`(seed, i)`, so the output does not depend on how
//! many workers produced it.
//!
//! # Binary layout (`.alds`)
//!
//! ```text
//! magic        b"ALDS"
//! version      u16 LE
//! header_len   u32 LE
//! header       UTF-8 JSON {"meta": .., "stats": .., "n_records": ..}
//! records      n_records * (n_points + 2) f64 LE: thickness.., t_dose, t_sat
//! crc32        u32 LE over every preceding byte
//! ```

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::streams;
use crate::transport::{self, ProcessConditions, ReactorGeometry, TransportError};

pub const MAGIC: [u8; 4] = *b"ALDS";
pub const FORMAT_VERSION: u16 = 1;

/// Point counts with standard datasets; the spacing
/// is always `length / n_points`.
pub const STANDARD_POINT_COUNTS: [usize; 6] = [20, 16, 10, 8, 5, 4];

pub const DEFAULT_THETA_SAT: f64 = 0.99;
pub const DEFAULT_TRAIN_SEED: u64 = 1;
pub const DEFAULT_TEST_SEED: u64 = 2;

const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a dataset file: magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported dataset format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u16),
    #[error("dataset file truncated: need {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("dataset checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("dataset file has {0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("malformed dataset header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("invalid prior `{name}`: {reason}")]
    Prior { name: &'static str, reason: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Uniform,
    LogUniform,
}

/// A closed sampling range with its distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prior {
    pub lower: f64,
    pub upper: f64,
    pub distribution: Distribution,
}

impl Prior {
    pub fn uniform(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            distribution: Distribution::Uniform,
        }
    }

    pub fn log_uniform(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            distribution: Distribution::LogUniform,
        }
    }

    pub fn fixed(value: f64) -> Self {
        Self::uniform(value, value)
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let fail = |reason: String| Err(DatasetError::Prior { name, reason });
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return fail(format!("bounds must be finite: [{}, {}]", self.lower, self.upper));
        }
        if self.lower > self.upper {
            return fail(format!("lower {} exceeds upper {}", self.lower, self.upper));
        }
        if self.distribution == Distribution::LogUniform && self.lower <= 0.0 {
            return fail(format!("log-uniform range must be positive, lower = {}", self.lower));
        }
        Ok(())
    }

    /// One draw. A uniform variate is always consumed, so degenerate ranges
    /// keep the other parameters' draws aligned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        if self.lower == self.upper {
            return self.lower;
        }
        let value = match self.distribution {
            Distribution::Uniform => self.lower + u * (self.upper - self.lower),
            Distribution::LogUniform => {
                let (lo, hi) = (self.lower.ln(), self.upper.ln());
                (lo + u * (hi - lo)).exp()
            }
        };
        value.clamp(self.lower, self.upper)
    }
}

/// Sampling ranges for one process and its dose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterPriors {
    /// Pa
    pub partial_pressure: Prior,
    /// amu
    pub molar_mass: Prior,
    /// K
    pub temperature: Prior,
    pub sticking_probability: Prior,
    /// nm/cycle
    pub growth_per_cycle: Prior,
    /// sites/m^2
    pub site_density: Prior,
    /// Dose time as a fraction of the saturation time.
    pub dose_fraction: Prior,
}

impl Default for ParameterPriors {
    fn default() -> Self {
        Self {
            partial_pressure: Prior::log_uniform(0.5, 50.0),
            molar_mass: Prior::uniform(50.0, 500.0),
            temperature: Prior::uniform(373.0, 573.0),
            sticking_probability: Prior::log_uniform(1e-5, 1e-1),
            // A randomized growth per cycle trades off against coverage on
            // flat, kinetically limited profiles and makes t_sat unrecoverable
            // from thickness alone, so it is fixed by default.
            growth_per_cycle: Prior::fixed(0.1),
            site_density: Prior::log_uniform(1e18, 1e19),
            dose_fraction: Prior::log_uniform(0.05, 1.0),
        }
    }
}

impl ParameterPriors {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("partial_pressure", &self.partial_pressure),
            ("molar_mass", &self.molar_mass),
            ("temperature", &self.temperature),
            ("sticking_probability", &self.sticking_probability),
            ("growth_per_cycle", &self.growth_per_cycle),
            ("site_density", &self.site_density),
            ("dose_fraction", &self.dose_fraction),
        ];
        for (name, prior) in positive {
            prior.validate(name)?;
            if prior.lower <= 0.0 {
                return Err(DatasetError::Prior {
                    name,
                    reason: format!("range must be strictly positive, lower = {}", prior.lower),
                });
            }
        }
        for (name, prior) in [
            ("sticking_probability", &self.sticking_probability),
            ("dose_fraction", &self.dose_fraction),
        ] {
            if prior.upper > 1.0 {
                return Err(DatasetError::Prior {
                    name,
                    reason: format!("range must lie within (0, 1], upper = {}", prior.upper),
                });
            }
        }
        Ok(())
    }
}

/// Draws one process and its dose fraction.
pub fn sample_conditions<R: Rng + ?Sized>(
    priors: &ParameterPriors,
    rng: &mut R,
) -> (ProcessConditions, f64) {
    let cond = ProcessConditions {
        partial_pressure: priors.partial_pressure.sample(rng),
        molar_mass: priors.molar_mass.sample(rng),
        temperature: priors.temperature.sample(rng),
        sticking_probability: priors.sticking_probability.sample(rng),
        growth_per_cycle: priors.growth_per_cycle.sample(rng),
        site_density: priors.site_density.sample(rng),
    };
    let dose_fraction = priors.dose_fraction.sample(rng);
    (cond, dose_fraction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    /// Film thickness per cycle at each sample position, nm.
    pub thickness: Vec<f64>,
    /// s
    pub dose_time: f64,
    /// s
    pub saturation_time: f64,
}

/// Runs the transport model for one process dosed at `dose_fraction * t_sat`.
pub fn generate_sample(
    cond: &ProcessConditions,
    dose_fraction: f64,
    geom: &ReactorGeometry,
    positions: &[f64],
    theta_sat: f64,
) -> Result<SampleRecord> {
    if !(dose_fraction > 0.0 && dose_fraction <= 1.0) {
        return Err(DatasetError::Invalid(format!(
            "dose fraction must lie in (0, 1], got {dose_fraction}"
        )));
    }
    let rates = transport::derive_rates(cond, geom)?;
    let x_max = *positions
        .last()
        .ok_or(DatasetError::Transport(TransportError::NoPositions))?;
    let saturation_time = transport::saturation_time(&rates, x_max, theta_sat)?;
    let dose_time = dose_fraction * saturation_time;
    let profile = transport::profile_analytic(&rates, positions, dose_time)?;
    Ok(SampleRecord {
        thickness: profile
            .coverage
            .iter()
            .map(|theta| cond.growth_per_cycle * theta)
            .collect(),
        dose_time,
        saturation_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub format_version: u16,
    pub n_points: usize,
    /// m
    pub spacing: f64,
    /// m, `positions[i] = i * spacing`
    pub positions: Vec<f64>,
    pub geometry: ReactorGeometry,
    pub priors: ParameterPriors,
    pub seed: u64,
    pub theta_sat: f64,
}

impl DatasetMeta {
    /// Evenly spaced samples with spacing `length / n_points`, starting at the
    /// inlet.
    pub fn new(
        n_points: usize,
        geometry: ReactorGeometry,
        priors: ParameterPriors,
        seed: u64,
        theta_sat: f64,
    ) -> Self {
        let spacing = geometry.length / n_points as f64;
        Self {
            format_version: FORMAT_VERSION,
            n_points,
            spacing,
            positions: (0..n_points).map(|i| i as f64 * spacing).collect(),
            geometry,
            priors,
            seed,
            theta_sat,
        }
    }

    /// Default geometry, priors and threshold.
    pub fn standard(n_points: usize, seed: u64) -> Self {
        Self::new(
            n_points,
            ReactorGeometry::default(),
            ParameterPriors::default(),
            seed,
            DEFAULT_THETA_SAT,
        )
    }

    pub fn is_standard_point_count(&self) -> bool {
        STANDARD_POINT_COUNTS.contains(&self.n_points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 || self.positions.len() != self.n_points {
            return Err(DatasetError::Invalid(format!(
                "n_points = {} with {} positions",
                self.n_points,
                self.positions.len()
            )));
        }
        self.geometry.validate()?;
        self.priors.validate()?;
        if !(self.theta_sat > 0.0 && self.theta_sat < 1.0) {
            return Err(TransportError::SaturationThreshold(self.theta_sat).into());
        }
        Ok(())
    }
}

/// Per-feature standardization fitted on a training set.
///
/// Inputs are the thickness columns followed by `log10(t_dose)`; the target
/// is `log10(t_sat)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationStats {
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl NormalizationStats {
    pub fn n_inputs(&self) -> usize {
        self.input_mean.len()
    }

    /// Writes the standardized network input for one profile into `out`.
    pub fn standardize_input(&self, thickness: &[f64], dose_time: f64, out: &mut [f64]) {
        let n = thickness.len();
        for (i, &x) in thickness.iter().enumerate() {
            out[i] = (x - self.input_mean[i]) / self.input_std[i];
        }
        out[n] = (dose_time.log10() - self.input_mean[n]) / self.input_std[n];
    }

    pub fn standardize_target(&self, saturation_time: f64) -> f64 {
        (saturation_time.log10() - self.target_mean) / self.target_std
    }

    /// Inverse of [`standardize_target`](Self::standardize_target).
    pub fn saturation_time(&self, standardized: f64) -> f64 {
        10f64.powf(standardized * self.target_std + self.target_mean)
    }
}

/// A feature whose training spread fell below the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateFeature {
    pub index: usize,
    pub std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, count) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    let mean = sum / count as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
    (mean, var.sqrt())
}

/// Fits standardization on `train`. Returns the stats and the features whose
/// spread had to be floored.
pub fn compute_normalization(train: &Dataset) -> Result<(NormalizationStats, Vec<DegenerateFeature>)> {
    if train.records.len() < 2 {
        return Err(DatasetError::Invalid(format!(
            "normalization needs at least 2 records, got {}",
            train.records.len()
        )));
    }
    let n = train.meta.n_points;
    let mut warnings = Vec::new();
    let mut floor = |index: usize, std: f64| {
        if std < STD_FLOOR {
            warnings.push(DegenerateFeature { index, std });
            STD_FLOOR
        } else {
            std
        }
    };
    let mut input_mean = Vec::with_capacity(n + 1);
    let mut input_std = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (m, s) = mean_std(train.records.iter().map(|r| r.thickness[i]));
        input_mean.push(m);
        input_std.push(floor(i, s));
    }
    let (m, s) = mean_std(train.records.iter().map(|r| r.dose_time.log10()));
    input_mean.push(m);
    input_std.push(floor(n, s));
    let (target_mean, s) = mean_std(train.records.iter().map(|r| r.saturation_time.log10()));
    let target_std = floor(n + 1, s);
    Ok((
        NormalizationStats {
            input_mean,
            input_std,
            target_mean,
            target_std,
        },
        warnings,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub records: Vec<SampleRecord>,
    pub stats: Option<NormalizationStats>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fits and attaches standardization from this dataset's own records.
    pub fn fit_normalization(&mut self) -> Result<Vec<DegenerateFeature>> {
        let (stats, warnings) = compute_normalization(self)?;
        self.stats = Some(stats);
        Ok(warnings)
    }

    /// `p_hi / p_lo` percentile ratio of the saturation times (nearest rank).
    pub fn saturation_time_ratio(&self, p_lo: f64, p_hi: f64) -> f64 {
        let mut times: Vec<f64> = self.records.iter().map(|r| r.saturation_time).collect();
        times.sort_by(f64::total_cmp);
        percentile(&times, p_hi) / percentile(&times, p_lo)
    }
}

/// Nearest-rank percentile of sorted data, `p` in percent.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Generates `n_samples` records on `workers` threads. The result is
/// identical for every worker count.
pub fn generate_dataset(meta: &DatasetMeta, n_samples: usize, workers: usize) -> Result<Dataset> {
    meta.validate()?;
    if n_samples == 0 {
        return Err(DatasetError::Invalid("n_samples must be at least 1".into()));
    }
    let one = |i: usize| -> Result<SampleRecord> {
        let mut rng = streams::stream(meta.seed, i as u64);
        let (cond, f) = sample_conditions(&meta.priors, &mut rng);
        generate_sample(&cond, f, &meta.geometry, &meta.positions, meta.theta_sat)
    };
    let records = if workers <= 1 {
        (0..n_samples).map(one).collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| DatasetError::Invalid(format!("worker pool: {e}")))?;
        pool.install(|| (0..n_samples).into_par_iter().map(one).collect::<Result<Vec<_>>>())?
    };
    Ok(Dataset {
        meta: meta.clone(),
        records,
        stats: None,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    meta: DatasetMeta,
    stats: Option<NormalizationStats>,
    n_records: usize,
}

impl Dataset {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.meta.n_points;
        if let Some(bad) = self.records.iter().find(|r| r.thickness.len() != n) {
            return Err(DatasetError::Invalid(format!(
                "record has {} thickness values, expected {n}",
                bad.thickness.len()
            )));
        }
        let header = serde_json::to_vec(&Header {
            meta: self.meta.clone(),
            stats: self.stats.clone(),
            n_records: self.records.len(),
        })?;
        let mut out = Vec::with_capacity(14 + header.len() + self.records.len() * (n + 2) * 8);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for r in &self.records {
            for v in r.thickness.iter().chain([&r.dose_time, &r.saturation_time]) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let need = |expected: usize| {
            if bytes.len() < expected {
                Err(DatasetError::Truncated {
                    expected,
                    actual: bytes.len(),
                })
            } else {
                Ok(())
            }
        };
        need(4)?;
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(DatasetError::BadMagic(magic));
        }
        need(10)?;
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(DatasetError::UnsupportedVersion(version));
        }
        let header_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let body = 10 + header_len;
        need(body)?;
        let header: Header = match serde_json::from_slice(&bytes[10..body]) {
            Ok(h) => h,
            Err(e) => {
                // a flipped byte in the header is a checksum problem first
                check_crc(bytes)?;
                return Err(e.into());
            }
        };
        let width = header.meta.n_points + 2;
        let end = body + header.n_records * width * 8;
        need(end + 4)?;
        if bytes.len() > end + 4 {
            return Err(DatasetError::TrailingBytes(bytes.len() - end - 4));
        }
        check_crc(bytes)?;
        let records = bytes[body..end]
            .chunks_exact(width * 8)
            .map(|row| {
                let mut values = row
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
                let thickness = values.by_ref().take(width - 2).collect();
                SampleRecord {
                    thickness,
                    dose_time: values.next().unwrap(),
                    saturation_time: values.next().unwrap(),
                }
            })
            .collect();
        Ok(Dataset {
            meta: header.meta,
            records,
            stats: header.stats,
        })
    }
}

fn check_crc(bytes: &[u8]) -> Result<()> {
    if bytes.len() < 4 {
        return Err(DatasetError::Truncated {
            expected: 4,
            actual: bytes.len(),
        });
    }
    let (data, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(data);
    if stored != computed {
        return Err(DatasetError::ChecksumMismatch { stored, computed });
    }
    Ok(())
}

pub fn save(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, dataset.to_bytes()?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::from_bytes(&fs::read(path)?)
}

/// Writes `x_0,...,x_{n-1},t_dose,t_sat` with shortest round-trip floats.
pub fn export_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let n = dataset.meta.n_points;
    let mut header: Vec<String> = (0..n).map(|i| format!("x_{i}")).collect();
    header.push("t_dose".into());
    header.push("t_sat".into());
    writeln!(w, "{}", header.join(","))?;
    for r in &dataset.records {
        let row: Vec<String> = r
            .thickness
            .iter()
            .chain([&r.dose_time, &r.saturation_time])
            .map(|v| format!("{v:e}"))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records back from [`export_csv`] output.
pub fn import_csv(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or(DatasetError::Csv {
        line: 1,
        reason: "missing header".into(),
    })??;
    let columns: Vec<&str> = header.split(',').collect();
    let width = columns.len();
    if width < 3 || columns[width - 2] != "t_dose" || columns[width - 1] != "t_sat" {
        return Err(DatasetError::Csv {
            line: 1,
            reason: format!("unexpected header `{header}`"),
        });
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let values = line
            .split(',')
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| DatasetError::Csv {
                line: i + 2,
                reason: e.to_string(),
            })?;
        if values.len() != width {
            return Err(DatasetError::Csv {
                line: i + 2,
                reason: format!("expected {width} fields, found {}", values.len()),
            });
        }
        records.push(SampleRecord {
            thickness: values[..width - 2].to_vec(),
            dose_time: values[width - 2],
            saturation_time: values[width - 1],
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::stream;

    fn small(n_points: usize, n: usize, seed: u64) -> Dataset {
        generate_dataset(&DatasetMeta::standard(n_points, seed), n, 1).unwrap()
    }

    #[test]
    fn degenerate_prior_is_exact() {
        let mut rng = stream(3, 0);
        for value in [0.1, 1e-5, 7.3e18] {
            for prior in [
                Prior::fixed(value),
                Prior::log_uniform(value, value),
            ] {
                for _ in 0..50 {
                    assert_eq!(prior.sample(&mut rng), value);
                }
            }
        }
    }

    #[test]
    fn log_uniform_median() {
        // median of log-uniform [1e-5, 1e-1] is 10^-3
        let prior = Prior::log_uniform(1e-5, 1e-1);
        let mut rng = stream(11, 0);
        let mut draws: Vec<f64> = (0..100_000).map(|_| prior.sample(&mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let median = draws[draws.len() / 2];
        assert!((median / 1e-3 - 1.0).abs() < 0.2, "median {median}");
        assert!(draws.iter().all(|&b| (1e-5..=1e-1).contains(&b)));
    }

    #[test]
    fn identical_streams_draw_identically() {
        let priors = ParameterPriors::default();
        let a = sample_conditions(&priors, &mut stream(5, 9));
        let b = sample_conditions(&priors, &mut stream(5, 9));
        assert_eq!(a, b);
        let c = sample_conditions(&priors, &mut stream(5, 10));
        assert_ne!(a, c);
    }

    #[test]
    fn prior_validation() {
        let mut p = ParameterPriors::default();
        p.temperature = Prior::uniform(500.0, 400.0);
        assert!(matches!(p.validate(), Err(DatasetError::Prior { name: "temperature", .. })));
        let mut p = ParameterPriors::default();
        p.sticking_probability = Prior::log_uniform(0.0, 0.1);
        assert!(p.validate().is_err());
        let mut p = ParameterPriors::default();
        p.dose_fraction = Prior::uniform(0.5, 1.5);
        assert!(matches!(p.validate(), Err(DatasetError::Prior { name: "dose_fraction", .. })));
        assert!(ParameterPriors::default().validate().is_ok());
    }

    fn conditions(beta: f64) -> ProcessConditions {
        ProcessConditions {
            partial_pressure: 2.0,
            molar_mass: 150.0,
            temperature: 450.0,
            sticking_probability: beta,
            growth_per_cycle: 0.12,
            site_density: 5e18,
        }
    }

    #[test]
    fn full_dose_reaches_threshold_at_the_last_point() {
        let meta = DatasetMeta::standard(10, 0);
        for beta in [1e-5, 1e-3, 0.05] {
            let cond = conditions(beta);
            let r = generate_sample(&cond, 1.0, &meta.geometry, &meta.positions, 0.99).unwrap();
            let last = *r.thickness.last().unwrap();
            assert!((last - 0.12 * 0.99).abs() < 1e-12, "beta {beta}: {last}");
            assert_eq!(r.dose_time, r.saturation_time);
        }
    }

    #[test]
    fn weak_sticking_gives_flat_profile() {
        let meta = DatasetMeta::standard(20, 0);
        let cond = conditions(1e-7);
        let rates = transport::derive_rates(&cond, &meta.geometry).unwrap();
        let r = generate_sample(&cond, 0.3, &meta.geometry, &meta.positions, 0.99).unwrap();
        let expected = 0.12 * -(-rates.capture_frequency() * r.dose_time).exp_m1();
        for &h in &r.thickness {
            assert!((h - expected).abs() / expected < 1e-3, "{h} vs {expected}");
        }
    }

    #[test]
    fn records_respect_invariants() {
        let d = small(8, 500, 4);
        for r in &d.records {
            assert!(r.dose_time > 0.0 && r.dose_time <= r.saturation_time);
            assert!(r.thickness.iter().all(|&h| (0.0..=0.1).contains(&h)));
            assert!(r.thickness.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn generation_is_deterministic_across_workers() {
        let meta = DatasetMeta::standard(5, 21);
        let one = generate_dataset(&meta, 300, 1).unwrap();
        let many = generate_dataset(&meta, 300, 4).unwrap();
        assert_eq!(one.to_bytes().unwrap(), many.to_bytes().unwrap());
        let again = generate_dataset(&meta, 300, 1).unwrap();
        assert_eq!(one, again);
    }

    #[test]
    fn standard_spacings() {
        let expected = [(20, 0.02), (16, 0.025), (10, 0.04), (8, 0.05), (5, 0.08), (4, 0.1)];
        for (n, spacing) in expected {
            let meta = DatasetMeta::standard(n, 1);
            assert!(meta.is_standard_point_count());
            assert!((meta.spacing - spacing).abs() < 1e-15);
            for (i, x) in meta.positions.iter().enumerate() {
                assert_eq!(*x, i as f64 * meta.spacing);
            }
        }
        assert!(!DatasetMeta::standard(7, 1).is_standard_point_count());
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(generate_dataset(&DatasetMeta::standard(4, 1), 0, 1).is_err());
    }

    #[test]
    fn standardized_training_features_are_unit() {
        let mut d = small(10, 2000, 8);
        d.fit_normalization().unwrap();
        let stats = d.stats.clone().unwrap();
        let width = stats.n_inputs();
        let mut rows = vec![0.0; width];
        let mut sums = vec![0.0; width];
        let mut all = Vec::new();
        for r in &d.records {
            stats.standardize_input(&r.thickness, r.dose_time, &mut rows);
            for (s, v) in sums.iter_mut().zip(&rows) {
                *s += v;
            }
            all.push(rows.clone());
        }
        for j in 0..width {
            let mean = sums[j] / d.len() as f64;
            let var = all.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / d.len() as f64;
            assert!(mean.abs() <= 1e-9, "feature {j} mean {mean}");
            assert!((var.sqrt() - 1.0).abs() <= 1e-9, "feature {j} std {}", var.sqrt());
        }
        let targets: Vec<f64> = d.records.iter().map(|r| stats.standardize_target(r.saturation_time)).collect();
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        assert!(mean.abs() < 1e-9);
    }

    #[test]
    fn constant_column_is_floored_and_flagged() {
        let mut d = small(4, 50, 3);
        for r in &mut d.records {
            r.thickness[2] = 0.05;
        }
        let (stats, warnings) = compute_normalization(&d).unwrap();
        assert_eq!(stats.input_std[2], STD_FLOOR);
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].index, 2);
    }

    #[test]
    fn train_stats_do_not_center_test_data() {
        let mut train = small(4, 500, 1);
        train.fit_normalization().unwrap();
        let stats = train.stats.unwrap();
        let test = small(4, 500, 2);
        let mut row = vec![0.0; 5];
        let mut sum = 0.0;
        for r in &test.records {
            stats.standardize_input(&r.thickness, r.dose_time, &mut row);
            sum += row[4];
        }
        assert_ne!(sum / 500.0, 0.0);
    }

    #[test]
    fn normalization_needs_two_records() {
        let d = small(4, 1, 1);
        assert!(compute_normalization(&d).is_err());
    }

    #[test]
    fn target_transform_inverts() {
        let mut d = small(4, 100, 2);
        d.fit_normalization().unwrap();
        let stats = d.stats.as_ref().unwrap();
        for r in &d.records {
            let back = stats.saturation_time(stats.standardize_target(r.saturation_time));
            assert!((back / r.saturation_time - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn binary_round_trip() {
        let mut d = small(16, 40, 6);
        d.fit_normalization().unwrap();
        let bytes = d.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"ALDS");
        assert_eq!(Dataset::from_bytes(&bytes).unwrap(), d);
    }

    #[test]
    fn binary_errors_are_distinct() {
        let d = small(4, 10, 6);
        let bytes = d.to_bytes().unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Dataset::from_bytes(&bad), Err(DatasetError::BadMagic(_))));

        let mut bad = bytes.clone();
        bad[4..6].copy_from_slice(&9999u16.to_le_bytes());
        assert!(matches!(Dataset::from_bytes(&bad), Err(DatasetError::UnsupportedVersion(9999))));

        let bad = &bytes[..bytes.len() - 9];
        assert!(matches!(Dataset::from_bytes(bad), Err(DatasetError::Truncated { .. })));

        let mut bad = bytes.clone();
        let k = bad.len() - 20;
        bad[k] ^= 0x40;
        assert!(matches!(Dataset::from_bytes(&bad), Err(DatasetError::ChecksumMismatch { .. })));

        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(Dataset::from_bytes(&bad), Err(DatasetError::TrailingBytes(1))));
    }

    #[test]
    fn csv_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let d = small(4, 1, 1);
        export_csv(&d, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), "x_0,x_1,x_2,x_3,t_dose,t_sat");

        let empty = Dataset {
            records: vec![],
            ..d.clone()
        };
        export_csv(&empty, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 1);
        assert!(import_csv(&path).unwrap().is_empty());
    }
}
