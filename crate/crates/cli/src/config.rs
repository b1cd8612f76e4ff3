//! Optional JSON run configuration and flag resolution.

use std::fs;
use std::path::Path;

use aldsat::dataset::{DatasetMeta, ParameterPriors, DEFAULT_THETA_SAT, DEFAULT_TRAIN_SEED, STANDARD_POINT_COUNTS};
use aldsat::neuralnet::TrainConfig;
use aldsat::transport::ReactorGeometry;
use serde::{Deserialize, Serialize};

use crate::{usage, CliResult, CommonArgs, DataArgs, TrainingArgs};

pub const DEFAULT_TRAINING_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 100_000;

/// Everything a config file may set. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub points: Option<usize>,
    pub point_counts: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub train_samples: Option<usize>,
    pub test_samples: Option<usize>,
    pub seed: Option<u64>,
    pub train_seed: Option<u64>,
    pub hidden: Option<String>,
    pub archs: Option<Vec<String>>,
    pub widths: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub workers: Option<usize>,
    pub theta_sat: Option<f64>,
    pub geometry: Option<ReactorGeometry>,
    pub priors: Option<ParameterPriors>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read config {}: {e}", path.display())),
        };
        serde_json::from_str(&text).or_else(|e| usage(format!("config {}: {e}", path.display())))
    }

    pub fn from_common(common: &CommonArgs) -> CliResult<Self> {
        match &common.config {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn workers(&self, common: &CommonArgs) -> CliResult<usize> {
        let w = common.workers.or(self.workers).unwrap_or(1);
        if w == 0 {
            return usage("--workers must be at least 1");
        }
        Ok(w)
    }

    pub fn data_settings(&self, flags: &DataArgs) -> CliResult<DataSettings> {
        let mut geometry = self.geometry.unwrap_or_default();
        if let Some(v) = flags.length {
            geometry.length = v;
        }
        if let Some(v) = flags.radius {
            geometry.radius = v;
        }
        if let Some(v) = flags.gas_velocity {
            geometry.gas_velocity = v;
        }
        if let Err(e) = geometry.validate() {
            return usage(format!("geometry: {e}"));
        }
        let priors = self.priors.unwrap_or_default();
        if let Err(e) = priors.validate() {
            return usage(format!("priors: {e}"));
        }
        let theta_sat = flags.theta_sat.or(self.theta_sat).unwrap_or(DEFAULT_THETA_SAT);
        if !(theta_sat > 0.0 && theta_sat < 1.0) {
            return usage(format!("theta_sat must lie in (0, 1), got {theta_sat}"));
        }
        Ok(DataSettings {
            geometry,
            priors,
            theta_sat,
            seed: flags.seed.or(self.seed).unwrap_or(DEFAULT_TRAIN_SEED),
        })
    }

    pub fn train_config(&self, flags: &TrainingArgs) -> CliResult<TrainConfig> {
        let seed = flags.train_seed.or(self.train_seed).unwrap_or(DEFAULT_TRAINING_SEED);
        let base = TrainConfig::default().with_seed(seed);
        let config = TrainConfig {
            epochs: flags.epochs.or(self.epochs).unwrap_or(base.epochs),
            batch_size: flags.batch_size.or(self.batch_size).unwrap_or(base.batch_size),
            learning_rate: flags.lr.or(self.learning_rate).unwrap_or(base.learning_rate),
            ..base
        };
        if let Err(e) = config.validate() {
            return usage(e.to_string());
        }
        Ok(config)
    }
}

/// Resolved dataset settings shared by every point count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataSettings {
    pub geometry: ReactorGeometry,
    pub priors: ParameterPriors,
    pub theta_sat: f64,
    /// Training split seed; the test split uses `seed + 1`.
    pub seed: u64,
}

impl DataSettings {
    pub fn meta(&self, n_points: usize, seed: u64) -> DatasetMeta {
        DatasetMeta::new(n_points, self.geometry, self.priors, seed, self.theta_sat)
    }

    pub fn test_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }
}

pub fn check_point_count(n: usize, allow_custom: bool) -> CliResult<()> {
    if n == 0 {
        return usage("--points must be at least 1");
    }
    if !allow_custom && !STANDARD_POINT_COUNTS.contains(&n) {
        return usage(format!(
            "--points {n} is not one of {STANDARD_POINT_COUNTS:?}; pass --allow-custom to use it"
        ));
    }
    Ok(())
}

/// `none` (or empty) is the shallow network; otherwise comma-separated widths.
pub fn parse_hidden(spec: &str) -> CliResult<Vec<usize>> {
    let spec = spec.trim();
    if spec.is_empty() || spec.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    spec.split(',')
        .map(|w| match w.trim().parse::<usize>() {
            Ok(0) | Err(_) => usage(format!("bad hidden width `{w}` in `{spec}`")),
            Ok(v) => Ok(v),
        })
        .collect()
}

/// Fails unless `path` exists as a file.
pub fn require_file(path: &Path) -> CliResult<()> {
    if !path.is_file() {
        return usage(format!("input file {} does not exist", path.display()));
    }
    Ok(())
}

/// Fails unless the parent directory of `path` exists.
pub fn require_writable_parent(path: &Path) -> CliResult<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => return Ok(()),
    };
    if !parent.is_dir() {
        return usage(format!("output directory {} does not exist", parent.display()));
    }
    Ok(())
}

/// Creates `dir` (and parents) or reports a usage error.
pub fn prepare_dir(dir: &Path) -> CliResult<()> {
    if dir.exists() && !dir.is_dir() {
        return usage(format!("{} exists and is not a directory", dir.display()));
    }
    fs::create_dir_all(dir).or_else(|e| usage(format!("cannot create {}: {e}", dir.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_specs() {
        assert_eq!(parse_hidden("none").unwrap(), Vec::<usize>::new());
        assert_eq!(parse_hidden("30").unwrap(), vec![30]);
        assert_eq!(parse_hidden("30,10").unwrap(), vec![30, 10]);
        assert!(parse_hidden("30,0").is_err());
        assert!(parse_hidden("abc").is_err());
    }

    #[test]
    fn point_counts() {
        for n in STANDARD_POINT_COUNTS {
            assert!(check_point_count(n, false).is_ok());
        }
        assert!(check_point_count(7, false).is_err());
        assert!(check_point_count(7, true).is_ok());
        assert!(check_point_count(0, true).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"epochs": 3, "epoch": 4}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"epochs": 3, "geometry": {"length": 0.5, "radius": 0.02, "gas_velocity": 1.0}}"#).unwrap();
        assert_eq!(c.epochs, Some(3));
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            epochs: Some(7),
            learning_rate: Some(0.01),
            ..RunConfig::default()
        };
        let flags = TrainingArgs {
            epochs: Some(3),
            ..TrainingArgs::default()
        };
        let c = file.train_config(&flags).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.learning_rate, 0.01);
        assert_eq!(c.batch_size, 64);
        let d = RunConfig::default().train_config(&TrainingArgs::default()).unwrap();
        assert_eq!(d.summary(), "epochs=100 batch=64 lr=0.001");
    }
}
