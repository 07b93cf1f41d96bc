use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::features::FeatureConfig;
use crate::search::Combine;
use crate::transducer::{PosteriorMode, TrainingOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub mode: PosteriorMode,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Keep hits scoring strictly above this value.
    pub threshold: Option<f64>,
    pub top: Option<usize>,
    pub combine: Combine,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus_dir: Option<PathBuf>,
    pub work_dir: Option<PathBuf>,
}

/// Everything a run depends on besides its input files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub training: TrainingOptions,
    pub decode: DecodeConfig,
    pub search: SearchConfig,
    pub paths: PathsConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Self = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.training.settings.validate()?;
        let mut hyper = self.training.hyper.clone();
        if self.training.data_prior.is_some() {
            // The NIW part is refitted to the data; only the concentrations matter.
            hyper.niw = crate::npb::Hyperparameters::default().niw;
        }
        hyper.validate()?;
        if let Some(p) = self.training.data_prior {
            if !(p.kappa > 0.0 && p.scatter_scale > 0.0) {
                return Err(Error::Config("data_prior kappa and scatter_scale must be positive".into()));
            }
        }
        if !(0.0..1.0).contains(&self.training.min_occupancy) {
            return Err(Error::Config("min_occupancy must lie in [0, 1)".into()));
        }
        if self.search.threshold.is_some_and(f64::is_nan) {
            return Err(Error::Config("search threshold is NaN".into()));
        }
        if self.search.top == Some(0) {
            return Err(Error::Config("search top must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = PipelineConfig::default();
        let text = c.to_toml().unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let c: PipelineConfig = toml::from_str(
            "[training]\nsweeps = 20\nseed = 3\n[training.settings]\ntruncation = 40\nvariant = \"dhdphmm\"\n[search]\nthreshold = -2.5\n",
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.training.sweeps, 20);
        assert_eq!(c.training.settings.truncation, 40);
        assert_eq!(c.search.threshold, Some(-2.5));
        assert_eq!(c.features, FeatureConfig::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[training]\nsweepz = 1\n").is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "[search]\ntop = 0\n").unwrap();
        assert!(matches!(PipelineConfig::load(&p), Err(Error::Config(_))));
        assert!(matches!(
            PipelineConfig::load(&dir.path().join("missing.toml")),
            Err(Error::Io { .. })
        ));
    }
}
