//! Run configuration files.
//!
//! A run is described by one TOML file with a section per module. Every key has a
//! default (see `maxent-cluster print-config`), so a file only lists what it changes.
//! Relative paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use maxent_cluster::data::{self, CsvOptions, Dataset, MinMaxScaling};
use maxent_cluster::evaluation::GridSpec;
use maxent_cluster::gradcheck::GradcheckConfig;
use maxent_cluster::network::{Activation, NetworkConfig};
use maxent_cluster::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub network: NetworkSection,
    pub training: TrainConfig,
    pub output: OutputSection,
    pub sweep: SweepSection,
    pub grid: GridSpec,
    pub gradcheck: GradcheckConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Label used in result files; defaults to the descriptor name or the file stem.
    pub name: Option<String>,
    pub path: Option<PathBuf>,
    /// Manifest entry whose layout and expected shape apply to `path`.
    pub descriptor: Option<String>,
    /// Layout of `path` when no descriptor is given.
    pub csv: CsvOptions,
    /// Min-max scale features to `[0, 1]` before training.
    pub normalize: bool,
    /// Synthetic Gaussian blobs instead of a file.
    pub blobs: Option<BlobsSection>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            name: None,
            path: None,
            descriptor: None,
            csv: CsvOptions::default(),
            normalize: true,
            blobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobsSection {
    pub centers: Vec<Vec<f64>>,
    pub per_center: usize,
    pub spread: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub hidden_sizes: Vec<usize>,
    /// Defaults to the number of classes in the data.
    pub cluster_count: Option<usize>,
    pub activation: Activation,
    pub include_bias: bool,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let base = NetworkConfig::new(1, vec![8], 2);
        NetworkSection {
            hidden_sizes: base.hidden_sizes,
            cluster_count: None,
            activation: base.activation,
            include_bias: base.include_bias,
            init_scale: base.init_scale,
            seed: base.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub model: PathBuf,
    pub report: PathBuf,
    pub assignments: PathBuf,
    /// Add the confidence column to the assignments file.
    pub confidence: bool,
    pub contingency: PathBuf,
    pub sweep: PathBuf,
    pub grid: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            model: "model.txt".into(),
            report: "train_report.csv".into(),
            assignments: "assignments.csv".into(),
            confidence: true,
            contingency: "contingency.csv".into(),
            sweep: "sweep.csv".into(),
            grid: "grid.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub sizes: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            sizes: (2..=20).collect(),
        }
    }
}

/// A dataset as loaded, before any scaling.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub name: String,
    pub data: Dataset,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)
            .map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        let prefixed = |section: &str, e: maxent_cluster::Error| match e {
            maxent_cluster::Error::Config { field, reason } => {
                CliError::config(format!("`{section}.{field}`: {reason}"))
            }
            other => CliError::config(other.to_string()),
        };
        self.training.validate().map_err(|e| prefixed("training", e))?;
        if let Some(k) = self.network.cluster_count {
            if k < 2 {
                return Err(CliError::config(format!("`network.cluster_count`: must be at least 2, got {k}")));
            }
        }
        if let Some(&w) = self.network.hidden_sizes.iter().find(|&&w| w < 2) {
            return Err(CliError::config(format!(
                "`network.hidden_sizes`: every hidden layer needs width >= 2, got {w}"
            )));
        }
        if !(self.network.init_scale.is_finite() && self.network.init_scale >= 0.0) {
            return Err(CliError::config("`network.init_scale`: must be finite and non-negative"));
        }
        if self.sweep.sizes.iter().any(|&w| w < 2) {
            return Err(CliError::config("`sweep.sizes`: every width must be at least 2"));
        }
        match (&self.data.path, &self.data.blobs) {
            (Some(_), Some(_)) => {
                return Err(CliError::config("`data`: give either `path` or `blobs`, not both"))
            }
            (None, _) if self.data.descriptor.is_some() => {
                return Err(CliError::config("`data.descriptor` needs `data.path`"))
            }
            _ => {}
        }
        if let Some(name) = &self.data.descriptor {
            if data::descriptor(name).is_none() {
                let known: Vec<&str> = data::manifest().iter().map(|d| d.name.as_str()).collect();
                return Err(CliError::config(format!(
                    "`data.descriptor`: unknown dataset `{name}` (known: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_path(&self, file: &Path) -> PathBuf {
        if file.is_absolute() {
            file.to_path_buf()
        } else {
            self.resolve(&self.output.dir).join(file)
        }
    }

    /// Loads the configured dataset, optionally from an overriding path.
    pub fn load_data(&self, path_override: Option<&Path>) -> CliResult<LoadedData> {
        if let (Some(b), None) = (&self.data.blobs, path_override) {
            let data = data::make_blobs(&b.centers, b.per_center, b.spread, b.seed)?;
            let name = self.data.name.clone().unwrap_or_else(|| "blobs".into());
            return Ok(LoadedData { name, data });
        }
        let path = match path_override {
            Some(p) => p.to_path_buf(),
            None => self
                .data
                .path
                .as_deref()
                .map(|p| self.resolve(p))
                .ok_or_else(|| CliError::config("`data`: set `path` or `blobs`"))?,
        };
        let descriptor = self.data.descriptor.as_deref().and_then(data::descriptor);
        let data = match descriptor {
            Some(d) => data::load_described(&path, d)?,
            None => data::load_csv(&path, &self.data.csv)?,
        };
        let name = self
            .data
            .name
            .clone()
            .or_else(|| descriptor.map(|d| d.name.clone()))
            .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "data".into());
        Ok(LoadedData { name, data })
    }

    /// Scaling fitted on `data` when normalization is on.
    pub fn fit_scaling(&self, data: &Dataset) -> Option<MinMaxScaling> {
        self.data
            .normalize
            .then(|| MinMaxScaling::fit(data.features()))
    }

    /// Network configuration for data of the given width and class count.
    pub fn network_config(&self, input_dim: usize, classes: Option<usize>) -> CliResult<NetworkConfig> {
        let cluster_count = self.network.cluster_count.or(classes).ok_or_else(|| {
            CliError::config("`network.cluster_count` is required for unlabelled data")
        })?;
        let cfg = NetworkConfig {
            input_dim,
            hidden_sizes: self.network.hidden_sizes.clone(),
            cluster_count,
            activation: self.network.activation,
            include_bias: self.network.include_bias,
            init_scale: self.network.init_scale,
            seed: self.network.seed,
        };
        cfg.validate().map_err(|e| match e {
            maxent_cluster::Error::Config { field, reason } => {
                CliError::config(format!("`network.{field}`: {reason}"))
            }
            other => other.into(),
        })?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = RunConfig::parse("[training]\nlambda = 2.0\n[network]\nhidden_sizes = [3]\n").unwrap();
        assert_eq!(cfg.training.lambda, 2.0);
        assert_eq!(cfg.training.learning_rate, TrainConfig::default().learning_rate);
        assert_eq!(cfg.network.hidden_sizes, vec![3]);
        assert!(cfg.data.normalize);
    }

    #[test]
    fn bad_values_name_their_field() {
        let e = RunConfig::parse("[training]\nlearning_rate = -1.0\n").unwrap_err();
        assert!(e.message.contains("training.learning_rate"), "{}", e.message);
        let e = RunConfig::parse("[network]\nhidden_sizes = [1]\n").unwrap_err();
        assert!(e.message.contains("network.hidden_sizes"), "{}", e.message);
        let e = RunConfig::parse("[training]\nlearning_rat = 1.0\n").unwrap_err();
        assert!(e.message.contains("learning_rat"), "{}", e.message);
        let e = RunConfig::parse("[data]\ndescriptor = \"iris\"\npath = \"x\"\n").unwrap_err();
        assert!(e.message.contains("iris"), "{}", e.message);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg = RunConfig::parse("[data]\npath = \"d.csv\"\n[output]\ndir = \"res\"\n").unwrap();
        cfg.base_dir = PathBuf::from("/tmp/exp");
        assert_eq!(cfg.resolve(Path::new("d.csv")), PathBuf::from("/tmp/exp/d.csv"));
        assert_eq!(
            cfg.output_path(Path::new("model.txt")),
            PathBuf::from("/tmp/exp/res/model.txt")
        );
        assert_eq!(cfg.resolve(Path::new("/abs")), PathBuf::from("/abs"));
    }

    #[test]
    fn blobs_section_builds_a_dataset() {
        let cfg = RunConfig::parse(
            "[data.blobs]\ncenters = [[0.0, 0.0], [3.0, 3.0]]\nper_center = 5\nspread = 0.2\n",
        )
        .unwrap();
        let loaded = cfg.load_data(None).unwrap();
        assert_eq!(loaded.name, "blobs");
        assert_eq!(loaded.data.len(), 10);
        let net = cfg.network_config(loaded.data.dim(), loaded.data.num_classes()).unwrap();
        assert_eq!(net.cluster_count, 2);
    }
}
