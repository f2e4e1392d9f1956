//! Run configuration: a TOML file describing the dataset, architecture,
//! training preset, and pruning hyperparameters. Round-trips losslessly
//! through serialization.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coevolution::CcepConfig;
use crate::dataset::{gen_blobs, gen_rings, load_idx, DataError, LabeledDataset};
use crate::group_ea::{GroupEaConfig, SelectionStrategy};
use crate::net::train::FinetuneConfig;
use crate::net::{ArchitectureSpec, LayerSpec, NetError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("unknown finetune preset {0:?} (expected desk, cifar10, or imagenet)")]
    UnknownPreset(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    Blobs {
        num_classes: usize,
        samples_per_class: usize,
        dims: usize,
        spread: f64,
        train_seed: u64,
        test_seed: u64,
    },
    Rings {
        num_classes: usize,
        samples_per_class: usize,
        noise: f64,
        train_seed: u64,
        test_seed: u64,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
}

impl DatasetConfig {
    /// Materialize the (train, test) pair. Synthetic splits are two
    /// independent seeded draws.
    pub fn build(&self) -> Result<(LabeledDataset, LabeledDataset), ConfigError> {
        match self {
            DatasetConfig::Blobs {
                num_classes,
                samples_per_class,
                dims,
                spread,
                train_seed,
                test_seed,
            } => Ok((
                gen_blobs(*num_classes, *samples_per_class, *dims, *spread, *train_seed)?,
                gen_blobs(*num_classes, *samples_per_class, *dims, *spread, *test_seed)?,
            )),
            DatasetConfig::Rings {
                num_classes,
                samples_per_class,
                noise,
                train_seed,
                test_seed,
            } => Ok((
                gen_rings(*num_classes, *samples_per_class, *noise, *train_seed)?,
                gen_rings(*num_classes, *samples_per_class, *noise, *test_seed)?,
            )),
            DatasetConfig::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                limit,
            } => Ok((
                load_idx(train_images, train_labels, *limit)?,
                load_idx(test_images, test_labels, *limit)?,
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    #[serde(flatten)]
    pub layer: LayerSpec,
    #[serde(default)]
    pub prunable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: Vec<LayerEntry>,
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ArchitectureSpec, ConfigError> {
        let layers = self.layers.iter().map(|e| e.layer.clone()).collect();
        let prunable = self.layers.iter().map(|e| e.prunable).collect();
        Ok(ArchitectureSpec::new(layers, prunable)?)
    }
}

/// Finetune preset name plus optional field overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FinetuneSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub milestones: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
}

impl FinetuneSection {
    pub fn resolve(&self) -> Result<FinetuneConfig, ConfigError> {
        let name = self.preset.as_deref().unwrap_or("desk");
        let mut cfg = FinetuneConfig::preset(name)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        if let Some(v) = self.initial_lr {
            cfg.initial_lr = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = &self.milestones {
            cfg.milestones = v.clone();
        }
        if let Some(v) = self.momentum {
            cfg.momentum = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSection {
    pub seed: u64,
    #[serde(flatten)]
    pub finetune: FinetuneSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSection {
    pub population: usize,
    pub generations: usize,
    pub p1: f64,
    pub p2: f64,
    pub ratio_bound: f64,
    pub selection: SelectionStrategy,
    #[serde(default)]
    pub seed: u64,
}

impl GroupSection {
    pub fn to_config(&self) -> GroupEaConfig {
        GroupEaConfig {
            population: self.population,
            generations: self.generations,
            p1: self.p1,
            p2: self.p2,
            ratio_bound: self.ratio_bound,
            selection: self.selection,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcepSection {
    pub iterations: usize,
    pub ds_fraction: f64,
    pub global_seed: u64,
    pub group: GroupSection,
    #[serde(default)]
    pub finetune: FinetuneSection,
}

impl CcepSection {
    pub fn to_config(&self) -> Result<CcepConfig, ConfigError> {
        Ok(CcepConfig {
            iterations: self.iterations,
            group: self.group.to_config(),
            ds_fraction: self.ds_fraction,
            finetune: self.finetune.resolve()?,
            global_seed: self.global_seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub ccep: CcepSection,
    #[serde(default)]
    pub verbose: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        // fail early on inconsistent sections
        cfg.model.to_spec()?;
        cfg.train.finetune.resolve()?;
        cfg.ccep.to_config()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Stable hex digest of the canonical serialized form, recorded in
    /// archive entries so runs can be traced back to their configs.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml().as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// A ready-made desk-scale configuration: wide two-hidden-layer MLP on
/// four Gaussian blob classes.
pub fn desk_example() -> RunConfig {
    RunConfig {
        dataset: DatasetConfig::Blobs {
            num_classes: 4,
            samples_per_class: 250,
            dims: 16,
            spread: 0.8,
            train_seed: 1,
            test_seed: 2,
        },
        model: ModelConfig {
            layers: vec![
                LayerEntry {
                    layer: LayerSpec::Dense {
                        in_units: 16,
                        out_units: 64,
                    },
                    prunable: true,
                },
                LayerEntry {
                    layer: LayerSpec::Relu,
                    prunable: false,
                },
                LayerEntry {
                    layer: LayerSpec::Dense {
                        in_units: 64,
                        out_units: 64,
                    },
                    prunable: true,
                },
                LayerEntry {
                    layer: LayerSpec::Relu,
                    prunable: false,
                },
                LayerEntry {
                    layer: LayerSpec::Dense {
                        in_units: 64,
                        out_units: 4,
                    },
                    prunable: false,
                },
            ],
        },
        train: TrainSection {
            seed: 7,
            finetune: FinetuneSection {
                preset: Some("desk".into()),
                ..FinetuneSection::default()
            },
        },
        ccep: CcepSection {
            iterations: 8,
            ds_fraction: 0.2,
            global_seed: 42,
            group: GroupSection {
                population: 5,
                generations: 10,
                p1: 0.05,
                p2: 0.1,
                ratio_bound: 0.1,
                selection: SelectionStrategy::SelA,
                seed: 0,
            },
            finetune: FinetuneSection {
                preset: Some("desk".into()),
                ..FinetuneSection::default()
            },
        },
        verbose: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialize_parse_serialize_is_a_fixed_point() {
        let cfg = desk_example();
        let text = cfg.to_toml();
        let parsed: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.to_toml(), text);
    }

    #[test]
    fn fingerprint_is_stable_and_content_sensitive() {
        let a = desk_example();
        let mut b = desk_example();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.ccep.global_seed = 43;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn example_config_builds_all_components() {
        let cfg = desk_example();
        let spec = cfg.model.to_spec().unwrap();
        assert_eq!(spec.prunable_layers(), vec![0, 2]);
        let (train, test) = cfg.dataset.build().unwrap();
        assert_eq!(train.len(), 1000);
        assert_eq!(test.len(), 1000);
        assert_ne!(train, test);
        let ccep = cfg.ccep.to_config().unwrap();
        assert_eq!(ccep.iterations, 8);
        assert_eq!(ccep.finetune, FinetuneConfig::desk());
    }

    #[test]
    fn unknown_preset_is_rejected() {
        let section = FinetuneSection {
            preset: Some("gpu-cluster".into()),
            ..FinetuneSection::default()
        };
        assert!(matches!(
            section.resolve(),
            Err(ConfigError::UnknownPreset(_))
        ));
    }

    #[test]
    fn preset_overrides_apply() {
        let section = FinetuneSection {
            preset: Some("cifar10".into()),
            epochs: Some(20),
            milestones: Some(vec![10]),
            ..FinetuneSection::default()
        };
        let cfg = section.resolve().unwrap();
        assert_eq!(cfg.initial_lr, 0.1);
        assert_eq!(cfg.epochs, 20);
        assert_eq!(cfg.milestones, vec![10]);
    }
}
