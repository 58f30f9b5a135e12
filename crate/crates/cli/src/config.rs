// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.


//! Run configuration: a single JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use circfid::baseline::ErrorMap;
use circfid::dataset::DatasetConfig;
use circfid::devices::Device;
use circfid::layout::CouplingMap;
use circfid::nn::{ModelConfig, TrainConfig};
use circfid::sim::NoiseModel;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub const CONFIG_ENV: &str = "CIRCFID_CONFIG";

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in device name, used unless device files are given.
    pub device: Option<String>,
    pub coupling_map: Option<PathBuf>,
    pub noise_model: Option<PathBuf>,
    pub error_map: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dataset: DatasetSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub n_records: Option<usize>,
    pub seq_len: Option<[usize; 2]>,
    pub active_qubits: Option<[usize; 2]>,
    pub shots: Option<u64>,
    pub depth_cutoff: Option<usize>,
    pub split: Option<[f64; 3]>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub embed_dim: Option<usize>,
    pub lstm_units: Option<usize>,
    pub dense_sizes: Option<Vec<usize>>,
    pub t: Option<usize>,
    pub shared_embedding: Option<bool>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    pub epochs: Option<usize>,
    /// 0 disables early stopping.
    pub patience: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub trials: Option<usize>,
    pub shots: Option<u64>,
}

pub const DEFAULT_RECORDS: usize = 5600;
pub const DEFAULT_TRIALS: usize = 50;
pub const DEFAULT_SHOTS: u64 = 1024;

impl RunConfig {
    /// Loads `path`, or the all-defaults config when there is none.
    /// Relative paths inside the file resolve against its directory.
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.coupling_map, &mut cfg.noise_model, &mut cfg.error_map].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn device(&self) -> Result<Device, CliError> {
        let mut device = match &self.device {
            Some(name) => Device::by_name(name).ok_or_else(|| CliError::Config(format!("unknown device `{name}`")))?,
            None => Device::nairobi(),
        };
        if let Some(p) = &self.coupling_map {
            device.coupling = read_json::<CouplingMap>(p)?;
            if self.noise_model.is_none() {
                return Err(CliError::Config("a custom coupling map needs a noise model file".into()));
            }
        }
        if let Some(p) = &self.noise_model {
            device.noise = read_json::<NoiseModel>(p)?;
        }
        if device.noise.n_qubits() != device.width() {
            return Err(CliError::Config(format!(
                "noise model covers {} qubits, coupling map has {}",
                device.noise.n_qubits(),
                device.width()
            )));
        }
        if let Some(e) = device.noise.p2.keys().find(|&&(a, b)| !device.coupling.has_edge(a, b)) {
            return Err(CliError::Config(format!("noise model prices uncoupled edge {}-{}", e.0, e.1)));
        }
        Ok(device)
    }

    /// The configured error map, or one derived from the device noise.
    pub fn error_map(&self, device: &Device) -> Result<ErrorMap, CliError> {
        let em = match &self.error_map {
            Some(p) => read_json::<ErrorMap>(p)?,
            None => ErrorMap::from_noise_model(&device.noise)?,
        };
        em.check_against(&device.coupling).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(em)
    }

    pub fn dataset_config(&self, device: Device) -> DatasetConfig {
        let d = &self.dataset;
        let mut cfg = DatasetConfig::new(device, d.n_records.unwrap_or(DEFAULT_RECORDS), self.seed());
        if let Some([a, b]) = d.seq_len {
            cfg.seq_len = a..=b;
        }
        if let Some([a, b]) = d.active_qubits {
            cfg.active_qubits = a..=b;
        }
        if let Some(s) = d.shots {
            cfg.shots = s;
        }
        if let Some(c) = d.depth_cutoff {
            cfg.depth_cutoff = c;
        }
        if let Some(s) = d.split {
            cfg.split = s;
        }
        cfg
    }

    pub fn model_config(&self, lanes: usize, vocab: usize) -> ModelConfig {
        let m = &self.model;
        let d = ModelConfig::new(lanes, vocab);
        ModelConfig {
            embed_dim: m.embed_dim.unwrap_or(d.embed_dim),
            lstm_units: m.lstm_units.unwrap_or(d.lstm_units),
            dense_sizes: m.dense_sizes.clone().unwrap_or(d.dense_sizes),
            t: m.t.unwrap_or(d.t),
            shared_embedding: m.shared_embedding.unwrap_or(d.shared_embedding),
            ..d
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        let d = TrainConfig::default();
        TrainConfig {
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            lr: t.lr.unwrap_or(d.lr),
            beta1: t.beta1.unwrap_or(d.beta1),
            beta2: t.beta2.unwrap_or(d.beta2),
            eps: t.eps.unwrap_or(d.eps),
            epochs: t.epochs.unwrap_or(d.epochs),
            patience: match t.patience {
                Some(0) => None,
                Some(p) => Some(p),
                None => d.patience,
            },
            seed: self.seed(),
        }
    }

    pub fn trials(&self) -> usize {
        self.eval.trials.unwrap_or(DEFAULT_TRIALS)
    }

    pub fn shots(&self) -> u64 {
        self.eval.shots.unwrap_or(DEFAULT_SHOTS)
    }
}

/// Reads an input JSON file; parse failures are input-format errors.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
