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


//! Sequence regressor: per-lane token embeddings concatenated per timestep,
//! one LSTM layer, and a dense head ending in a sigmoid.

mod checkpoint;
mod gradcheck;
mod model;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::TokenizedCircuit;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointHeader};
pub use gradcheck::{grad_check, GradCheckReport};
pub use model::{Model, Projection, TensorSpec};
pub use train::{fine_tune, loss, train, TrainConfig, TrainHistory};

/// Scalar type for parameters and activations.
pub trait Real:
    num_traits::Float + Send + Sync + std::fmt::Debug + std::iter::Sum + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("input is {got_lanes}x{got_t}, model expects {lanes}x{t}")]
    Shape {
        got_lanes: usize,
        got_t: usize,
        lanes: usize,
        t: usize,
    },
    #[error("token {0} exceeds vocabulary size {1}")]
    Token(u32, usize),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("empty {0} set")]
    EmptySet(&'static str),
    #[error("label {0} is outside [0, 1]")]
    Label(f64),
    #[error("invalid training config: {0}")]
    TrainConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint was saved for a different model config")]
    ConfigMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub lanes: usize,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub lstm_units: usize,
    pub dense_sizes: Vec<usize>,
    pub t: usize,
    pub shared_embedding: bool,
}

impl ModelConfig {
    pub fn new(lanes: usize, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            lanes,
            vocab_size,
            embed_dim: 64,
            lstm_units: 256,
            dense_sizes: vec![64, 16, 1],
            t: crate::tokenizer::DEFAULT_T,
            shared_embedding: true,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::Config(m.to_string()));
        if self.lanes == 0 || self.vocab_size == 0 || self.t == 0 {
            return bad("lanes, vocab_size and t must be positive");
        }
        if self.embed_dim == 0 || self.lstm_units == 0 {
            return bad("embed_dim and lstm_units must be positive");
        }
        if self.dense_sizes.last() != Some(&1) || self.dense_sizes.contains(&0) {
            return bad("dense_sizes must be positive and end in 1");
        }
        Ok(())
    }

    pub fn embedding_tables(&self) -> usize {
        if self.shared_embedding {
            1
        } else {
            self.lanes
        }
    }
}

/// Trainable parameters, excluding the frozen padding rows.
pub fn param_count(cfg: &ModelConfig) -> usize {
    let (e, h) = (cfg.embed_dim, cfg.lstm_units);
    let emb = cfg.embedding_tables() * cfg.vocab_size * e;
    let lstm = 4 * ((cfg.lanes * e + h) * h + h);
    let mut dense = 0;
    let mut fan_in = h;
    for &out in &cfg.dense_sizes {
        dense += fan_in * out + out;
        fan_in = out;
    }
    emb + lstm + dense
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: TokenizedCircuit,
    pub y: f64,
}
