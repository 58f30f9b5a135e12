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


//! Glue between dataset records, the tokenizer and the network.

use thiserror::Error;

use crate::circuit::Circuit;
use crate::dataset::{DatasetError, DatasetRecord};
use crate::nn::{NnError, Sample};
use crate::tokenizer::{encode, fit_vocab, labelize, LabelGrid, TokenizeError, TokenizedCircuit, Vocab};
use crate::transpile::{transpile, BasisSet, TranspileError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
}

pub fn record_grids(records: &[DatasetRecord], device_width: usize) -> Result<Vec<LabelGrid>, PipelineError> {
    records
        .iter()
        .map(|r| Ok(labelize(&r.parse()?, device_width)?))
        .collect()
}

pub fn fit_record_vocab(records: &[DatasetRecord], device_width: usize) -> Result<Vocab, PipelineError> {
    Ok(fit_vocab(&record_grids(records, device_width)?)?)
}

pub fn encode_records(
    records: &[DatasetRecord],
    vocab: &Vocab,
    device_width: usize,
    t: usize,
) -> Result<Vec<Sample>, PipelineError> {
    records
        .iter()
        .map(|r| {
            let g = labelize(&r.parse()?, device_width)?;
            Ok(Sample {
                x: encode(&g, vocab, t)?,
                y: r.label,
            })
        })
        .collect()
}

/// Lowers an arbitrary device-placed circuit to the training basis and
/// encodes it.
pub fn encode_circuit(
    c: &Circuit,
    vocab: &Vocab,
    device_width: usize,
    t: usize,
) -> Result<TokenizedCircuit, PipelineError> {
    let lowered = transpile(c, &BasisSet::ibm())?;
    Ok(encode(&labelize(&lowered, device_width)?, vocab, t)?)
}

/// A trained network together with the vocabulary and device width it was
/// trained for.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub model: crate::nn::Model<f32>,
    pub vocab: Vocab,
    pub device_width: usize,
}

impl Predictor {
    pub fn encode(&self, c: &Circuit) -> Result<TokenizedCircuit, PipelineError> {
        encode_circuit(c, &self.vocab, self.device_width, self.model.config().t)
    }

    pub fn predict(&self, c: &Circuit) -> Result<f64, PipelineError> {
        Ok(self.predict_many(std::slice::from_ref(c))?[0])
    }

    pub fn predict_many(&self, cs: &[Circuit]) -> Result<Vec<f64>, PipelineError> {
        let xs = cs.iter().map(|c| self.encode(c)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.model.predict_many(&xs)?.into_iter().map(f64::from).collect())
    }
}
