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


//! Checkpoint layout: 8-byte magic, little-endian u64 header length, JSON
//! header, then every tensor as little-endian f32 in header order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::Model;
use super::{ModelConfig, NnError};

const MAGIC: &[u8; 8] = b"CFIDCKPT";
pub const FORMAT_VERSION: u32 = 1;
const MAX_HEADER: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub config: ModelConfig,
    pub vocab_hash: String,
    pub tensors: Vec<TensorEntry>,
}

fn err(m: impl Into<String>) -> NnError {
    NnError::Checkpoint(m.into())
}

pub fn write_checkpoint<W: Write>(m: &Model<f32>, vocab_hash: &str, mut w: W) -> Result<(), NnError> {
    let header = CheckpointHeader {
        format_version: FORMAT_VERSION,
        config: m.config().clone(),
        vocab_hash: vocab_hash.to_string(),
        tensors: m
            .tensors()
            .into_iter()
            .map(|t| TensorEntry {
                name: t.name,
                shape: t.shape,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| err(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(m.params().len() * 4);
    for spec in m.tensors() {
        for x in &m.params()[spec.offset..spec.offset + spec.len()] {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint; with `expected`, a different config is rejected.
pub fn read_checkpoint<R: Read>(
    mut r: R,
    expected: Option<&ModelConfig>,
) -> Result<(Model<f32>, CheckpointHeader), NnError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| err("file too short"))?;
    if &magic != MAGIC {
        return Err(err("not a checkpoint file"));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| err("truncated header length"))?;
    let len = u64::from_le_bytes(len);
    if len > MAX_HEADER {
        return Err(err(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(|_| err("truncated header"))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| err(format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(err(format!("unsupported format version {}", header.format_version)));
    }
    if let Some(cfg) = expected {
        if *cfg != header.config {
            return Err(NnError::ConfigMismatch);
        }
    }
    header.config.validate()?;
    let template = Model::<f32>::from_parts(
        header.config.clone(),
        vec![0.0; super::model::total_len(&header.config)],
    )?;
    let specs = template.tensors();
    let listed: Vec<(&str, &[usize])> = header
        .tensors
        .iter()
        .map(|t| (t.name.as_str(), t.shape.as_slice()))
        .collect();
    let wanted: Vec<(&str, &[usize])> = specs.iter().map(|t| (t.name.as_str(), t.shape.as_slice())).collect();
    if listed != wanted {
        return Err(err("tensor list does not match the config"));
    }
    let total: usize = specs.iter().map(|s| s.len()).sum();
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != total * 4 {
        return Err(err(format!("expected {} data bytes, found {}", total * 4, bytes.len())));
    }
    let mut params = vec![0.0f32; total];
    let mut chunks = bytes.chunks_exact(4);
    for spec in &specs {
        for p in &mut params[spec.offset..spec.offset + spec.len()] {
            let c = chunks.next().expect("length checked");
            *p = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        }
    }
    if params.iter().any(|x| !x.is_finite()) {
        return Err(err("non-finite parameter"));
    }
    Ok((Model::from_parts(header.config.clone(), params)?, header))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn save_checkpoint(path: &Path, m: &Model<f32>, vocab_hash: &str) -> Result<(), NnError> {
    let tmp = path.with_extension("tmp");
    {
        let f = std::fs::File::create(&tmp)?;
        write_checkpoint(m, vocab_hash, std::io::BufWriter::new(f))?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(
    path: &Path,
    expected: Option<&ModelConfig>,
) -> Result<(Model<f32>, CheckpointHeader), NnError> {
    let f = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(f), expected)
}
