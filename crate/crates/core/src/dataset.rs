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


//! Labeled RB corpora: generation, labeling, JSON-lines persistence and
//! train/validation/test splitting.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{emit_circuit, parse_circuit, Circuit, ParseError};
use crate::devices::Device;
use crate::metrics::{align, all_zero_counts, d_r2, expected_ideal_counts, MetricError};
use crate::rb::{generate_rb_circuit, RbError, RbSpec};
use crate::seed;
use crate::sim::{run_ideal, run_noisy, NoiseModel, SimError};
use crate::tokenizer::{labelize, TokenizeError};
use crate::transpile::{transpile, BasisSet, Layout, TranspileError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid dataset config: {0}")]
    Config(String),
    #[error("no records left after the depth cutoff of {0}")]
    Empty(usize),
    #[error("split ratios {0:?} leave a partition empty for {1} records")]
    DegenerateSplit([f64; 3], usize),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("record {id}: {source}")]
    Circuit {
        id: u64,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Rb(#[from] RbError),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub device: Device,
    pub n_records: usize,
    pub seq_len: RangeInclusive<usize>,
    pub active_qubits: RangeInclusive<usize>,
    pub shots: u64,
    pub depth_cutoff: usize,
    pub seed: u64,
    pub split: [f64; 3],
}

impl DatasetConfig {
    pub fn new(device: Device, n_records: usize, seed: u64) -> DatasetConfig {
        let width = device.width();
        DatasetConfig {
            device,
            n_records,
            seq_len: 1..=5,
            active_qubits: 1..=width,
            shots: 1024,
            depth_cutoff: 500,
            seed,
            split: [0.7, 0.2, 0.1],
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::Config(m.to_string()));
        if self.n_records == 0 {
            return bad("n_records must be positive");
        }
        if self.seq_len.is_empty() || *self.seq_len.start() == 0 {
            return bad("seq_len range must be non-empty and start at 1 or more");
        }
        if self.active_qubits.is_empty()
            || *self.active_qubits.start() == 0
            || *self.active_qubits.end() > self.device.width()
        {
            return bad("active-qubit range must lie within 1..=device width");
        }
        if self.shots == 0 {
            return bad("shots must be positive");
        }
        if self.depth_cutoff == 0 {
            return bad("depth cutoff must be at least 1");
        }
        check_ratios(&self.split)?;
        self.device
            .noise
            .validate()
            .map_err(|e| DatasetError::Config(e.to_string()))?;
        Ok(())
    }
}

fn check_ratios(r: &[f64; 3]) -> Result<(), DatasetError> {
    if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatasetError::Config(format!("split ratios {r:?} must be non-negative and sum to 1")));
    }
    Ok(())
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: u64,
    pub circuit: String,
    pub device: String,
    pub depth: usize,
    pub n_qubits_active: usize,
    pub placement: Vec<usize>,
    /// Seed of the noisy simulation that produced `label`.
    pub seed: u64,
    pub shots: u64,
    pub label: f64,
}

impl DatasetRecord {
    pub fn parse(&self) -> Result<Circuit, DatasetError> {
        parse_circuit(&self.circuit).map_err(|source| DatasetError::Circuit { id: self.id, source })
    }
}

/// Where the noise-free reference counts come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Every shot on |0…0⟩; valid for RB circuits without simulation.
    AllZeros,
    /// Exact simulation, rounded to expected counts.
    Simulated,
}

/// d-R² of one noisy run against the reference counts.
pub fn label_record(
    c: &Circuit,
    nm: &NoiseModel,
    shots: u64,
    seed: u64,
    reference: Reference,
) -> Result<f64, DatasetError> {
    let ideal = match reference {
        Reference::AllZeros => all_zero_counts(c.measurements().len(), shots),
        Reference::Simulated => expected_ideal_counts(&run_ideal(c)?, shots),
    };
    let noisy = run_noisy(c, nm, shots, seed)?;
    Ok(d_r2(&align(&ideal, &noisy)?)?)
}

/// A record that may or may not survive the depth cutoff.
fn make_record(cfg: &DatasetConfig, id: u64) -> Result<DatasetRecord, DatasetError> {
    let record_seed = seed::derive(cfg.seed, id);
    let mut rng = seed::child_rng(record_seed, 0);
    let n = rng.gen_range(cfg.active_qubits.clone());
    let seq_len = rng.gen_range(cfg.seq_len.clone());
    let mut phys: Vec<usize> = (0..cfg.device.width()).collect();
    phys.shuffle(&mut rng);
    phys.truncate(n);
    let placement = Layout::new(phys.clone());
    let spec = RbSpec::on_device(n, seq_len, rng.gen(), placement, &cfg.device.coupling);
    let rb = generate_rb_circuit(&spec)?;
    let c = transpile(&rb, &BasisSet::ibm())?;
    let depth = c.depth();
    let sim_seed = seed::derive(record_seed, 1);
    let label = if depth <= cfg.depth_cutoff {
        label_record(&c, &cfg.device.noise, cfg.shots, sim_seed, Reference::AllZeros)?
    } else {
        f64::NAN
    };
    Ok(DatasetRecord {
        id,
        circuit: emit_circuit(&c),
        device: cfg.device.name().to_string(),
        depth,
        n_qubits_active: n,
        placement: phys,
        seed: sim_seed,
        shots: cfg.shots,
        label,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthBin {
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
    pub mean_label: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub generated: usize,
    pub retained: usize,
    /// Gate-label histogram over the retained corpus.
    pub label_counts: BTreeMap<String, u64>,
    /// Mean label per depth decile of the retained corpus.
    pub depth_bins: Vec<DepthBin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub stats: DatasetStats,
}

fn map_ids<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(f).collect()
    }
}

pub fn build_dataset(cfg: &DatasetConfig) -> Result<Dataset, DatasetError> {
    cfg.validate()?;
    let all = map_ids(cfg.n_records, |id| make_record(cfg, id))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<DatasetRecord> = all
        .into_iter()
        .filter(|r| r.depth <= cfg.depth_cutoff)
        .collect();
    if records.is_empty() {
        return Err(DatasetError::Empty(cfg.depth_cutoff));
    }
    let stats = compute_stats(cfg.n_records, &records, cfg.device.width())?;
    Ok(Dataset { records, stats })
}

pub fn compute_stats(
    generated: usize,
    records: &[DatasetRecord],
    device_width: usize,
) -> Result<DatasetStats, DatasetError> {
    let mut label_counts = BTreeMap::new();
    for r in records {
        let g = labelize(&r.parse()?, device_width)?;
        for cell in g.cells() {
            *label_counts.entry(cell.to_string()).or_insert(0) += 1;
        }
    }
    Ok(DatasetStats {
        generated,
        retained: records.len(),
        label_counts,
        depth_bins: depth_deciles(records),
    })
}

/// Records sorted by depth and cut into ten equal-count bins.
pub fn depth_deciles(records: &[DatasetRecord]) -> Vec<DepthBin> {
    let mut sorted: Vec<(usize, f64)> = records.iter().map(|r| (r.depth, r.label)).collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = sorted.len();
    (0..10)
        .filter_map(|k| {
            let chunk = &sorted[k * n / 10..(k + 1) * n / 10];
            (!chunk.is_empty()).then(|| DepthBin {
                lo: chunk[0].0,
                hi: chunk[chunk.len() - 1].0,
                count: chunk.len(),
                mean_label: chunk.iter().map(|x| x.1).sum::<f64>() / chunk.len() as f64,
            })
        })
        .collect()
}

/// Shuffles with `seed` and cuts at the rounded ratio boundaries.
pub fn split<T: Clone>(
    items: &[T],
    ratios: [f64; 3],
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>), DatasetError> {
    check_ratios(&ratios)?;
    let n = items.len();
    let n_train = (n as f64 * ratios[0]).round() as usize;
    let n_val = ((n as f64 * ratios[1]).round() as usize).min(n - n_train.min(n));
    let n_train = n_train.min(n);
    let n_test = n - n_train - n_val;
    let sizes = [n_train, n_val, n_test];
    if sizes.iter().zip(&ratios).any(|(&s, &r)| r > 0.0 && s == 0) {
        return Err(DatasetError::DegenerateSplit(ratios, n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let pick = |r: &[usize]| r.iter().map(|&i| items[i].clone()).collect::<Vec<T>>();
    Ok((
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_val]),
        pick(&order[n_train + n_val..]),
    ))
}

pub fn write_jsonl<W: Write>(records: &[DatasetRecord], mut w: W) -> Result<(), DatasetError> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|source| DatasetError::Json { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| DatasetError::Json { line: i + 1, source })?;
        out.push(rec);
    }
    Ok(out)
}
