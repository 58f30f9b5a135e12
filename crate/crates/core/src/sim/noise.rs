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

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("rate `{field}` = {value} is outside [0, 1]")]
    RateOutOfRange { field: String, value: f64 },
    #[error("multiplier {0} must be finite and non-negative")]
    BadMultiplier(f64),
    #[error("per-qubit arrays disagree in length ({0:?})")]
    LengthMismatch([usize; 4]),
    #[error("malformed edge key `{0}` (expected \"a-b\")")]
    BadEdgeKey(String),
    #[error("qubit {0} is not covered by the noise model")]
    QubitNotModeled(usize),
    #[error("edge {0}-{1} is not covered by the noise model")]
    EdgeNotModeled(usize, usize),
}

/// Undirected edge key with the smaller index first.
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn parse_edge_key(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once('-')?;
    let a = a.trim().parse().ok()?;
    let b = b.trim().parse().ok()?;
    (a != b).then(|| edge_key(a, b))
}

/// Per-qubit and per-edge error probabilities, all scaled by `multiplier`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseModelFile", into = "NoiseModelFile")]
pub struct NoiseModel {
    pub p1: Vec<f64>,
    pub p2: BTreeMap<(usize, usize), f64>,
    pub p_meas: Vec<f64>,
    pub p_reset: Vec<f64>,
    pub p_idle: Vec<f64>,
    pub multiplier: f64,
}

#[derive(Serialize, Deserialize)]
struct NoiseModelFile {
    p1: Vec<f64>,
    p2: BTreeMap<String, f64>,
    p_meas: Vec<f64>,
    p_reset: Vec<f64>,
    p_idle: Vec<f64>,
    multiplier: f64,
}

impl TryFrom<NoiseModelFile> for NoiseModel {
    type Error = NoiseError;

    fn try_from(f: NoiseModelFile) -> Result<Self, Self::Error> {
        let mut p2 = BTreeMap::new();
        for (k, v) in f.p2 {
            let e = parse_edge_key(&k).ok_or(NoiseError::BadEdgeKey(k))?;
            p2.insert(e, v);
        }
        let nm = NoiseModel {
            p1: f.p1,
            p2,
            p_meas: f.p_meas,
            p_reset: f.p_reset,
            p_idle: f.p_idle,
            multiplier: f.multiplier,
        };
        nm.validate()?;
        Ok(nm)
    }
}

impl From<NoiseModel> for NoiseModelFile {
    fn from(nm: NoiseModel) -> Self {
        NoiseModelFile {
            p1: nm.p1,
            p2: nm
                .p2
                .into_iter()
                .map(|((a, b), v)| (format!("{a}-{b}"), v))
                .collect(),
            p_meas: nm.p_meas,
            p_reset: nm.p_reset,
            p_idle: nm.p_idle,
            multiplier: nm.multiplier,
        }
    }
}

impl NoiseModel {
    /// Same base rates on every qubit and on every listed edge.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        n_qubits: usize,
        edges: &[(usize, usize)],
        p1: f64,
        p2: f64,
        p_meas: f64,
        p_reset: f64,
        p_idle: f64,
    ) -> NoiseModel {
        NoiseModel {
            p1: vec![p1; n_qubits],
            p2: edges.iter().map(|&(a, b)| (edge_key(a, b), p2)).collect(),
            p_meas: vec![p_meas; n_qubits],
            p_reset: vec![p_reset; n_qubits],
            p_idle: vec![p_idle; n_qubits],
            multiplier: 1.0,
        }
    }

    /// The gate / measurement / reset base rates 0.05, 0.1 and 0.03 on every
    /// qubit and on all pairs, scaled by `multiplier`.
    pub fn multiplier_sweep(n_qubits: usize, multiplier: f64) -> NoiseModel {
        let pairs: Vec<(usize, usize)> = (0..n_qubits)
            .flat_map(|a| (a + 1..n_qubits).map(move |b| (a, b)))
            .collect();
        NoiseModel::uniform(n_qubits, &pairs, 0.05, 0.05, 0.1, 0.03, 0.0).with_multiplier(multiplier)
    }

    pub fn with_multiplier(mut self, multiplier: f64) -> NoiseModel {
        self.multiplier = multiplier;
        self
    }

    /// Sets the same idle rate on every qubit.
    pub fn with_idle(mut self, p_idle: f64) -> NoiseModel {
        self.p_idle = vec![p_idle; self.p1.len()];
        self
    }

    /// Multiplies the current multiplier by `factor`.
    pub fn scaled(mut self, factor: f64) -> NoiseModel {
        self.multiplier *= factor;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.p1.len()
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(self.multiplier.is_finite() && self.multiplier >= 0.0) {
            return Err(NoiseError::BadMultiplier(self.multiplier));
        }
        let n = self.p1.len();
        let lens = [n, self.p_meas.len(), self.p_reset.len(), self.p_idle.len()];
        if lens.iter().any(|&l| l != n) {
            return Err(NoiseError::LengthMismatch(lens));
        }
        let named: [(&str, &[f64]); 4] = [
            ("p1", &self.p1),
            ("p_meas", &self.p_meas),
            ("p_reset", &self.p_reset),
            ("p_idle", &self.p_idle),
        ];
        for (field, rates) in named {
            for &value in rates {
                check_rate(field, value)?;
            }
        }
        for (&(a, b), &value) in &self.p2 {
            check_rate(&format!("p2[{a}-{b}]"), value)?;
        }
        Ok(())
    }

    fn eff(&self, base: f64) -> f64 {
        (base * self.multiplier).clamp(0.0, 1.0)
    }

    fn per_qubit(&self, v: &[f64], q: usize) -> Result<f64, NoiseError> {
        v.get(q)
            .map(|&p| self.eff(p))
            .ok_or(NoiseError::QubitNotModeled(q))
    }

    pub fn gate_1q(&self, q: usize) -> Result<f64, NoiseError> {
        self.per_qubit(&self.p1, q)
    }

    pub fn gate_2q(&self, a: usize, b: usize) -> Result<f64, NoiseError> {
        self.p2
            .get(&edge_key(a, b))
            .map(|&p| self.eff(p))
            .ok_or(NoiseError::EdgeNotModeled(a.min(b), a.max(b)))
    }

    pub fn measure(&self, q: usize) -> Result<f64, NoiseError> {
        self.per_qubit(&self.p_meas, q)
    }

    pub fn reset(&self, q: usize) -> Result<f64, NoiseError> {
        self.per_qubit(&self.p_reset, q)
    }

    pub fn idle(&self, q: usize) -> Result<f64, NoiseError> {
        self.per_qubit(&self.p_idle, q)
    }
}

fn check_rate(field: &str, value: f64) -> Result<(), NoiseError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(NoiseError::RateOutOfRange {
            field: field.to_string(),
            value,
        })
    }
}
