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


//! Per-lane text labels for layered circuits, a frequency-ranked
//! vocabulary, and fixed-width integer encoding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuit::{layerize, Circuit, GateKind};

/// Label of an idle lane.
pub const NONE: &str = "none";
/// Token reserved for padding.
pub const PAD: u32 = 0;
/// Default number of encoded timesteps.
pub const DEFAULT_T: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TokenizeError {
    #[error("circuit has {0} qubits, device has {1}")]
    TooWide(usize, usize),
    #[error("label `{0}` is not in the vocabulary")]
    UnknownLabel(String),
    #[error("token {0} is outside the vocabulary")]
    UnknownToken(u32),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("vocabulary is inconsistent: {0}")]
    BadVocab(String),
    #[error("grid is {0}x{1}, expected {2} lanes")]
    Shape(usize, usize, usize),
}

/// `labels[lane][column]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    pub lanes: usize,
    pub labels: Vec<Vec<String>>,
}

impl LabelGrid {
    pub fn depth(&self) -> usize {
        self.labels.first().map_or(0, Vec::len)
    }

    pub fn cells(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().flat_map(|l| l.iter().map(String::as_str))
    }
}

/// Qubit indices are written as bare digits on devices of at most ten
/// qubits ("cx03") and separated by `_` on wider ones ("cx10_12"), where
/// bare digits would be ambiguous.
fn gate_label(kind: GateKind, qubits: &[usize], device_width: usize) -> String {
    let name = match kind {
        GateKind::Measure => "m",
        GateKind::Reset => "r",
        k => k.name(),
    };
    let sep = if device_width > 10 { "_" } else { "" };
    let idx: Vec<String> = qubits.iter().map(usize::to_string).collect();
    format!("{name}{}", idx.join(sep))
}

pub fn labelize(c: &Circuit, device_width: usize) -> Result<LabelGrid, TokenizeError> {
    if c.n_qubits() > device_width {
        return Err(TokenizeError::TooWide(c.n_qubits(), device_width));
    }
    let layered = layerize(c);
    let depth = layered.depth();
    let mut labels = vec![vec![NONE.to_string(); depth]; device_width];
    for (col, layer) in layered.layers.iter().enumerate() {
        for &gi in &layer.gates {
            let g = &c.gates()[gi];
            let label = gate_label(g.kind, &g.qubits, device_width);
            for &q in &g.qubits {
                labels[q][col] = label.clone();
            }
        }
    }
    Ok(LabelGrid {
        lanes: device_width,
        labels,
    })
}

/// Label ↔ token table; tokens `1..=len` in descending frequency, ties by
/// label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabFile", into = "VocabFile")]
pub struct Vocab {
    table: BTreeMap<String, u32>,
    freq: BTreeMap<String, u64>,
    by_token: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    labels: BTreeMap<String, u32>,
    freq: BTreeMap<String, u64>,
}

impl TryFrom<VocabFile> for Vocab {
    type Error = TokenizeError;

    fn try_from(f: VocabFile) -> Result<Self, Self::Error> {
        let n = f.labels.len();
        let mut by_token = vec![String::new(); n];
        for (label, &t) in &f.labels {
            if t == PAD || t as usize > n || !by_token[t as usize - 1].is_empty() {
                return Err(TokenizeError::BadVocab(format!("token {t} for `{label}`")));
            }
            by_token[t as usize - 1] = label.clone();
        }
        Ok(Vocab {
            table: f.labels,
            freq: f.freq,
            by_token,
        })
    }
}

impl From<Vocab> for VocabFile {
    fn from(v: Vocab) -> Self {
        VocabFile {
            labels: v.table,
            freq: v.freq,
        }
    }
}

impl Vocab {
    pub fn from_counts(freq: BTreeMap<String, u64>) -> Result<Vocab, TokenizeError> {
        if freq.is_empty() {
            return Err(TokenizeError::EmptyCorpus);
        }
        let mut ranked: Vec<(&String, u64)> = freq.iter().map(|(l, &c)| (l, c)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let by_token: Vec<String> = ranked.iter().map(|(l, _)| (*l).clone()).collect();
        let table = by_token
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32 + 1))
            .collect();
        Ok(Vocab {
            table,
            freq,
            by_token,
        })
    }

    pub fn len(&self) -> usize {
        self.by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_token.is_empty()
    }

    pub fn token(&self, label: &str) -> Option<u32> {
        self.table.get(label).copied()
    }

    pub fn label(&self, token: u32) -> Option<&str> {
        (token as usize)
            .checked_sub(1)
            .and_then(|i| self.by_token.get(i))
            .map(String::as_str)
    }

    pub fn freq(&self, label: &str) -> u64 {
        self.freq.get(label).copied().unwrap_or(0)
    }

    /// Labels in token order.
    pub fn labels(&self) -> &[String] {
        &self.by_token
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("vocab serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn count_labels<'a>(grids: impl IntoIterator<Item = &'a LabelGrid>) -> BTreeMap<String, u64> {
    let mut freq = BTreeMap::new();
    for g in grids {
        for cell in g.cells() {
            *freq.entry(cell.to_string()).or_insert(0) += 1;
        }
    }
    freq
}

pub fn fit_vocab<'a>(grids: impl IntoIterator<Item = &'a LabelGrid>) -> Result<Vocab, TokenizeError> {
    Vocab::from_counts(count_labels(grids))
}

/// A `lanes × t` token grid stored time-major: `tokens[step * lanes + lane]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedCircuit {
    pub lanes: usize,
    pub t: usize,
    pub tokens: Vec<u32>,
}

impl TokenizedCircuit {
    pub fn step(&self, s: usize) -> &[u32] {
        &self.tokens[s * self.lanes..(s + 1) * self.lanes]
    }

    /// Number of leading all-padding columns.
    pub fn padding(&self) -> usize {
        (0..self.t)
            .take_while(|&s| self.step(s).iter().all(|&x| x == PAD))
            .count()
    }

    /// Prepends `k` padding columns, keeping the first `t` columns of the
    /// result (so the content is shifted right and truncated at the end).
    pub fn pad_prefix(&self, k: usize) -> TokenizedCircuit {
        let mut tokens = vec![PAD; self.lanes * self.t];
        let keep = self.t.saturating_sub(k);
        let src = &self.tokens[..keep * self.lanes];
        tokens[(self.t - keep) * self.lanes..].copy_from_slice(src);
        TokenizedCircuit {
            lanes: self.lanes,
            t: self.t,
            tokens,
        }
    }
}

/// Pre-pads with zero columns or truncates trailing columns to exactly `t`.
pub fn encode(g: &LabelGrid, v: &Vocab, t: usize) -> Result<TokenizedCircuit, TokenizeError> {
    let depth = g.depth();
    if g.labels.len() != g.lanes {
        return Err(TokenizeError::Shape(g.labels.len(), depth, g.lanes));
    }
    let kept = depth.min(t);
    let pad = t - kept;
    let mut tokens = vec![PAD; g.lanes * t];
    for (lane, row) in g.labels.iter().enumerate() {
        if row.len() != depth {
            return Err(TokenizeError::Shape(g.labels.len(), row.len(), g.lanes));
        }
        for (col, label) in row.iter().take(kept).enumerate() {
            let tok = v
                .token(label)
                .ok_or_else(|| TokenizeError::UnknownLabel(label.clone()))?;
            tokens[(pad + col) * g.lanes + lane] = tok;
        }
    }
    Ok(TokenizedCircuit {
        lanes: g.lanes,
        t,
        tokens,
    })
}

/// Inverse of [`encode`] with the padding columns dropped.
pub fn decode(x: &TokenizedCircuit, v: &Vocab) -> Result<LabelGrid, TokenizeError> {
    let start = x.padding();
    let mut labels = vec![Vec::with_capacity(x.t - start); x.lanes];
    for s in start..x.t {
        for (lane, &tok) in x.step(s).iter().enumerate() {
            let l = v.label(tok).ok_or(TokenizeError::UnknownToken(tok))?;
            labels[lane].push(l.to_string());
        }
    }
    Ok(LabelGrid {
        lanes: x.lanes,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use proptest::prelude::*;

    fn grid(src: &str, width: usize) -> LabelGrid {
        labelize(&parse_circuit(src).unwrap(), width).unwrap()
    }

    #[test]
    fn labels() {
        let g = grid("qreg q[4]; creg c[1]; h q[2]; cx q[0],q[3]; measure q[2] -> c[0];", 5);
        assert_eq!(g.depth(), 2);
        assert_eq!(g.labels[2], vec!["h2", "m2"]);
        assert_eq!(g.labels[0], vec!["cx03", "none"]);
        assert_eq!(g.labels[3], vec!["cx03", "none"]);
        assert_eq!(g.labels[4], vec!["none", "none"]);
        let g = grid("qreg q[2]; reset q[1]; cx q[1],q[0];", 2);
        assert_eq!(g.labels[1], vec!["r1", "cx10"]);
        let g = grid("qreg q[13]; cx q[10],q[12]; sx q[1];", 27);
        assert_eq!(g.labels[10][0], "cx10_12");
        assert_eq!(g.labels[1][0], "sx1");
        assert!(labelize(&parse_circuit("qreg q[8];").unwrap(), 7).is_err());
    }

    #[test]
    fn vocab_ranking() {
        let freq: BTreeMap<String, u64> =
            [("none", 100), ("cx01", 40), ("h0", 10)].map(|(l, c)| (l.to_string(), c)).into();
        let v = Vocab::from_counts(freq).unwrap();
        assert_eq!(v.token("none"), Some(1));
        assert_eq!(v.token("cx01"), Some(2));
        assert_eq!(v.token("h0"), Some(3));
        let tie: BTreeMap<String, u64> = [("b", 5), ("a", 5), ("c", 9)].map(|(l, c)| (l.to_string(), c)).into();
        let v = Vocab::from_counts(tie).unwrap();
        assert_eq!(v.labels(), ["c", "a", "b"]);
        assert!(Vocab::from_counts(BTreeMap::new()).is_err());
    }

    #[test]
    fn encode_pads_and_truncates() {
        let g = grid("qreg q[1]; x q[0]; h q[0]; x q[0];", 1);
        let v = fit_vocab([&g]).unwrap();
        let (x, h) = (v.token("x0").unwrap(), v.token("h0").unwrap());
        assert_eq!(encode(&g, &v, 5).unwrap().tokens, vec![0, 0, x, h, x]);
        let g7 = grid("qreg q[1]; x q[0]; h q[0]; x q[0]; h q[0]; x q[0]; h q[0]; x q[0];", 1);
        assert_eq!(encode(&g7, &v, 5).unwrap().tokens, vec![x, h, x, h, x]);
        let other = grid("qreg q[1]; sx q[0];", 1);
        assert_eq!(encode(&other, &v, 5), Err(TokenizeError::UnknownLabel("sx0".into())));
    }

    #[test]
    fn vocab_file_round_trip_and_hash() {
        let g = grid("qreg q[3]; creg c[1]; h q[2]; cx q[0],q[1]; measure q[0] -> c[0];", 3);
        let v = fit_vocab([&g]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        let back: Vocab = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.hash(), v.hash());
        assert_eq!(v.hash().len(), 64);
        assert!(serde_json::from_str::<Vocab>(r#"{"labels": {"a": 0}, "freq": {}}"#).is_err());
        assert!(serde_json::from_str::<Vocab>(r#"{"labels": {"a": 1, "b": 1}, "freq": {}}"#).is_err());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(c in crate::circuit::tests::arb_circuit(), extra in 0usize..6) {
            let g = labelize(&c, c.n_qubits()).unwrap();
            prop_assume!(g.depth() > 0);
            let v = fit_vocab([&g]).unwrap();
            let t = g.depth() + extra;
            let x = encode(&g, &v, t).unwrap();
            prop_assert!(x.tokens.iter().all(|&tok| tok as usize <= v.len()));
            // zeros appear only in whole leading columns
            let p = x.padding();
            prop_assert_eq!(p, extra);
            prop_assert!(x.tokens[p * x.lanes..].iter().all(|&tok| tok != PAD));
            prop_assert_eq!(decode(&x, &v).unwrap(), g);
        }

        #[test]
        fn two_qubit_labels_fill_both_lanes(c in crate::circuit::tests::arb_circuit()) {
            let g = labelize(&c, c.n_qubits()).unwrap();
            let layered = layerize(&c);
            for (col, layer) in layered.layers.iter().enumerate() {
                for &gi in &layer.gates {
                    let gate = &c.gates()[gi];
                    if gate.qubits.len() == 2 {
                        prop_assert_eq!(&g.labels[gate.qubits[0]][col], &g.labels[gate.qubits[1]][col]);
                    }
                }
            }
        }
    }
}
