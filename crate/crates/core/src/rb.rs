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

//! Randomized-benchmarking circuit generation.
//!
//! An RB circuit is a run of random Clifford gate words followed by the
//! gate-wise reversed inverse of everything before it, so the net ideal
//! operation is the identity and a noise-free run always reads `0…0`.

use std::ops::RangeInclusive;

use rand::Rng as _;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GateKind};
use crate::layout::CouplingMap;
use crate::seed;
use crate::transpile::{remap, Layout, TranspileError};

pub const CLIFFORD_1Q: [GateKind; 4] = [GateKind::X, GateKind::Z, GateKind::S, GateKind::H];
pub const CLIFFORD_2Q: [GateKind; 3] = [GateKind::Cx, GateKind::Cz, GateKind::Swap];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RbError {
    #[error("`{0}` has no inverse in an RB sequence")]
    NonInvertible(GateKind),
    #[error("invalid RB spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
}

/// Parameters of one RB circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct RbSpec {
    pub n_active: usize,
    /// Number of random Clifford words before the reversal.
    pub seq_len: usize,
    /// Word-length range; defaults to `5n..=20n`.
    pub gates_per_element: RangeInclusive<usize>,
    pub seed: u64,
    /// Logical → physical placement of the active qubits.
    pub placement: Layout,
    pub device_width: usize,
    /// Logical pairs that may host a two-qubit gate; `None` allows all.
    pub allowed_pairs: Option<Vec<(usize, usize)>>,
}

impl RbSpec {
    /// Spec on the first `n_active` qubits of an `n_active`-wide register.
    pub fn new(n_active: usize, seq_len: usize, seed: u64) -> RbSpec {
        RbSpec {
            n_active,
            seq_len,
            gates_per_element: default_word_range(n_active),
            seed,
            placement: Layout::identity(n_active),
            device_width: n_active,
            allowed_pairs: None,
        }
    }

    /// Spec placed onto `device`, with two-qubit gates restricted to logical
    /// pairs whose images are coupled.
    pub fn on_device(
        n_active: usize,
        seq_len: usize,
        seed: u64,
        placement: Layout,
        device: &CouplingMap,
    ) -> RbSpec {
        let p = placement.as_slice();
        let pairs = (0..n_active)
            .flat_map(|a| (a + 1..n_active).map(move |b| (a, b)))
            .filter(|&(a, b)| device.has_edge(p[a], p[b]))
            .collect();
        RbSpec {
            n_active,
            seq_len,
            gates_per_element: default_word_range(n_active),
            seed,
            placement,
            device_width: device.n_qubits(),
            allowed_pairs: Some(pairs),
        }
    }

    fn validate(&self) -> Result<(), RbError> {
        if self.n_active == 0 {
            return Err(RbError::BadSpec("n_active must be at least 1".into()));
        }
        if self.seq_len == 0 {
            return Err(RbError::BadSpec("seq_len must be at least 1".into()));
        }
        if self.gates_per_element.is_empty() || *self.gates_per_element.start() == 0 {
            return Err(RbError::BadSpec("word length range must be non-empty and positive".into()));
        }
        if self.placement.len() != self.n_active {
            return Err(RbError::BadSpec(format!(
                "placement covers {} qubits, spec has {}",
                self.placement.len(),
                self.n_active
            )));
        }
        self.placement.validate(self.device_width)?;
        Ok(())
    }
}

pub fn default_word_range(n: usize) -> RangeInclusive<usize> {
    5 * n..=20 * n
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect()
}

/// Draws `len` Clifford gates. Each draw picks a kind uniformly among the
/// available ones (the 2q kinds only when a pair exists) and then operands
/// uniformly: one qubit, or one ordered pair from `pairs`.
pub fn random_word_with(
    n: usize,
    len: usize,
    pairs: &[(usize, usize)],
    rng: &mut seed::Rng,
) -> Circuit {
    let kinds = if pairs.is_empty() { 4 } else { 7 };
    let mut c = Circuit::new(n, 0);
    for _ in 0..len {
        let k = rng.gen_range(0..kinds);
        let g = if k < 4 {
            Gate::one(CLIFFORD_1Q[k], rng.gen_range(0..n))
        } else {
            let (a, b) = pairs[rng.gen_range(0..pairs.len())];
            let (a, b) = if rng.gen::<bool>() { (a, b) } else { (b, a) };
            Gate::two(CLIFFORD_2Q[k - 4], a, b)
        };
        c.push(g).expect("operands in range");
    }
    c
}

/// Random Clifford word over all pairs of `n` qubits.
pub fn random_clifford_word(n: usize, len: usize, seed: u64) -> Circuit {
    random_word_with(n, len, &all_pairs(n), &mut seed::rng(seed))
}

fn inverse_of(g: &Gate) -> Result<Vec<Gate>, RbError> {
    let q = g.qubits.first().copied().unwrap_or(0);
    Ok(match g.kind {
        GateKind::Id
        | GateKind::X
        | GateKind::Y
        | GateKind::Z
        | GateKind::H
        | GateKind::Cx
        | GateKind::Cz
        | GateKind::Swap
        | GateKind::Barrier => vec![g.clone()],
        GateKind::S => vec![Gate::one(GateKind::Z, q), Gate::one(GateKind::S, q)],
        GateKind::Sdg => vec![Gate::one(GateKind::S, q)],
        GateKind::Sx => vec![Gate::one(GateKind::Sx, q); 3],
        GateKind::Rz => vec![Gate::rz(-g.params[0], q)],
        k @ (GateKind::Measure | GateKind::Reset) => return Err(RbError::NonInvertible(k)),
    })
}

/// Appends the reversed inverse of `c`; `s` is undone as `z · s`.
pub fn append_inverse(c: &Circuit) -> Result<Circuit, RbError> {
    let mut out = c.clone();
    for g in c.gates().iter().rev() {
        for h in inverse_of(g)? {
            out.push(h)?;
        }
    }
    Ok(out)
}

/// Words, then the reversal, then a measurement of every active qubit
/// (logical `q` into classical bit `q`), placed onto the device.
pub fn generate_rb_circuit(spec: &RbSpec) -> Result<Circuit, RbError> {
    spec.validate()?;
    let n = spec.n_active;
    let pairs = match &spec.allowed_pairs {
        Some(p) => p.clone(),
        None => all_pairs(n),
    };
    let mut rng = seed::rng(spec.seed);
    let mut prefix = Circuit::new(n, n);
    for _ in 0..spec.seq_len {
        let len = rng.gen_range(spec.gates_per_element.clone());
        prefix.extend_from(&random_word_with(n, len, &pairs, &mut rng))?;
    }
    let mut full = append_inverse(&prefix)?;
    for q in 0..n {
        full.push(Gate::measure(q, q))?;
    }
    Ok(remap(&full, &spec.placement, spec.device_width)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::run_ideal;

    #[test]
    fn single_qubit_words_have_no_pairs() {
        let w = random_clifford_word(1, 500, 4);
        assert!(w.gates().iter().all(|g| g.qubits.len() == 1));
        assert_eq!(w.len(), 500);
    }

    #[test]
    fn words_are_seed_deterministic() {
        assert_eq!(random_clifford_word(3, 50, 9), random_clifford_word(3, 50, 9));
        assert_ne!(random_clifford_word(3, 50, 9), random_clifford_word(3, 50, 10));
        let s = RbSpec::new(3, 4, 77);
        assert_eq!(generate_rb_circuit(&s).unwrap(), generate_rb_circuit(&s).unwrap());
    }

    #[test]
    fn kind_histogram_is_uniform() {
        let draws = 100_000usize;
        let w = random_clifford_word(3, draws, 1234);
        let kinds: Vec<GateKind> = CLIFFORD_1Q.iter().chain(&CLIFFORD_2Q).copied().collect();
        let p = 1.0 / kinds.len() as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for k in kinds {
            let n = w.count_kind(k) as f64;
            assert!((n - draws as f64 * p).abs() < 3.0 * sigma, "{k}: {n}");
        }
    }

    #[test]
    fn inverse_appends_expected_gates() {
        let c = Circuit::from_gates(1, 0, [Gate::one(GateKind::H, 0), Gate::one(GateKind::S, 0)]).unwrap();
        let full = append_inverse(&c).unwrap();
        assert_eq!(
            &full.gates()[2..],
            &[
                Gate::one(GateKind::Z, 0),
                Gate::one(GateKind::S, 0),
                Gate::one(GateKind::H, 0)
            ]
        );
        let c = Circuit::from_gates(2, 0, [Gate::two(GateKind::Cx, 0, 1)]).unwrap();
        assert_eq!(&append_inverse(&c).unwrap().gates()[1..], &[Gate::two(GateKind::Cx, 0, 1)]);
        let m = Circuit::from_gates(1, 1, [Gate::measure(0, 0)]).unwrap();
        assert_eq!(append_inverse(&m), Err(RbError::NonInvertible(GateKind::Measure)));
    }

    #[test]
    fn inverse_length_counts_s_twice() {
        for seed in 0..20 {
            let w = random_clifford_word(3, 60, seed);
            let full = append_inverse(&w).unwrap();
            assert_eq!(full.len() - w.len(), w.len() + w.count_kind(GateKind::S));
        }
    }

    #[test]
    fn rb_circuits_are_identity() {
        for seed in 0..40u64 {
            let n = 1 + (seed as usize % 4);
            let spec = RbSpec::new(n, 1 + (seed as usize % 5), seed);
            let c = generate_rb_circuit(&spec).unwrap();
            let d = run_ideal(&c).unwrap();
            assert!(d.probs()[0] >= 1.0 - 1e-9, "seed {seed}: {}", d.probs()[0]);
        }
    }

    #[test]
    fn device_placement_respects_coupling() {
        let dev = CouplingMap::nairobi();
        let spec = RbSpec::on_device(3, 3, 5, Layout::new(vec![1, 3, 5]), &dev);
        assert_eq!(spec.allowed_pairs, Some(vec![(0, 1), (1, 2)]));
        let c = generate_rb_circuit(&spec).unwrap();
        assert_eq!(c.n_qubits(), 7);
        for g in c.gates().iter().filter(|g| g.qubits.len() == 2) {
            assert!(dev.has_edge(g.qubits[0], g.qubits[1]));
        }
        assert_eq!(c.measurements(), vec![(1, 0), (3, 1), (5, 2)]);
    }

    #[test]
    fn spec_validation() {
        assert!(generate_rb_circuit(&RbSpec::new(0, 1, 0)).is_err());
        assert!(generate_rb_circuit(&RbSpec::new(2, 0, 0)).is_err());
        let mut s = RbSpec::new(2, 1, 0);
        s.placement = Layout::new(vec![0, 0]);
        assert!(generate_rb_circuit(&s).is_err());
    }
}
