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

//! Rewrite passes: basis decomposition, peephole cancellation of adjacent
//! inverse pairs, and relabeling through a layout.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GateKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranspileError {
    #[error("no decomposition of `{0}` into the target basis")]
    MissingDecomposition(GateKind),
    #[error("layout maps two logical qubits onto physical qubit {0}")]
    NonInjective(usize),
    #[error("physical qubit {index} outside device width {width}")]
    PhysicalOutOfRange { index: usize, width: usize },
    #[error("logical qubit {0} has no entry in the layout")]
    Unmapped(usize),
    #[error("layout keys must be the contiguous range 0..{0}")]
    SparseLayout(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Gate kinds a device executes natively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSet {
    pub allowed_1q: BTreeSet<GateKind>,
    pub allowed_2q: BTreeSet<GateKind>,
}

impl BasisSet {
    pub fn new(
        one: impl IntoIterator<Item = GateKind>,
        two: impl IntoIterator<Item = GateKind>,
    ) -> BasisSet {
        BasisSet {
            allowed_1q: one.into_iter().collect(),
            allowed_2q: two.into_iter().collect(),
        }
    }

    /// `{id, rz, sx, x}` plus `cx`.
    pub fn ibm() -> BasisSet {
        BasisSet::new(
            [GateKind::Id, GateKind::Rz, GateKind::Sx, GateKind::X],
            [GateKind::Cx],
        )
    }

    pub fn contains(&self, kind: GateKind) -> bool {
        !kind.is_unitary() || self.allowed_1q.contains(&kind) || self.allowed_2q.contains(&kind)
    }
}

impl Default for BasisSet {
    fn default() -> Self {
        BasisSet::ibm()
    }
}

/// Replacement word for a gate kind, on operands `(a, b)`.
fn rule(g: &Gate) -> Option<Vec<Gate>> {
    let a = g.qubits[0];
    let b = g.qubits.get(1).copied().unwrap_or(usize::MAX);
    let w = match g.kind {
        GateKind::H => vec![Gate::rz(FRAC_PI_2, a), Gate::one(GateKind::Sx, a), Gate::rz(FRAC_PI_2, a)],
        GateKind::S => vec![Gate::rz(FRAC_PI_2, a)],
        GateKind::Sdg => vec![Gate::rz(-FRAC_PI_2, a)],
        GateKind::Z => vec![Gate::rz(PI, a)],
        GateKind::Y => vec![Gate::rz(PI, a), Gate::one(GateKind::X, a)],
        GateKind::Cz => vec![
            Gate::one(GateKind::H, b),
            Gate::two(GateKind::Cx, a, b),
            Gate::one(GateKind::H, b),
        ],
        GateKind::Swap => vec![
            Gate::two(GateKind::Cx, a, b),
            Gate::two(GateKind::Cx, b, a),
            Gate::two(GateKind::Cx, a, b),
        ],
        _ => return None,
    };
    Some(w)
}

fn lower(g: Gate, basis: &BasisSet, out: &mut Vec<Gate>, depth: usize) -> Result<(), TranspileError> {
    if basis.contains(g.kind) {
        out.push(g);
        return Ok(());
    }
    let kind = g.kind;
    let word = rule(&g).filter(|_| depth < 4).ok_or(TranspileError::MissingDecomposition(kind))?;
    for h in word {
        lower(h, basis, out, depth + 1)?;
    }
    Ok(())
}

/// Rewrites every gate into `basis` (measure, reset and barrier pass
/// through). The result equals the input up to a global phase.
pub fn decompose_to_basis(c: &Circuit, basis: &BasisSet) -> Result<Circuit, TranspileError> {
    let mut out = Vec::with_capacity(c.len() * 2);
    for g in c.gates() {
        lower(g.clone(), basis, &mut out, 0)?;
    }
    Ok(Circuit::from_gates(c.n_qubits(), c.n_clbits(), out)?)
}

fn self_inverse(kind: GateKind) -> bool {
    matches!(
        kind,
        GateKind::X | GateKind::Z | GateKind::H | GateKind::Cx | GateKind::Cz | GateKind::Swap
    )
}

fn same_operands(a: &Gate, b: &Gate) -> bool {
    match a.kind {
        GateKind::Cz | GateKind::Swap => {
            a.qubits == b.qubits || (a.qubits[0] == b.qubits[1] && a.qubits[1] == b.qubits[0])
        }
        _ => a.qubits == b.qubits,
    }
}

fn cancels(prev: &Gate, next: &Gate) -> bool {
    if prev.kind != next.kind || !same_operands(prev, next) {
        return false;
    }
    if self_inverse(next.kind) {
        return true;
    }
    if next.kind == GateKind::Rz {
        let s = (prev.params[0] + next.params[0]).rem_euclid(TAU);
        return s < 1e-12 || TAU - s < 1e-12;
    }
    false
}

/// Removes adjacent pairs of mutually inverse gates on identical operands
/// with nothing in between on those qubits. A single pass reaches the
/// fixpoint: removing a pair re-exposes the gates underneath it, which the
/// per-qubit stacks track.
pub fn cancel_adjacent_inverses(c: &Circuit) -> Circuit {
    let n = c.n_qubits();
    let mut out: Vec<Option<Gate>> = Vec::with_capacity(c.len());
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); n];
    for g in c.gates() {
        if g.kind == GateKind::Barrier {
            let at = out.len();
            out.push(Some(g.clone()));
            for s in stacks.iter_mut() {
                s.push(at);
            }
            continue;
        }
        let top = stacks[g.qubits[0]].last().copied();
        let candidate = top.filter(|&j| {
            g.qubits.iter().all(|&q| stacks[q].last() == Some(&j))
                && out[j].as_ref().is_some_and(|p| {
                    p.kind != GateKind::Barrier && p.qubits.len() == g.qubits.len() && cancels(p, g)
                })
        });
        match candidate {
            Some(j) => {
                out[j] = None;
                for &q in &g.qubits {
                    stacks[q].pop();
                }
            }
            None => {
                let at = out.len();
                out.push(Some(g.clone()));
                for &q in &g.qubits {
                    stacks[q].push(at);
                }
            }
        }
    }
    Circuit::from_gates(c.n_qubits(), c.n_clbits(), out.into_iter().flatten())
        .expect("subsequence of a valid circuit is valid")
}

/// Injective map from logical to physical qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Layout {
    map: Vec<usize>,
}

impl Layout {
    pub fn new(map: Vec<usize>) -> Layout {
        Layout { map }
    }

    pub fn identity(n: usize) -> Layout {
        Layout::new((0..n).collect())
    }

    pub fn physical(&self, logical: usize) -> Option<usize> {
        self.map.get(logical).copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn validate(&self, device_width: usize) -> Result<(), TranspileError> {
        let mut seen = BTreeSet::new();
        for &p in &self.map {
            if p >= device_width {
                return Err(TranspileError::PhysicalOutOfRange {
                    index: p,
                    width: device_width,
                });
            }
            if !seen.insert(p) {
                return Err(TranspileError::NonInjective(p));
            }
        }
        Ok(())
    }
}

/// On-disk layout: `{"map": {"0": 5, "1": 3}, "device_width": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub map: BTreeMap<usize, usize>,
    pub device_width: usize,
}

impl LayoutFile {
    pub fn from_layout(l: &Layout, device_width: usize) -> LayoutFile {
        LayoutFile {
            map: l.map.iter().copied().enumerate().collect(),
            device_width,
        }
    }

    pub fn into_layout(self) -> Result<(Layout, usize), TranspileError> {
        let k = self.map.len();
        if self.map.keys().copied().ne(0..k) {
            return Err(TranspileError::SparseLayout(k));
        }
        let l = Layout::new(self.map.into_values().collect());
        l.validate(self.device_width)?;
        Ok((l, self.device_width))
    }
}

/// Rewrites every qubit index of `c` through `l` onto a register of
/// `device_width` qubits.
pub fn remap(c: &Circuit, l: &Layout, device_width: usize) -> Result<Circuit, TranspileError> {
    l.validate(device_width)?;
    let mut out = Circuit::new(device_width, c.n_clbits());
    for g in c.gates() {
        let mut h = g.clone();
        for q in h.qubits.iter_mut() {
            *q = l.physical(*q).ok_or(TranspileError::Unmapped(*q))?;
        }
        out.push(h)?;
    }
    Ok(out)
}

/// Basis decomposition followed by peephole cancellation.
pub fn transpile(c: &Circuit, basis: &BasisSet) -> Result<Circuit, TranspileError> {
    Ok(cancel_adjacent_inverses(&decompose_to_basis(c, basis)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;

    fn circ(src: &str) -> Circuit {
        parse_circuit(src).unwrap()
    }

    #[test]
    fn decomposition_words() {
        let b = BasisSet::ibm();
        let h = decompose_to_basis(&circ("qreg q[1]; h q[0];"), &b).unwrap();
        assert_eq!(
            h.gates(),
            &[Gate::rz(FRAC_PI_2, 0), Gate::one(GateKind::Sx, 0), Gate::rz(FRAC_PI_2, 0)]
        );
        let s = decompose_to_basis(&circ("qreg q[1]; s q[0];"), &b).unwrap();
        assert_eq!(s.gates(), &[Gate::rz(FRAC_PI_2, 0)]);
        let sw = decompose_to_basis(&circ("qreg q[2]; swap q[0],q[1];"), &b).unwrap();
        assert_eq!(
            sw.gates(),
            &[
                Gate::two(GateKind::Cx, 0, 1),
                Gate::two(GateKind::Cx, 1, 0),
                Gate::two(GateKind::Cx, 0, 1)
            ]
        );
        assert_eq!(sw.cnot_count(), 3);
    }

    #[test]
    fn missing_rule_is_an_error() {
        let b = BasisSet::new([GateKind::Rz], [GateKind::Cx]);
        assert_eq!(
            decompose_to_basis(&circ("qreg q[1]; h q[0];"), &b),
            Err(TranspileError::MissingDecomposition(GateKind::Sx))
        );
        assert_eq!(
            decompose_to_basis(&circ("qreg q[1]; x q[0];"), &b),
            Err(TranspileError::MissingDecomposition(GateKind::X))
        );
    }

    #[test]
    fn cancellation_examples() {
        let c = cancel_adjacent_inverses(&circ("qreg q[2]; cx q[0],q[1]; cx q[0],q[1];"));
        assert!(c.is_empty());
        let c = cancel_adjacent_inverses(&circ("qreg q[2]; h q[0]; x q[1]; h q[0];"));
        assert_eq!(c.gates(), &[Gate::one(GateKind::X, 1)]);
        let src = circ("qreg q[2]; cx q[0],q[1]; h q[1]; cx q[0],q[1];");
        assert_eq!(cancel_adjacent_inverses(&src), src);
        let c = cancel_adjacent_inverses(&circ("qreg q[1]; rz(0.5) q[0]; rz(-0.5) q[0]; rz(3.0) q[0];"));
        assert_eq!(c.gates(), &[Gate::rz(3.0, 0)]);
        let c = cancel_adjacent_inverses(&circ("qreg q[2]; h q[0]; cx q[0],q[1]; cx q[0],q[1]; h q[0];"));
        assert!(c.is_empty());
        let src = circ("qreg q[2]; h q[0]; barrier; h q[0];");
        assert_eq!(cancel_adjacent_inverses(&src), src);
        // cx direction matters
        let src = circ("qreg q[2]; cx q[0],q[1]; cx q[1],q[0];");
        assert_eq!(cancel_adjacent_inverses(&src), src);
    }

    #[test]
    fn remap_substitutes_indices() {
        let c = circ("qreg q[2]; cx q[0],q[1];");
        let r = remap(&c, &Layout::new(vec![5, 3]), 7).unwrap();
        assert_eq!(r.n_qubits(), 7);
        assert_eq!(r.gates(), &[Gate::two(GateKind::Cx, 5, 3)]);
        assert_eq!(remap(&c, &Layout::identity(2), 2).unwrap(), c);
        assert_eq!(
            remap(&c, &Layout::new(vec![1, 1]), 7),
            Err(TranspileError::NonInjective(1))
        );
        assert_eq!(
            remap(&c, &Layout::new(vec![1, 9]), 7),
            Err(TranspileError::PhysicalOutOfRange { index: 9, width: 7 })
        );
        assert_eq!(
            remap(&c, &Layout::new(vec![1]), 7),
            Err(TranspileError::Unmapped(1))
        );
    }

    #[test]
    fn layout_file_format() {
        let f: LayoutFile = serde_json::from_str(r#"{"map": {"0": 5, "1": 3}, "device_width": 7}"#).unwrap();
        let (l, w) = f.into_layout().unwrap();
        assert_eq!((l.as_slice(), w), (&[5usize, 3][..], 7));
        let f: LayoutFile = serde_json::from_str(r#"{"map": {"0": 5, "2": 3}, "device_width": 7}"#).unwrap();
        assert!(f.into_layout().is_err());
    }
}
