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


//! Pauli-frame propagation for Clifford programs with terminal measurements.
//!
//! A Pauli error inserted after step `i` is conjugated through the rest of
//! the circuit into another Pauli; only its X part matters at readout, where
//! it flips bits. A backward sweep records, for every error site, the flip
//! mask produced by X and by Z on each operand.

use std::f64::consts::FRAC_PI_2;

use super::{Op, Program};
use crate::circuit::GateKind;

/// A Pauli up to phase as (x bits, z bits) over compact qubits.
type Pauli = (u64, u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cliff {
    Identity,
    H,
    S,
    Sx,
    Cx,
    Cz,
    Swap,
}

const ANGLE_TOL: f64 = 1e-9;

fn classify(kind: GateKind, params: &[f64]) -> Option<Cliff> {
    Some(match kind {
        GateKind::Id | GateKind::X | GateKind::Y | GateKind::Z => Cliff::Identity,
        GateKind::H => Cliff::H,
        GateKind::S | GateKind::Sdg => Cliff::S,
        GateKind::Sx => Cliff::Sx,
        GateKind::Cx => Cliff::Cx,
        GateKind::Cz => Cliff::Cz,
        GateKind::Swap => Cliff::Swap,
        GateKind::Rz => {
            let k = params[0] / FRAC_PI_2;
            let r = k.round();
            if (k - r).abs() > ANGLE_TOL {
                return None;
            }
            if (r as i64).rem_euclid(2) == 0 {
                Cliff::Identity
            } else {
                Cliff::S
            }
        }
        GateKind::Measure | GateKind::Reset | GateKind::Barrier => return None,
    })
}

/// Flip masks for every step, indexed `[step][operand][0 = X, 1 = Z]`.
pub(super) struct FrameTable {
    masks: Vec<[[u64; 2]; 2]>,
}

impl FrameTable {
    /// `None` when some unitary is not Clifford.
    pub(super) fn build(prog: &Program) -> Option<FrameTable> {
        let gates = prog.circuit.gates();
        let mut kinds = Vec::with_capacity(prog.steps.len());
        for step in &prog.steps {
            kinds.push(match step.op {
                Op::Unitary { gate, .. } => {
                    let g = &gates[gate];
                    Some(classify(g.kind, &g.params)?)
                }
                _ => None,
            });
        }

        let n = prog.n;
        let mut img_x: Vec<Pauli> = (0..n).map(|q| (1 << q, 0)).collect();
        let mut img_z: Vec<Pauli> = (0..n).map(|q| (0, 1 << q)).collect();
        let mut masks = vec![[[0u64; 2]; 2]; prog.steps.len()];

        let to_bits = |x: u64| -> u64 {
            let mut m = 0;
            for (bit, &q) in prog.order.iter().enumerate() {
                if x >> q & 1 == 1 {
                    m |= 1 << bit;
                }
            }
            m
        };
        let mul = |a: Pauli, b: Pauli| (a.0 ^ b.0, a.1 ^ b.1);

        for (i, step) in prog.steps.iter().enumerate().rev() {
            let operands: [usize; 2] = match step.op {
                Op::Unitary { q, two, .. } => [q[0], if two { q[1] } else { q[0] }],
                Op::Idle { q } | Op::Reset { q } | Op::Measure { q, .. } => [q, q],
            };
            for (slot, &q) in operands.iter().enumerate() {
                masks[i][slot] = [to_bits(img_x[q].0), to_bits(img_z[q].0)];
            }
            let (a, b) = (operands[0], operands[1]);
            match kinds[i] {
                None | Some(Cliff::Identity) => {}
                Some(Cliff::H) => std::mem::swap(&mut img_x[a], &mut img_z[a]),
                // X -> Y = XZ, Z -> Z
                Some(Cliff::S) => img_x[a] = mul(img_x[a], img_z[a]),
                // X -> X, Z -> Y
                Some(Cliff::Sx) => img_z[a] = mul(img_x[a], img_z[a]),
                // Xc -> XcXt, Zt -> ZcZt
                Some(Cliff::Cx) => {
                    img_x[a] = mul(img_x[a], img_x[b]);
                    img_z[b] = mul(img_z[a], img_z[b]);
                }
                // Xa -> XaZb, Xb -> ZaXb
                Some(Cliff::Cz) => {
                    img_x[a] = mul(img_x[a], img_z[b]);
                    img_x[b] = mul(img_z[a], img_x[b]);
                }
                Some(Cliff::Swap) => {
                    img_x.swap(a, b);
                    img_z.swap(a, b);
                }
            }
        }
        Some(FrameTable { masks })
    }

    /// Readout flips caused by error `code` at step `i`.
    pub(super) fn flips(&self, prog: &Program, i: usize, code: u8) -> u64 {
        let m = &self.masks[i];
        let one = |slot: usize, c: u8| -> u64 {
            let mut f = 0;
            if c == 1 || c == 2 {
                f ^= m[slot][0];
            }
            if c == 2 || c == 3 {
                f ^= m[slot][1];
            }
            f
        };
        match prog.steps[i].op {
            Op::Unitary { two: true, .. } => one(0, code & 3) ^ one(1, code >> 2),
            Op::Unitary { .. } | Op::Idle { .. } => one(0, code),
            Op::Reset { .. } => one(0, 1),
            Op::Measure { .. } => 0,
        }
    }
}
