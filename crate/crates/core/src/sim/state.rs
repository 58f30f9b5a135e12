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

use num_complex::Complex64;

use crate::circuit::GateKind;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub type Mat2 = [[Complex64; 2]; 2];

/// 2×2 matrix of a single-qubit unitary kind.
pub fn matrix_1q(kind: GateKind, params: &[f64]) -> Option<Mat2> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = match kind {
        GateKind::Id => [[ONE, ZERO], [ZERO, ONE]],
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::H => [
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        ],
        GateKind::S => [[ONE, ZERO], [ZERO, I]],
        GateKind::Sdg => [[ONE, ZERO], [ZERO, -I]],
        GateKind::Sx => {
            let a = Complex64::new(0.5, 0.5);
            let b = Complex64::new(0.5, -0.5);
            [[a, b], [b, a]]
        }
        GateKind::Rz => {
            let t = params[0] / 2.0;
            [
                [Complex64::from_polar(1.0, -t), ZERO],
                [ZERO, Complex64::from_polar(1.0, t)],
            ]
        }
        _ => return None,
    };
    Some(m)
}

/// 4×4 matrix of a two-qubit kind in the basis |q1 q0⟩ where `q0` is the
/// gate's first operand (little-endian, first operand least significant).
pub fn matrix_2q(kind: GateKind) -> Option<[[Complex64; 4]; 4]> {
    let mut m = [[ZERO; 4]; 4];
    match kind {
        GateKind::Cx => {
            // control = first operand (bit 0), target = second (bit 1)
            for (col, row) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
                m[row][col] = ONE;
            }
        }
        GateKind::Cz => {
            for k in 0..4 {
                m[k][k] = if k == 3 { -ONE } else { ONE };
            }
        }
        GateKind::Swap => {
            for (col, row) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                m[row][col] = ONE;
            }
        }
        _ => return None,
    }
    Some(m)
}

/// Dense state over `n` qubits; qubit 0 is the least significant bit of the
/// amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n: usize) -> StateVector {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        StateVector { n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn reset_to_zero(&mut self) {
        self.amps.iter_mut().for_each(|a| *a = ZERO);
        self.amps[0] = ONE;
    }

    pub fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let stride = 1usize << q;
        for base in (0..self.amps.len()).step_by(stride << 1) {
            for i in base..base + stride {
                let a0 = self.amps[i];
                let a1 = self.amps[i + stride];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_x(&mut self, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    pub fn apply_z(&mut self, q: usize) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = -*a;
            }
        }
    }

    pub fn apply_y(&mut self, q: usize) {
        // Y = i·X·Z
        self.apply_z(q);
        self.apply_x(q);
        self.amps.iter_mut().for_each(|a| *a *= I);
    }

    /// Applies Pauli `code` (0 = I, 1 = X, 2 = Y, 3 = Z) to qubit `q`.
    pub fn apply_pauli(&mut self, q: usize, code: u8) {
        match code {
            0 => {}
            1 => self.apply_x(q),
            2 => self.apply_y(q),
            3 => self.apply_z(q),
            _ => unreachable!("pauli code {code}"),
        }
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) {
        let c = 1usize << control;
        let t = 1usize << target;
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        let ba = 1usize << a;
        let bb = 1usize << b;
        for i in 0..self.amps.len() {
            if i & ba != 0 && i & bb == 0 {
                self.amps.swap(i, (i & !ba) | bb);
            }
        }
    }

    /// Applies a unitary gate kind to the given (compacted) qubits.
    pub fn apply_gate(&mut self, kind: GateKind, qubits: &[usize], params: &[f64]) {
        match kind {
            GateKind::X => self.apply_x(qubits[0]),
            GateKind::Z => self.apply_z(qubits[0]),
            GateKind::Id => {}
            GateKind::Cx => self.apply_cx(qubits[0], qubits[1]),
            GateKind::Cz => self.apply_cz(qubits[0], qubits[1]),
            GateKind::Swap => self.apply_swap(qubits[0], qubits[1]),
            k => {
                let m = matrix_1q(k, params)
                    .unwrap_or_else(|| panic!("{k} has no single-qubit matrix"));
                self.apply_1q(qubits[0], &m);
            }
        }
    }

    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects qubit `q` onto `outcome` and renormalizes.
    pub fn collapse(&mut self, q: usize, outcome: bool, prob: f64) {
        let bit = 1usize << q;
        let scale = 1.0 / prob.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
    }

    /// Born probabilities of the qubits in `order`: bit `j` of the returned
    /// index is the value of qubit `order[j]`.
    pub fn marginal(&self, order: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << order.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut k = 0usize;
            for (j, &q) in order.iter().enumerate() {
                k |= ((i >> q) & 1) << j;
            }
            out[k] += p;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unitarity_error(m: &[Vec<Complex64>]) -> f64 {
        let n = m.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += m[k][i].conj() * m[k][j];
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    #[test]
    fn every_gate_matrix_is_unitary() {
        for kind in GateKind::ALL {
            if let Some(m) = matrix_1q(kind, &[0.731]) {
                let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.to_vec()).collect();
                assert!(unitarity_error(&rows) < 1e-12, "{kind}");
            }
            if let Some(m) = matrix_2q(kind) {
                let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.to_vec()).collect();
                assert!(unitarity_error(&rows) < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn specialised_kernels_match_matrices() {
        // Random-ish 3-qubit state, compare in-place kernels against the
        // dense 4×4 / 2×2 matrices.
        let mut base = StateVector::zero(3);
        base.apply_gate(GateKind::H, &[0], &[]);
        base.apply_gate(GateKind::Rz, &[0], &[0.3]);
        base.apply_gate(GateKind::Sx, &[1], &[]);
        base.apply_gate(GateKind::H, &[2], &[]);
        base.apply_gate(GateKind::Rz, &[2], &[1.1]);
        for kind in [GateKind::Cx, GateKind::Cz, GateKind::Swap] {
            for (a, b) in [(0usize, 2usize), (2, 1), (1, 0)] {
                let mut fast = base.clone();
                fast.apply_gate(kind, &[a, b], &[]);
                let m = matrix_2q(kind).unwrap();
                let mut slow = base.clone();
                let amps = base.amplitudes();
                for i in 0..8 {
                    let col = ((i >> a) & 1) | (((i >> b) & 1) << 1);
                    let mut s = ZERO;
                    for c2 in 0..4 {
                        let j = (i & !(1 << a) & !(1 << b)) | ((c2 & 1) << a) | ((c2 >> 1) << b);
                        s += m[col][c2] * amps[j];
                    }
                    slow.amps[i] = s;
                }
                for (x, y) in fast.amplitudes().iter().zip(slow.amplitudes()) {
                    assert!((x - y).norm() < 1e-14, "{kind} on ({a},{b})");
                }
            }
        }
        for (code, kind) in [(1u8, GateKind::X), (2, GateKind::Y), (3, GateKind::Z)] {
            let mut fast = base.clone();
            fast.apply_pauli(1, code);
            let mut slow = base.clone();
            slow.apply_1q(1, &matrix_1q(kind, &[]).unwrap());
            for (x, y) in fast.amplitudes().iter().zip(slow.amplitudes()) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn marginal_orders_bits() {
        let mut s = StateVector::zero(3);
        s.apply_x(2);
        assert_eq!(s.marginal(&[2, 0]), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.marginal(&[0, 2]), vec![0.0, 0.0, 1.0, 0.0]);
    }
}
