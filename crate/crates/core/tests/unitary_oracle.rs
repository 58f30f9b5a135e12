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


//! Dense-unitary checks for the transpiler and circuit inversion.

use circfid::circuit::{Circuit, Gate, GateKind};
use circfid::rb::{append_inverse, random_clifford_word};
use circfid::transpile::{cancel_adjacent_inverses, decompose_to_basis, transpile, BasisSet};
use num_complex::Complex64 as C;
use proptest::prelude::*;

type Matrix = Vec<Vec<C>>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn single(kind: GateKind, params: &[f64]) -> [[C; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match kind {
        GateKind::Id => [[o, z], [z, o]],
        GateKind::X => [[z, o], [o, z]],
        GateKind::Y => [[z, -i], [i, z]],
        GateKind::Z => [[o, z], [z, -o]],
        GateKind::H => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        GateKind::S => [[o, z], [z, i]],
        GateKind::Sdg => [[o, z], [z, -i]],
        GateKind::Sx => [[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]],
        GateKind::Rz => {
            let t = params[0] / 2.0;
            [[C::from_polar(1.0, -t), z], [z, C::from_polar(1.0, t)]]
        }
        k => panic!("{k:?} is not a one-qubit unitary"),
    }
}

/// Full 2^n matrix; qubit q is bit q of the basis index.
fn unitary(circuit: &Circuit) -> Matrix {
    let n = circuit.n_qubits();
    let dim = 1usize << n;
    let mut u: Matrix = (0..dim)
        .map(|r| (0..dim).map(|col| if r == col { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect();
    for g in circuit.gates() {
        let mut step: Matrix = vec![vec![c(0.0, 0.0); dim]; dim];
        match g.kind {
            GateKind::Barrier => continue,
            GateKind::Cx | GateKind::Cz | GateKind::Swap => {
                let (a, b) = (g.qubits[0], g.qubits[1]);
                for col in 0..dim {
                    let (ba, bb) = ((col >> a) & 1, (col >> b) & 1);
                    let (row, sign) = match g.kind {
                        GateKind::Cx => (if ba == 1 { col ^ (1 << b) } else { col }, 1.0),
                        GateKind::Cz => (col, if ba & bb == 1 { -1.0 } else { 1.0 }),
                        _ => (col & !(1 << a) & !(1 << b) | (ba << b) | (bb << a), 1.0),
                    };
                    step[row][col] = c(sign, 0.0);
                }
            }
            k => {
                let m = single(k, &g.params);
                let q = g.qubits[0];
                for col in 0..dim {
                    let bit = (col >> q) & 1;
                    for out in 0..2 {
                        step[col & !(1 << q) | (out << q)][col] = m[out][bit];
                    }
                }
            }
        }
        u = multiply(&step, &u);
    }
    u
}

fn multiply(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|r| (0..n).map(|col| (0..n).map(|k| a[r][k] * b[k][col]).sum()).collect())
        .collect()
}

/// Largest entry-wise distance after removing the global phase.
fn phase_distance(a: &Matrix, b: &Matrix) -> f64 {
    let (r, col) = (0..a.len())
        .flat_map(|r| (0..a.len()).map(move |col| (r, col)))
        .max_by(|&(r1, c1), &(r2, c2)| a[r1][c1].norm().total_cmp(&a[r2][c2].norm()))
        .unwrap();
    if b[r][col].norm() < 1e-12 {
        return f64::INFINITY;
    }
    let phase = b[r][col] / a[r][col];
    let phase = phase / phase.norm();
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p * phase - q).norm()))
        .fold(0.0, |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) })
}

fn identity_distance(u: &Matrix) -> f64 {
    let id: Matrix = (0..u.len())
        .map(|r| (0..u.len()).map(|col| if r == col { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect();
    phase_distance(&id, u)
}

fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
    let one = (
        prop::sample::select(vec![
            GateKind::Id,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::H,
            GateKind::S,
            GateKind::Sdg,
            GateKind::Sx,
            GateKind::Rz,
        ]),
        0..n,
        -6.3f64..6.3,
    )
        .prop_map(|(k, q, t)| if k == GateKind::Rz { Gate::rz(t, q) } else { Gate::one(k, q) });
    let two = (
        prop::sample::select(vec![GateKind::Cx, GateKind::Cz, GateKind::Swap]),
        0..n,
        1..n,
    )
        .prop_map(move |(k, a, off)| Gate::two(k, a, (a + off) % n));
    prop_oneof![3 => one, 1 => two]
}

fn arb_unitary_circuit() -> impl Strategy<Value = Circuit> {
    (2usize..=3).prop_flat_map(|n| {
        prop::collection::vec(arb_gate(n), 0..24).prop_map(move |gates| {
            let mut c = Circuit::new(n, 0);
            for g in gates {
                c.push(g).unwrap();
            }
            c
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn transpile_preserves_the_unitary(c in arb_unitary_circuit()) {
        let basis = BasisSet::ibm();
        let t = transpile(&c, &basis).unwrap();
        prop_assert!(t.gates().iter().all(|g| g.kind == GateKind::Barrier || basis.contains(g.kind)));
        prop_assert!(phase_distance(&unitary(&c), &unitary(&t)) < 1e-9);
        let d = decompose_to_basis(&c, &basis).unwrap();
        prop_assert!(phase_distance(&unitary(&c), &unitary(&d)) < 1e-9);
        let k = cancel_adjacent_inverses(&c);
        prop_assert!(k.len() <= c.len());
        prop_assert!(phase_distance(&unitary(&c), &unitary(&k)) < 1e-9);
    }

    #[test]
    fn appended_inverse_is_identity(c in arb_unitary_circuit()) {
        let full = append_inverse(&c).unwrap();
        prop_assert_eq!(full.len() >= 2 * c.len(), true);
        prop_assert!(identity_distance(&unitary(&full)) < 1e-9);
    }

    #[test]
    fn clifford_words_invert(n in 1usize..=3, len in 1usize..=6, seed in any::<u64>()) {
        let w = random_clifford_word(n, len, seed);
        let u = unitary(&append_inverse(&w).unwrap());
        prop_assert!(identity_distance(&u) < 1e-9);
        let lowered = transpile(&append_inverse(&w).unwrap(), &BasisSet::ibm()).unwrap();
        prop_assert!(identity_distance(&unitary(&lowered)) < 1e-9);
    }
}

#[test]
fn oracle_matches_known_identities() {
    let mut hzh = Circuit::new(1, 0);
    for k in [GateKind::H, GateKind::Z, GateKind::H] {
        hzh.push(Gate::one(k, 0)).unwrap();
    }
    let mut x = Circuit::new(1, 0);
    x.push(Gate::one(GateKind::X, 0)).unwrap();
    assert!(phase_distance(&unitary(&hzh), &unitary(&x)) < 1e-12);

    let mut three_cx = Circuit::new(2, 0);
    for (a, b) in [(0, 1), (1, 0), (0, 1)] {
        three_cx.push(Gate::two(GateKind::Cx, a, b)).unwrap();
    }
    let mut swap = Circuit::new(2, 0);
    swap.push(Gate::two(GateKind::Swap, 0, 1)).unwrap();
    assert!(phase_distance(&unitary(&three_cx), &unitary(&swap)) < 1e-12);

    let mut sx2 = Circuit::new(1, 0);
    sx2.push(Gate::one(GateKind::Sx, 0)).unwrap();
    sx2.push(Gate::one(GateKind::Sx, 0)).unwrap();
    assert!(phase_distance(&unitary(&sx2), &unitary(&x)) < 1e-12);

    let mut z = Circuit::new(1, 0);
    z.push(Gate::one(GateKind::Z, 0)).unwrap();
    assert!(phase_distance(&unitary(&hzh), &unitary(&z)).is_infinite());
    let mut s = Circuit::new(1, 0);
    s.push(Gate::one(GateKind::S, 0)).unwrap();
    assert!(phase_distance(&unitary(&z), &unitary(&s)) > 0.5);
}
