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


//! Product-of-gate-errors fidelity estimate from a static error map.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, GateKind};
use crate::layout::CouplingMap;
use crate::sim::{edge_key, parse_edge_key, NoiseError, NoiseModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("no error rate for `{kind}` on qubit {qubit}")]
    UnpricedGate { kind: &'static str, qubit: usize },
    #[error("no error rate for edge {0}-{1}")]
    UnpricedEdge(usize, usize),
    #[error("no readout error rate for qubit {0}")]
    UnpricedReadout(usize),
    #[error("error rate {0} is outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("malformed edge key `{0}`")]
    BadEdgeKey(String),
    #[error("malformed qubit key `{0}`")]
    BadQubitKey(String),
    #[error("edge {0}-{1} is not in the coupling map")]
    EdgeNotCoupled(usize, usize),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Static per-gate error rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ErrorMapFile", into = "ErrorMapFile")]
pub struct ErrorMap {
    /// qubit → gate name → error rate
    pub eps_1q: BTreeMap<usize, BTreeMap<String, f64>>,
    pub eps_2q: BTreeMap<(usize, usize), f64>,
    pub eps_ro: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ErrorMapFile {
    eps_1q: BTreeMap<String, BTreeMap<String, f64>>,
    eps_2q: BTreeMap<String, f64>,
    eps_ro: Vec<f64>,
}

impl TryFrom<ErrorMapFile> for ErrorMap {
    type Error = BaselineError;

    fn try_from(f: ErrorMapFile) -> Result<Self, Self::Error> {
        let mut eps_1q = BTreeMap::new();
        for (k, v) in f.eps_1q {
            let q = k.trim().parse().map_err(|_| BaselineError::BadQubitKey(k.clone()))?;
            eps_1q.insert(q, v);
        }
        let mut eps_2q = BTreeMap::new();
        for (k, v) in f.eps_2q {
            let e = parse_edge_key(&k).ok_or(BaselineError::BadEdgeKey(k))?;
            eps_2q.insert(e, v);
        }
        let em = ErrorMap {
            eps_1q,
            eps_2q,
            eps_ro: f.eps_ro,
        };
        em.validate()?;
        Ok(em)
    }
}

impl From<ErrorMap> for ErrorMapFile {
    fn from(em: ErrorMap) -> Self {
        ErrorMapFile {
            eps_1q: em.eps_1q.into_iter().map(|(q, m)| (q.to_string(), m)).collect(),
            eps_2q: em
                .eps_2q
                .into_iter()
                .map(|((a, b), v)| (format!("{a}-{b}"), v))
                .collect(),
            eps_ro: em.eps_ro,
        }
    }
}

impl ErrorMap {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let rates = self
            .eps_1q
            .values()
            .flat_map(|m| m.values())
            .chain(self.eps_2q.values())
            .chain(&self.eps_ro);
        for &r in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(BaselineError::RateOutOfRange(r));
            }
        }
        Ok(())
    }

    /// Checks that every priced edge exists on `cm`.
    pub fn check_against(&self, cm: &CouplingMap) -> Result<(), BaselineError> {
        for &(a, b) in self.eps_2q.keys() {
            if !cm.has_edge(a, b) {
                return Err(BaselineError::EdgeNotCoupled(a, b));
            }
        }
        Ok(())
    }

    /// The rates a simulator noise model applies, read as a static map:
    /// every one-qubit unitary on qubit `q` costs its effective gate rate.
    pub fn from_noise_model(nm: &NoiseModel) -> Result<ErrorMap, BaselineError> {
        nm.validate()?;
        let one_qubit: Vec<GateKind> = GateKind::ALL
            .into_iter()
            .filter(|k| k.is_unitary() && k.arity() == 1 && *k != GateKind::Id)
            .collect();
        let mut eps_1q = BTreeMap::new();
        let mut eps_ro = Vec::with_capacity(nm.n_qubits());
        for q in 0..nm.n_qubits() {
            let p = nm.gate_1q(q)?;
            eps_1q.insert(q, one_qubit.iter().map(|k| (k.name().to_string(), p)).collect());
            eps_ro.push(nm.measure(q)?);
        }
        let mut eps_2q = BTreeMap::new();
        for &(a, b) in nm.p2.keys() {
            eps_2q.insert((a, b), nm.gate_2q(a, b)?);
        }
        Ok(ErrorMap {
            eps_1q,
            eps_2q,
            eps_ro,
        })
    }

    fn price_1q(&self, kind: GateKind, q: usize) -> Result<f64, BaselineError> {
        self.eps_1q
            .get(&q)
            .and_then(|m| m.get(kind.name()))
            .copied()
            .ok_or(BaselineError::UnpricedGate {
                kind: kind.name(),
                qubit: q,
            })
    }

    fn price_2q(&self, a: usize, b: usize) -> Result<f64, BaselineError> {
        let (a, b) = edge_key(a, b);
        self.eps_2q
            .get(&(a, b))
            .copied()
            .ok_or(BaselineError::UnpricedEdge(a, b))
    }
}

/// Π(1 − ε) over unitary gates times Π(1 − ε_ro) over measurements.
/// `id` and barriers are free, resets cost nothing, and a swap costs three
/// CNOTs on its edge.
pub fn estimate_fidelity(c: &Circuit, em: &ErrorMap) -> Result<f64, BaselineError> {
    let mut f = 1.0;
    for g in c.gates() {
        match g.kind {
            GateKind::Id | GateKind::Barrier | GateKind::Reset => {}
            GateKind::Measure => {
                let q = g.qubits[0];
                let e = em.eps_ro.get(q).copied().ok_or(BaselineError::UnpricedReadout(q))?;
                f *= 1.0 - e;
            }
            GateKind::Swap => f *= (1.0 - em.price_2q(g.qubits[0], g.qubits[1])?).powi(3),
            k if k.is_two_qubit() => f *= 1.0 - em.price_2q(g.qubits[0], g.qubits[1])?,
            k => f *= 1.0 - em.price_1q(k, g.qubits[0])?,
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use proptest::prelude::*;

    fn map() -> ErrorMap {
        serde_json::from_str(
            r#"{"eps_1q": {"0": {"x": 0.001, "h": 0.002}, "1": {"x": 0.001}},
                "eps_2q": {"0-1": 0.01},
                "eps_ro": [0.02, 0.02]}"#,
        )
        .unwrap()
    }

    #[test]
    fn fixtures() {
        let em = map();
        let c = parse_circuit("qreg q[2]; creg c[2]; measure q[0] -> c[0];").unwrap();
        let zero = ErrorMap {
            eps_ro: vec![0.0, 0.0],
            ..em.clone()
        };
        assert_eq!(estimate_fidelity(&c, &zero).unwrap(), 1.0);
        let c = parse_circuit(
            "qreg q[2]; creg c[2]; cx q[1],q[0]; measure q[0] -> c[0]; measure q[1] -> c[1];",
        )
        .unwrap();
        assert!((estimate_fidelity(&c, &em).unwrap() - 0.950796).abs() < 1e-12);
        let c = parse_circuit("qreg q[2]; id q[0]; barrier q[0],q[1]; reset q[1];").unwrap();
        assert_eq!(estimate_fidelity(&c, &em).unwrap(), 1.0);
    }

    #[test]
    fn unpriced_gates_are_errors() {
        let em = map();
        let c = parse_circuit("qreg q[2]; h q[1];").unwrap();
        assert!(matches!(
            estimate_fidelity(&c, &em),
            Err(BaselineError::UnpricedGate { kind: "h", qubit: 1 })
        ));
        let c = parse_circuit("qreg q[3]; cx q[1],q[2];").unwrap();
        assert_eq!(estimate_fidelity(&c, &em), Err(BaselineError::UnpricedEdge(1, 2)));
    }

    #[test]
    fn file_round_trip() {
        let em = map();
        let s = serde_json::to_string(&em).unwrap();
        assert_eq!(serde_json::from_str::<ErrorMap>(&s).unwrap(), em);
        assert!(serde_json::from_str::<ErrorMap>(r#"{"eps_1q": {}, "eps_2q": {"0-1": 2.0}, "eps_ro": []}"#).is_err());
        assert!(serde_json::from_str::<ErrorMap>(r#"{"eps_1q": {"a": {}}, "eps_2q": {}, "eps_ro": []}"#).is_err());
        assert!(em.check_against(&CouplingMap::nairobi()).is_ok());
        let far = ErrorMap {
            eps_2q: [((0, 6), 0.1)].into_iter().collect(),
            ..em
        };
        assert_eq!(far.check_against(&CouplingMap::nairobi()), Err(BaselineError::EdgeNotCoupled(0, 6)));
    }

    #[test]
    fn from_noise_model_prices_every_basis_gate() {
        let nm = NoiseModel::multiplier_sweep(3, 0.2);
        let em = ErrorMap::from_noise_model(&nm).unwrap();
        let c = parse_circuit("qreg q[3]; creg c[1]; rz(0.1) q[0]; sx q[1]; x q[2]; cx q[0],q[2]; measure q[2] -> c[0];").unwrap();
        let f = estimate_fidelity(&c, &em).unwrap();
        let want = 0.99f64.powi(3) * 0.99 * 0.98;
        assert!((f - want).abs() < 1e-12, "{f}");
    }

    proptest! {
        #[test]
        fn order_invariant_and_monotone(perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle()) {
            let em = map();
            let gates = ["x q[0];", "h q[0];", "cx q[0],q[1];", "x q[1];", "cx q[1],q[0];", "measure q[1] -> c[0];"];
            let fwd = format!("qreg q[2]; creg c[1]; {}", gates.concat());
            let shuffled: String = perm.iter().map(|&i| gates[i]).collect();
            let a = estimate_fidelity(&parse_circuit(&fwd).unwrap(), &em).unwrap();
            let b = estimate_fidelity(&parse_circuit(&format!("qreg q[2]; creg c[1]; {shuffled}")).unwrap(), &em).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
            prop_assert!(a > 0.0 && a <= 1.0);
            let more = estimate_fidelity(&parse_circuit(&format!("{fwd} h q[0];")).unwrap(), &em).unwrap();
            prop_assert!(more < a);
        }
    }
}
