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


//! Shipped synthetic devices: a coupling map paired with a noise model.

use serde::{Deserialize, Serialize};

use crate::layout::CouplingMap;
use crate::sim::{edge_key, NoiseModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub coupling: CouplingMap,
    pub noise: NoiseModel,
}

impl Device {
    pub fn name(&self) -> &str {
        self.coupling.name()
    }

    pub fn width(&self) -> usize {
        self.coupling.n_qubits()
    }

    /// 7-qubit heavy-hex device with calibration-like, uneven rates.
    pub fn nairobi() -> Device {
        let coupling = CouplingMap::nairobi();
        let p1 = vec![4.0e-4, 3.0e-4, 5.0e-4, 3.5e-4, 9.0e-4, 4.5e-4, 6.0e-4];
        let p_meas = vec![0.025, 0.02, 0.03, 0.022, 0.045, 0.028, 0.035];
        let p2 = [
            ((0, 1), 0.011),
            ((1, 2), 0.009),
            ((1, 3), 0.012),
            ((3, 5), 0.010),
            ((4, 5), 0.021),
            ((5, 6), 0.014),
        ]
        .into_iter()
        .map(|((a, b), p)| (edge_key(a, b), p))
        .collect();
        let noise = NoiseModel {
            p1,
            p2,
            p_meas,
            p_reset: vec![0.01; 7],
            p_idle: vec![2.0e-4, 1.5e-4, 2.5e-4, 1.5e-4, 4.0e-4, 2.0e-4, 3.0e-4],
            multiplier: 1.0,
        };
        Device { coupling, noise }
    }

    /// 27-qubit heavy-hex device; rates vary smoothly with qubit index.
    pub fn montreal() -> Device {
        let coupling = CouplingMap::montreal();
        let n = coupling.n_qubits();
        let wobble = |i: usize| 1.0 + 0.5 * ((i * 7919) % 13) as f64 / 12.0;
        let p2 = coupling
            .edges()
            .enumerate()
            .map(|(i, e)| (e, 0.008 * wobble(i + 3)))
            .collect();
        let noise = NoiseModel {
            p1: (0..n).map(|q| 3.0e-4 * wobble(q)).collect(),
            p2,
            p_meas: (0..n).map(|q| 0.02 * wobble(q + 5)).collect(),
            p_reset: vec![0.01; n],
            p_idle: (0..n).map(|q| 1.5e-4 * wobble(q + 1)).collect(),
            multiplier: 1.0,
        };
        Device { coupling, noise }
    }

    pub fn by_name(name: &str) -> Option<Device> {
        match name {
            "nairobi" | "ibm_nairobi" => Some(Device::nairobi()),
            "montreal" | "ibmq_montreal" => Some(Device::montreal()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_devices_are_consistent() {
        for d in [Device::nairobi(), Device::montreal()] {
            d.noise.validate().unwrap();
            assert_eq!(d.noise.n_qubits(), d.width());
            let priced: Vec<_> = d.noise.p2.keys().copied().collect();
            let edges: Vec<_> = d.coupling.edges().collect();
            assert_eq!(priced, edges);
        }
    }

    #[test]
    fn device_file_round_trip() {
        let d = Device::nairobi();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<Device>(&s).unwrap(), d);
    }
}
