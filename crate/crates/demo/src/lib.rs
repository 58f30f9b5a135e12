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


//! WebAssembly bindings for the browser demo. Each export takes plain
//! strings and numbers and returns a JSON string.

use std::collections::BTreeMap;

use circfid::baseline::ErrorMap;
use circfid::devices::Device;
use circfid::metrics::expected_ideal_counts;
use circfid::report::{layout_report, Scorer};
use circfid::sim::{Counts, NoiseModel};
use circfid::stats::{mean, std_dev};
use circfid::{align, d_r2, d_r2_unbounded, parse_circuit, pst, run_ideal, run_noisy, seed};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const BERNSTEIN_VAZIRANI: &str = "OPENQASM 2.0;
include \"qelib1.inc\";
qreg q[3];
creg c[2];
x q[2];
h q[0];
h q[1];
h q[2];
cx q[1],q[2];
h q[0];
h q[1];
measure q[0] -> c[0];
measure q[1] -> c[1];
";

#[derive(Debug, Serialize)]
pub struct MetricReport {
    pub d_r2: f64,
    pub d_r2_unbounded: f64,
    pub pst: f64,
    /// Bitstrings counted as correct for PST: the ideal mode(s).
    pub correct: Vec<String>,
}

fn parse_counts(json: &str) -> Result<Counts, String> {
    let map: BTreeMap<String, u64> = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let width = map.keys().next().map_or(0, |k| k.len());
    Counts::new(width, map).map_err(|e| e.to_string())
}

pub fn compare_counts(ideal: &str, noisy: &str) -> Result<MetricReport, String> {
    let ideal = parse_counts(ideal)?;
    let noisy = parse_counts(noisy)?;
    let pair = align(&ideal, &noisy).map_err(|e| e.to_string())?;
    let top = ideal.iter().map(|(_, n)| n).max().unwrap_or(0);
    let correct: Vec<String> = ideal
        .iter()
        .filter(|&(_, n)| n == top)
        .map(|(k, _)| k.to_string())
        .collect();
    Ok(MetricReport {
        d_r2: d_r2(&pair).map_err(|e| e.to_string())?,
        d_r2_unbounded: d_r2_unbounded(&pair).map_err(|e| e.to_string())?,
        pst: pst(&correct, &noisy).map_err(|e| e.to_string())?,
        correct,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub multiplier: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub samples: Vec<f64>,
}

/// d-R² of `qasm` under uniform noise at each multiplier, over `seeds`
/// runs of `shots` shots.
pub fn noise_sweep(qasm: &str, multipliers: &[f64], seeds: u32, shots: u32) -> Result<Vec<SweepPoint>, String> {
    if seeds == 0 || shots == 0 {
        return Err("seeds and shots must be positive".into());
    }
    let c = parse_circuit(qasm).map_err(|e| e.to_string())?;
    let ideal = expected_ideal_counts(&run_ideal(&c).map_err(|e| e.to_string())?, shots as u64);
    multipliers
        .iter()
        .map(|&m| {
            let nm = NoiseModel::multiplier_sweep(c.n_qubits(), m);
            let samples = (0..seeds as u64)
                .map(|s| {
                    let noisy = run_noisy(&c, &nm, shots as u64, seed::derive(s, m.to_bits())).map_err(|e| e.to_string())?;
                    d_r2(&align(&ideal, &noisy).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
                })
                .collect::<Result<Vec<_>, String>>()?;
            Ok(SweepPoint {
                multiplier: m,
                mean: mean(&samples),
                std_dev: if samples.len() > 1 { std_dev(&samples) } else { 0.0 },
                samples,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct RankedRow {
    pub rank: usize,
    pub layout: Vec<usize>,
    pub score: f64,
}

/// Every layout of `qasm` on a built-in device, scored by the error-map
/// estimate derived from the device's noise model.
pub fn rank_on_device(qasm: &str, device: &str) -> Result<Vec<RankedRow>, String> {
    let device = Device::by_name(device).ok_or_else(|| format!("unknown device `{device}`"))?;
    let c = parse_circuit(qasm).map_err(|e| e.to_string())?;
    let em = ErrorMap::from_noise_model(&device.noise).map_err(|e| e.to_string())?;
    let rows = layout_report(&c, &device.coupling, &Scorer::Baseline(&em)).map_err(|e| e.to_string())?;
    Ok(rows
        .into_iter()
        .map(|r| RankedRow {
            rank: r.rank,
            layout: r.layout,
            score: r.score,
        })
        .collect())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.map(|v| serde_json::to_string(&v).expect("serializable"))
        .map_err(|e| JsValue::from_str(&e))
}

/// `ideal` and `noisy` are JSON objects mapping bitstrings to counts.
#[wasm_bindgen(js_name = compareCounts)]
pub fn compare_counts_js(ideal: &str, noisy: &str) -> Result<String, JsValue> {
    to_js(compare_counts(ideal, noisy))
}

#[wasm_bindgen(js_name = noiseSweep)]
pub fn noise_sweep_js(qasm: &str, multipliers: &[f64], seeds: u32, shots: u32) -> Result<String, JsValue> {
    to_js(noise_sweep(qasm, multipliers, seeds, shots))
}

#[wasm_bindgen(js_name = rankLayouts)]
pub fn rank_layouts_js(qasm: &str, device: &str) -> Result<String, JsValue> {
    to_js(rank_on_device(qasm, device))
}

#[wasm_bindgen(js_name = bernsteinVazirani)]
pub fn bernstein_vazirani() -> String {
    BERNSTEIN_VAZIRANI.to_string()
}
