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

//! Fidelity prediction for quantum circuits.
//!
//! The crate generates randomized-benchmarking (RB) circuit corpora, runs
//! them through a noisy state-vector simulator, scores each run with the
//! d-R² metric and trains an LSTM regressor that predicts that score from
//! the circuit's gate tokens. A gate-error-product estimator and a layout
//! enumerator round out the toolkit so that predictors can be compared
//! when ranking circuit placements on a device.

pub mod baseline;
pub mod circuit;
pub mod dataset;
pub mod devices;
pub mod layout;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod rb;
pub mod report;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod tokenizer;
pub mod transpile;

pub use circuit::{emit_circuit, layerize, parse_circuit, Circuit, Gate, GateKind, LayeredCircuit};
pub use metrics::{align, d_r2, d_r2_unbounded, pst, AlignedPair};
pub use sim::{run_ideal, run_noisy, sample_ideal, Counts, Distribution, NoiseModel};
