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

//! Noise-free and noisy execution of circuits.
//!
//! Noisy runs are Monte-Carlo trajectories. Every shot owns a generator
//! seeded from `(seed, shot index)`, so counts do not depend on how shots
//! are scheduled across threads. Each shot first draws its error events in
//! program order (1q/2q Pauli errors, idle depolarizing, reset and readout
//! flips, skipping any draw whose probability is exactly zero), then one
//! uniform variate that selects the measurement outcome.
//!
//! Circuits whose measurements are terminal and whose resets act only on
//! fresh qubits take a fast path: shots with identical error patterns share
//! one state-vector evolution. Other circuits are simulated shot by shot
//! with projective collapse at every measurement and reset.

mod frame;
mod noise;
mod state;

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{layerize, Circuit, GateKind};
use crate::seed;

pub use noise::{edge_key, NoiseError, NoiseModel};
pub(crate) use noise::parse_edge_key;
pub use state::{matrix_1q, matrix_2q, Mat2, StateVector};

/// Largest number of active qubits the dense simulator accepts.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("circuit has no measurements")]
    NoMeasurements,
    #[error("{0} active qubits exceed the simulator bound of {MAX_QUBITS}")]
    TooWide(usize),
    #[error("exact distributions need terminal measurements and initial-only resets")]
    NotTerminal,
    #[error("shots must be at least 1")]
    NoShots,
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Renders `index` as a bitstring of width `n_bits`, most significant first.
pub fn bitstring(index: usize, n_bits: usize) -> String {
    (0..n_bits)
        .rev()
        .map(|j| if (index >> j) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Inverse of [`bitstring`].
pub fn bitstring_index(s: &str) -> Option<usize> {
    if s.is_empty() || s.len() > 63 {
        return None;
    }
    s.chars().try_fold(0usize, |acc, ch| match ch {
        '0' => Some(acc << 1),
        '1' => Some((acc << 1) | 1),
        _ => None,
    })
}

/// Exact Born probabilities over the measured classical bits, indexed by
/// the bitstring value (lowest measured clbit is the least significant bit).
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    n_bits: usize,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(n_bits: usize, probs: Vec<f64>) -> Distribution {
        assert_eq!(probs.len(), 1 << n_bits, "dense distribution length");
        Distribution { n_bits, probs }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, bits: &str) -> f64 {
        match bitstring_index(bits) {
            Some(i) if bits.len() == self.n_bits => self.probs[i],
            _ => 0.0,
        }
    }

    /// Non-zero entries keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (bitstring(i, self.n_bits), p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountsError {
    #[error("bitstring keys have mixed widths")]
    MixedWidth,
    #[error("`{0}` is not a bitstring")]
    BadKey(String),
    #[error("counts sum to {sum}, expected {shots} shots")]
    ShotMismatch { sum: u64, shots: u64 },
}

/// Multiset of measured bitstrings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CountsFile", into = "CountsFile")]
pub struct Counts {
    n_bits: usize,
    shots: u64,
    counts: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct CountsFile {
    shots: u64,
    counts: BTreeMap<String, u64>,
}

impl TryFrom<CountsFile> for Counts {
    type Error = CountsError;

    fn try_from(f: CountsFile) -> Result<Self, Self::Error> {
        let n_bits = f.counts.keys().next().map(|k| k.len()).unwrap_or(0);
        let c = Counts::new(n_bits, f.counts)?;
        if c.shots != f.shots {
            return Err(CountsError::ShotMismatch {
                sum: c.shots,
                shots: f.shots,
            });
        }
        Ok(c)
    }
}

impl From<Counts> for CountsFile {
    fn from(c: Counts) -> Self {
        CountsFile {
            shots: c.shots,
            counts: c.counts,
        }
    }
}

impl Counts {
    /// Builds counts from a bitstring map; zero entries are dropped.
    pub fn new(n_bits: usize, counts: BTreeMap<String, u64>) -> Result<Counts, CountsError> {
        for k in counts.keys() {
            if bitstring_index(k).is_none() {
                return Err(CountsError::BadKey(k.clone()));
            }
            if k.len() != n_bits {
                return Err(CountsError::MixedWidth);
            }
        }
        let counts: BTreeMap<String, u64> = counts.into_iter().filter(|(_, v)| *v > 0).collect();
        let shots = counts.values().sum();
        Ok(Counts {
            n_bits,
            shots,
            counts,
        })
    }

    /// Counts from a dense histogram indexed by bitstring value.
    pub fn from_dense(n_bits: usize, hist: &[u64]) -> Counts {
        let counts = hist
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, &v)| (bitstring(i, n_bits), v))
            .collect::<BTreeMap<_, _>>();
        Counts {
            n_bits,
            shots: hist.iter().sum(),
            counts,
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn get(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Dense histogram over all `2^n_bits` outcomes.
    pub fn to_dense(&self) -> Vec<u64> {
        let mut out = vec![0u64; 1 << self.n_bits];
        for (k, &v) in &self.counts {
            out[bitstring_index(k).expect("validated key")] += v;
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    /// Index into the circuit's gate list plus compacted operands.
    Unitary { gate: usize, q: [usize; 2], two: bool },
    Idle { q: usize },
    Measure { q: usize, bit: usize },
    Reset { q: usize },
}

#[derive(Debug, Clone, Copy)]
struct Step {
    op: Op,
    /// Probability of this step's error event.
    p: f64,
}

/// A circuit lowered to a flat step list over compacted qubit indices.
struct Program<'a> {
    circuit: &'a Circuit,
    n: usize,
    n_bits: usize,
    /// `order[j]` is the compact qubit read into measured bit `j`.
    order: Vec<usize>,
    steps: Vec<Step>,
    terminal: bool,
}

impl<'a> Program<'a> {
    fn compile(c: &'a Circuit, noise: Option<&NoiseModel>) -> Result<Program<'a>, SimError> {
        let meas = c.measurements();
        if meas.is_empty() {
            return Err(SimError::NoMeasurements);
        }
        let active = c.active_qubits();
        if active.len() > MAX_QUBITS {
            return Err(SimError::TooWide(active.len()));
        }
        let mut compact = vec![usize::MAX; c.n_qubits()];
        for (i, &q) in active.iter().enumerate() {
            compact[q] = i;
        }
        let mut bit_of_gate = BTreeMap::new();
        for (bit, (_, clbit)) in meas.iter().enumerate() {
            let g = c
                .gates()
                .iter()
                .position(|g| g.kind == GateKind::Measure && g.clbit == Some(*clbit))
                .expect("measure exists");
            bit_of_gate.insert(g, bit);
        }
        let order: Vec<usize> = meas.iter().map(|&(q, _)| compact[q]).collect();

        let layered = layerize(c);
        let n = active.len();
        let mut first = vec![usize::MAX; n];
        let mut last = vec![0usize; n];
        for (li, layer) in layered.layers.iter().enumerate() {
            for (q, slot) in layer.slots.iter().enumerate() {
                if slot.is_some() {
                    let cq = compact[q];
                    first[cq] = first[cq].min(li);
                    last[cq] = li;
                }
            }
        }

        let rate = |f: &dyn Fn(&NoiseModel) -> Result<f64, NoiseError>| -> Result<f64, SimError> {
            match noise {
                Some(nm) => Ok(f(nm)?),
                None => Ok(0.0),
            }
        };

        let mut steps = Vec::new();
        let mut touched = vec![false; n];
        let mut measured = vec![false; n];
        let mut terminal = true;
        for (li, layer) in layered.layers.iter().enumerate() {
            for &gi in &layer.gates {
                let g = &c.gates()[gi];
                let phys = &g.qubits;
                let cq: Vec<usize> = phys.iter().map(|&q| compact[q]).collect();
                for &q in &cq {
                    if measured[q] {
                        terminal = false;
                    }
                }
                let step = match g.kind {
                    GateKind::Measure => {
                        measured[cq[0]] = true;
                        Step {
                            op: Op::Measure {
                                q: cq[0],
                                bit: bit_of_gate[&gi],
                            },
                            p: rate(&|nm| nm.measure(phys[0]))?,
                        }
                    }
                    GateKind::Reset => {
                        if touched[cq[0]] {
                            terminal = false;
                        }
                        Step {
                            op: Op::Reset { q: cq[0] },
                            p: rate(&|nm| nm.reset(phys[0]))?,
                        }
                    }
                    GateKind::Barrier => unreachable!("barriers are not scheduled"),
                    k if k.is_two_qubit() => Step {
                        op: Op::Unitary {
                            gate: gi,
                            q: [cq[0], cq[1]],
                            two: true,
                        },
                        p: rate(&|nm| nm.gate_2q(phys[0], phys[1]))?,
                    },
                    _ => Step {
                        op: Op::Unitary {
                            gate: gi,
                            q: [cq[0], 0],
                            two: false,
                        },
                        p: rate(&|nm| nm.gate_1q(phys[0]))?,
                    },
                };
                for &q in &cq {
                    touched[q] = true;
                }
                steps.push(step);
            }
            for (q, &phys) in active.iter().enumerate() {
                if layer.slots[phys].is_none() && li > first[q] && li < last[q] {
                    steps.push(Step {
                        op: Op::Idle { q },
                        p: rate(&|nm| nm.idle(phys))?,
                    });
                }
            }
        }

        Ok(Program {
            circuit: c,
            n,
            n_bits: meas.len(),
            order,
            steps,
            terminal,
        })
    }

    fn apply_unitary(&self, state: &mut StateVector, gate: usize, q: [usize; 2], two: bool) {
        let g = &self.circuit.gates()[gate];
        let qs = if two { &q[..] } else { &q[..1] };
        state.apply_gate(g.kind, qs, &g.params);
    }

    fn apply_error(&self, state: &mut StateVector, op: Op, code: u8) {
        match op {
            Op::Unitary { q, two: true, .. } => {
                state.apply_pauli(q[0], code & 3);
                state.apply_pauli(q[1], code >> 2);
            }
            Op::Unitary { q, .. } => state.apply_pauli(q[0], code),
            Op::Idle { q } => state.apply_pauli(q, code),
            Op::Reset { q } => state.apply_x(q),
            Op::Measure { .. } => {}
        }
    }

    /// Error code drawn for a step whose event fired.
    fn draw_code(op: Op, rng: &mut seed::Rng) -> u8 {
        match op {
            Op::Unitary { two: true, .. } => rng.gen_range(1..16u8),
            Op::Unitary { .. } | Op::Idle { .. } => rng.gen_range(1..4u8),
            Op::Reset { .. } | Op::Measure { .. } => 1,
        }
    }

    /// Noise-free final state (terminal programs only).
    fn ideal_state(&self) -> StateVector {
        let mut state = StateVector::zero(self.n);
        for step in &self.steps {
            if let Op::Unitary { gate, q, two } = step.op {
                self.apply_unitary(&mut state, gate, q, two);
            }
        }
        state
    }
}

/// One shot's random draws on the fast path.
struct ShotDraw {
    pattern: Vec<(u32, u8)>,
    flips: u64,
    u: f64,
}

fn draw_shot(prog: &Program, rng: &mut seed::Rng) -> ShotDraw {
    let mut pattern = Vec::new();
    let mut flips = 0u64;
    for (i, step) in prog.steps.iter().enumerate() {
        if step.p > 0.0 && rng.gen::<f64>() < step.p {
            match step.op {
                Op::Measure { bit, .. } => flips |= 1 << bit,
                op => pattern.push((i as u32, Program::draw_code(op, rng))),
            }
        }
    }
    ShotDraw {
        pattern,
        flips,
        u: rng.gen::<f64>(),
    }
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    let total = *cumulative.last().expect("non-empty");
    let target = u * total;
    let k = cumulative.partition_point(|&c| c <= target);
    if k < cumulative.len() {
        k
    } else {
        // Rounding pushed the target past the last bin; fall back to the
        // last outcome with non-zero mass.
        let mut j = cumulative.len() - 1;
        while j > 0 && cumulative[j] == cumulative[j - 1] {
            j -= 1;
        }
        j
    }
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn map_shots<T: Send>(shots: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..shots).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..shots).map(f).collect()
    }
}

fn run_fast(prog: &Program, shots: u64, seed: u64) -> Vec<usize> {
    let draws = map_shots(shots, |k| draw_shot(prog, &mut seed::child_rng(seed, k)));
    match frame::FrameTable::build(prog) {
        Some(table) => replay_frames(prog, &table, &draws),
        None => replay_states(prog, &draws),
    }
}

fn replay_frames(prog: &Program, table: &frame::FrameTable, draws: &[ShotDraw]) -> Vec<usize> {
    let cum = cumulative(&prog.ideal_state().marginal(&prog.order));
    draws
        .iter()
        .map(|d| {
            let mut flips = d.flips;
            for &(i, code) in &d.pattern {
                flips ^= table.flips(prog, i as usize, code);
            }
            pick(&cum, d.u) ^ flips as usize
        })
        .collect()
}

fn replay_states(prog: &Program, draws: &[ShotDraw]) -> Vec<usize> {

    // Group shots by error pattern; ordering by first event lets consecutive
    // patterns resume from a shared noise-free prefix.
    let mut groups: BTreeMap<(u32, &[(u32, u8)]), Vec<usize>> = BTreeMap::new();
    for (k, d) in draws.iter().enumerate() {
        let first = d.pattern.first().map(|e| e.0).unwrap_or(u32::MAX);
        groups.entry((first, &d.pattern)).or_default().push(k);
    }

    let mut outcomes = vec![0usize; draws.len()];
    let mut prefix = StateVector::zero(prog.n);
    let mut prefix_at = 0usize;
    for ((first, pattern), members) in groups {
        let start = (first as usize).min(prog.steps.len());
        while prefix_at < start {
            if let Op::Unitary { gate, q, two } = prog.steps[prefix_at].op {
                prog.apply_unitary(&mut prefix, gate, q, two);
            }
            prefix_at += 1;
        }
        let mut state = prefix.clone();
        let mut events = pattern.iter().peekable();
        for (i, step) in prog.steps.iter().enumerate().skip(start) {
            if let Op::Unitary { gate, q, two } = step.op {
                prog.apply_unitary(&mut state, gate, q, two);
            }
            while let Some(&&(at, code)) = events.peek() {
                if at as usize != i {
                    break;
                }
                prog.apply_error(&mut state, step.op, code);
                events.next();
            }
        }
        let cum = cumulative(&state.marginal(&prog.order));
        for k in members {
            outcomes[k] = pick(&cum, draws[k].u) ^ draws[k].flips as usize;
        }
    }
    outcomes
}

fn run_trajectory(prog: &Program, rng: &mut seed::Rng, state: &mut StateVector) -> usize {
    state.reset_to_zero();
    let mut bits = 0usize;
    for step in &prog.steps {
        let fired = step.p > 0.0 && rng.gen::<f64>() < step.p;
        match step.op {
            Op::Unitary { gate, q, two } => {
                prog.apply_unitary(state, gate, q, two);
                if fired {
                    let code = Program::draw_code(step.op, rng);
                    prog.apply_error(state, step.op, code);
                }
            }
            Op::Idle { q } => {
                if fired {
                    state.apply_pauli(q, rng.gen_range(1..4u8));
                }
            }
            Op::Measure { q, bit } => {
                let p1 = state.prob_one(q);
                let one = rng.gen::<f64>() < p1;
                state.collapse(q, one, if one { p1 } else { 1.0 - p1 });
                if one != fired {
                    bits |= 1 << bit;
                }
            }
            Op::Reset { q } => {
                let p1 = state.prob_one(q);
                let one = rng.gen::<f64>() < p1;
                state.collapse(q, one, if one { p1 } else { 1.0 - p1 });
                if one {
                    state.apply_x(q);
                }
                if fired {
                    state.apply_x(q);
                }
            }
        }
    }
    bits
}

fn run_general(prog: &Program, shots: u64, seed: u64) -> Vec<usize> {
    map_shots(shots, |k| {
        let mut state = StateVector::zero(prog.n);
        run_trajectory(prog, &mut seed::child_rng(seed, k), &mut state)
    })
}

fn execute(
    c: &Circuit,
    noise: Option<&NoiseModel>,
    shots: u64,
    seed: u64,
) -> Result<Counts, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    if let Some(nm) = noise {
        nm.validate()?;
    }
    let prog = Program::compile(c, noise)?;
    let outcomes = if prog.terminal {
        run_fast(&prog, shots, seed)
    } else {
        run_general(&prog, shots, seed)
    };
    let mut hist = vec![0u64; 1 << prog.n_bits];
    for o in outcomes {
        hist[o] += 1;
    }
    Ok(Counts::from_dense(prog.n_bits, &hist))
}

/// Exact output distribution of `c` over its measured classical bits.
pub fn run_ideal(c: &Circuit) -> Result<Distribution, SimError> {
    let prog = Program::compile(c, None)?;
    if !prog.terminal {
        return Err(SimError::NotTerminal);
    }
    let probs = prog.ideal_state().marginal(&prog.order);
    Ok(Distribution::new(prog.n_bits, probs))
}

/// Monte-Carlo counts of `c` under `nm`; a pure function of its arguments.
pub fn run_noisy(
    c: &Circuit,
    nm: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<Counts, SimError> {
    execute(c, Some(nm), shots, seed)
}

/// Noise-free shot sampling; identical to [`run_noisy`] with every
/// effective rate at zero.
pub fn sample_ideal(c: &Circuit, shots: u64, seed: u64) -> Result<Counts, SimError> {
    execute(c, None, shots, seed)
}
