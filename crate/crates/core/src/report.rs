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


//! Evaluation and layout-ranking reports.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::baseline::{estimate_fidelity, BaselineError, ErrorMap};
use crate::circuit::Circuit;
use crate::dataset::{label_record, DatasetError, Reference};
use crate::layout::{rank_layouts, CouplingMap, LayoutError};
use crate::pipeline::{PipelineError, Predictor};
use crate::seed;
use crate::sim::NoiseModel;
use crate::stats::{mean, rmse_const};
use crate::transpile::{transpile, BasisSet, TranspileError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trials and shots must be positive")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub name: String,
    pub depth: usize,
    pub cnots: usize,
    pub mean_fidelity: f64,
    pub baseline_prediction: f64,
    pub baseline_rmse: f64,
    pub model_prediction: f64,
    pub model_rmse: f64,
    /// Per-trial measured d-R² values.
    #[serde(skip)]
    pub trials: Vec<f64>,
}

/// Measured fidelity of each circuit over `trials` noisy runs of `shots`
/// shots, next to the baseline and model predictions and their RMSE
/// against the trials. Circuits are lowered to the native basis first.
pub fn evaluate(
    circuits: &[(String, Circuit)],
    predictor: &Predictor,
    error_map: &ErrorMap,
    noise: &NoiseModel,
    trials: usize,
    shots: u64,
    seed_: u64,
) -> Result<Vec<EvalRow>, ReportError> {
    if trials == 0 || shots == 0 {
        return Err(ReportError::Empty);
    }
    let lowered = circuits
        .iter()
        .map(|(_, c)| transpile(c, &BasisSet::ibm()))
        .collect::<Result<Vec<_>, _>>()?;
    let preds = predictor.predict_many(&lowered)?;
    let mut rows = Vec::with_capacity(circuits.len());
    for (i, ((name, _), c)) in circuits.iter().zip(&lowered).enumerate() {
        let samples = (0..trials)
            .map(|k| {
                let s = seed::derive_path(seed_, &[i as u64, k as u64]);
                label_record(c, noise, shots, s, Reference::Simulated)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let base = estimate_fidelity(c, error_map)?;
        rows.push(EvalRow {
            name: name.clone(),
            depth: c.depth(),
            cnots: c.cnot_count(),
            mean_fidelity: mean(&samples),
            baseline_prediction: base,
            baseline_rmse: rmse_const(base, &samples),
            model_prediction: preds[i],
            model_rmse: rmse_const(preds[i], &samples),
            trials: samples,
        });
    }
    Ok(rows)
}

/// Mean baseline RMSE over mean model RMSE.
pub fn rmse_ratio(rows: &[EvalRow]) -> f64 {
    let b: Vec<f64> = rows.iter().map(|r| r.baseline_rmse).collect();
    let m: Vec<f64> = rows.iter().map(|r| r.model_rmse).collect();
    mean(&b) / mean(&m)
}

pub fn write_eval_csv<W: Write>(rows: &[EvalRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "name,depth,#CNOT,mean fidelity,baseline prediction,baseline RMSE,model prediction,model RMSE"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6},{:.6e},{:.6},{:.6e}",
            r.name,
            r.depth,
            r.cnots,
            r.mean_fidelity,
            r.baseline_prediction,
            r.baseline_rmse,
            r.model_prediction,
            r.model_rmse
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutRow {
    pub rank: usize,
    pub layout: Vec<usize>,
    pub score: f64,
}

/// Which fidelity estimate orders the layouts.
pub enum Scorer<'a> {
    Baseline(&'a ErrorMap),
    Model(&'a Predictor),
}

/// Layouts of `c` on `cm`, best first.
pub fn layout_report(c: &Circuit, cm: &CouplingMap, scorer: &Scorer) -> Result<Vec<LayoutRow>, ReportError> {
    let ranked = match scorer {
        Scorer::Baseline(em) => rank_layouts(c, cm, |pc| {
            transpile(pc, &BasisSet::ibm())
                .map_err(|e| e.to_string())
                .and_then(|t| estimate_fidelity(&t, em).map_err(|e| e.to_string()))
        })?,
        Scorer::Model(p) => {
            // score every layout in one batch, then rank by lookup
            let plain = rank_layouts(c, cm, |_| Ok::<f64, String>(0.0))?;
            let circuits: Vec<Circuit> = plain.iter().map(|r| r.circuit.clone()).collect();
            let scores = p.predict_many(&circuits)?;
            let mut it = scores.into_iter();
            rank_layouts(c, cm, |_| Ok::<f64, String>(it.next().expect("one score per layout")))?
        }
    };
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(i, r)| LayoutRow {
            rank: i + 1,
            layout: r.layout.as_slice().to_vec(),
            score: r.score,
        })
        .collect())
}

pub fn write_layout_csv<W: Write>(rows: &[LayoutRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "rank,layout,score")?;
    for r in rows {
        let l: Vec<String> = r.layout.iter().map(usize::to_string).collect();
        writeln!(w, "{},{},{:.6}", r.rank, l.join(" "), r.score)?;
    }
    Ok(())
}
