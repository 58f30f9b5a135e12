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


use super::model::Model;
use super::{NnError, Sample};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic − numeric| / max(|analytic| + |numeric|, 1e-10)`.
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub checked: usize,
    /// Largest analytic gradient magnitude on the frozen padding rows.
    pub padding_grad: f64,
    /// Largest gradient reaching the padding token's input projection.
    pub masked_input_grad: f64,
}

fn sample_loss(m: &Model<f64>, s: &Sample) -> Result<f64, NnError> {
    Ok((m.forward(&s.x)? - s.y).powi(2))
}

/// Compares backpropagated gradients of the squared error on `s` with
/// central differences of step `eps` for every trainable parameter.
pub fn grad_check(m: &Model<f64>, s: &Sample, eps: f64) -> Result<GradCheckReport, NnError> {
    m.check_input(&s.x)?;
    let proj = m.project();
    let tr = m.trace(&proj, &s.x);
    let mut grad = vec![0.0; m.params.len()];
    let mut dproj = vec![0.0; m.projection_len()];
    m.backward(&s.x, &tr, 2.0 * (tr.output() - s.y), &mut grad, &mut dproj);
    m.fold_projection_grad(&dproj, &mut grad);

    let cfg = m.config();
    let w = 4 * cfg.lstm_units;
    let masked_input_grad = (0..cfg.lanes)
        .flat_map(|lane| {
            let at = lane * (cfg.vocab_size + 1) * w;
            dproj[at..at + w].iter().copied()
        })
        .fold(0.0f64, |a, x| a.max(x.abs()));

    let frozen: Vec<_> = m.frozen().collect();
    let is_frozen = |i: usize| frozen.iter().any(|r| r.contains(&i));
    let padding_grad = frozen
        .iter()
        .flat_map(|r| grad[r.clone()].iter().copied())
        .fold(0.0f64, |a, x| a.max(x.abs()));

    let mut probe = m.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: 0,
        checked: 0,
        padding_grad,
        masked_input_grad,
    };
    for i in 0..m.params.len() {
        if is_frozen(i) {
            continue;
        }
        let orig = probe.params[i];
        probe.params[i] = orig + eps;
        let up = sample_loss(&probe, s)?;
        probe.params[i] = orig - eps;
        let down = sample_loss(&probe, s)?;
        probe.params[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let rel = (grad[i] - numeric).abs() / (grad[i].abs() + numeric.abs()).max(1e-10);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_param = i;
        }
        report.checked += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelConfig;
    use crate::tokenizer::TokenizedCircuit;

    fn tiny(shared: bool) -> ModelConfig {
        ModelConfig {
            lanes: 2,
            vocab_size: 5,
            embed_dim: 4,
            lstm_units: 8,
            dense_sizes: vec![4, 1],
            t: 6,
            shared_embedding: shared,
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for shared in [true, false] {
            let mut m = Model::<f64>::new(tiny(shared), 11).unwrap();
            // keep every hidden ReLU well inside its linear region so the
            // finite differences never straddle the kink
            let bias = m.tensors().into_iter().find(|t| t.name == "dense.0.bias").unwrap();
            m.params_mut()[bias.offset..bias.offset + bias.len()].fill(0.5);
            let s = Sample {
                x: TokenizedCircuit {
                    lanes: 2,
                    t: 6,
                    tokens: vec![0, 0, 1, 3, 2, 2, 5, 1, 4, 4, 1, 2],
                },
                y: 0.3,
            };
            let r = grad_check(&m, &s, 1e-3).unwrap();
            assert!(r.max_rel_error < 1e-4, "{r:?}");
            assert_eq!(r.checked, m.param_count());
            assert_eq!(r.padding_grad, 0.0);
            assert_eq!(r.masked_input_grad, 0.0);
        }
    }
}
