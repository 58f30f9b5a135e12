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


use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::Model;
use super::{NnError, Real, Sample};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// Epochs without a validation improvement before stopping; `None`
    /// disables early stopping.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 20,
            patience: Some(5),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let ok = self.batch_size > 0
            && self.epochs > 0
            && self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.patience != Some(0);
        if ok {
            Ok(())
        } else {
            Err(NnError::TrainConfig(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
}

struct Adam<F: Real> {
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
}

impl<F: Real> Adam<F> {
    fn new(n: usize) -> Adam<F> {
        Adam {
            m: vec![F::zero(); n],
            v: vec![F::zero(); n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [F], grad: &[F], tc: &TrainConfig) {
        self.t += 1;
        let c = |x: f64| F::from(x).expect("representable");
        let (b1, b2) = (c(tc.beta1), c(tc.beta2));
        let lr_t = c(tc.lr * (1.0 - tc.beta2.powi(self.t)).sqrt() / (1.0 - tc.beta1.powi(self.t)));
        let eps = c(tc.eps);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (F::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (F::one() - b2) * g * g;
            params[i] = params[i] - lr_t * self.m[i] / (self.v[i].sqrt() + eps);
        }
    }
}

fn check_set<F: Real>(m: &Model<F>, set: &[Sample], name: &'static str) -> Result<(), NnError> {
    if set.is_empty() {
        return Err(NnError::EmptySet(name));
    }
    for s in set {
        if !(0.0..=1.0).contains(&s.y) {
            return Err(NnError::Label(s.y));
        }
        m.check_input(&s.x)?;
    }
    Ok(())
}

/// Mean squared error of `m` over `set`.
pub fn loss<F: Real>(m: &Model<F>, set: &[Sample]) -> Result<f64, NnError> {
    let xs: Vec<_> = set.iter().map(|s| s.x.clone()).collect();
    let pred = m.predict_many(&xs)?;
    let se: f64 = pred
        .iter()
        .zip(set)
        .map(|(p, s)| (p.to_f64().expect("finite") - s.y).powi(2))
        .sum();
    Ok(se / set.len() as f64)
}

/// One pass over `set` in a seeded shuffled order; returns the mean
/// training loss seen during the pass.
fn run_epoch<F: Real>(
    m: &mut Model<F>,
    adam: &mut Adam<F>,
    set: &[Sample],
    tc: &TrainConfig,
    epoch: usize,
) -> Result<f64, NnError> {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut seed::child_rng(tc.seed, epoch as u64));
    let mut grad = vec![F::zero(); m.params.len()];
    let mut dproj = vec![F::zero(); m.projection_len()];
    let mut total = 0.0;
    for batch in order.chunks(tc.batch_size) {
        grad.iter_mut().for_each(|g| *g = F::zero());
        dproj.iter_mut().for_each(|g| *g = F::zero());
        let proj = m.project();
        let scale = F::from(2.0 / batch.len() as f64).expect("representable");
        for &i in batch {
            let s = &set[i];
            let tr = m.trace(&proj, &s.x);
            let y = tr.output();
            let diff = y - F::from(s.y).expect("representable");
            total += diff.to_f64().expect("finite").powi(2);
            m.backward(&s.x, &tr, diff * scale, &mut grad, &mut dproj);
        }
        if !total.is_finite() {
            return Err(NnError::Diverged { epoch, loss: total });
        }
        m.fold_projection_grad(&dproj, &mut grad);
        for r in m.frozen().collect::<Vec<_>>() {
            grad[r].iter_mut().for_each(|g| *g = F::zero());
        }
        adam.step(&mut m.params, &grad, tc);
    }
    Ok(total / set.len() as f64)
}

/// Mini-batch Adam on MSE. Returns the parameters of the epoch with the
/// lowest validation loss.
pub fn train<F: Real>(
    model: &Model<F>,
    train_set: &[Sample],
    val_set: &[Sample],
    tc: &TrainConfig,
) -> Result<(Model<F>, TrainHistory), NnError> {
    tc.validate()?;
    check_set(model, train_set, "training")?;
    check_set(model, val_set, "validation")?;
    let mut m = model.clone();
    let mut adam = Adam::new(m.params.len());
    let mut hist = TrainHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
    };
    let mut best = m.clone();
    let mut best_val = f64::INFINITY;
    let mut stale = 0;
    for epoch in 0..tc.epochs {
        let tl = run_epoch(&mut m, &mut adam, train_set, tc, epoch)?;
        let vl = loss(&m, val_set)?;
        if !vl.is_finite() {
            return Err(NnError::Diverged { epoch, loss: vl });
        }
        hist.train_loss.push(tl);
        hist.val_loss.push(vl);
        if vl < best_val {
            best_val = vl;
            best = m.clone();
            hist.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if tc.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }
    Ok((best, hist))
}

/// Continues training on `samples` alone with a fresh optimizer state for
/// `tc.epochs` epochs. An empty set returns the model unchanged.
pub fn fine_tune<F: Real>(
    model: &Model<F>,
    samples: &[Sample],
    tc: &TrainConfig,
) -> Result<Model<F>, NnError> {
    tc.validate()?;
    if samples.is_empty() {
        return Ok(model.clone());
    }
    check_set(model, samples, "fine-tuning")?;
    let mut m = model.clone();
    let mut adam = Adam::new(m.params.len());
    for epoch in 0..tc.epochs {
        run_epoch(&mut m, &mut adam, samples, tc, epoch)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelConfig;
    use crate::tokenizer::TokenizedCircuit;

    fn cfg() -> ModelConfig {
        ModelConfig {
            lanes: 2,
            vocab_size: 6,
            embed_dim: 8,
            lstm_units: 16,
            dense_sizes: vec![8, 1],
            t: 12,
            shared_embedding: true,
        }
    }

    /// Label depends on how many of token 3 the sequence contains.
    fn synthetic(n: usize, seed_: u64) -> Vec<Sample> {
        use rand::Rng as _;
        let mut rng = seed::rng(seed_);
        (0..n)
            .map(|_| {
                let len = rng.gen_range(1..=12);
                let mut tokens = vec![0u32; (12 - len) * 2];
                let mut threes = 0;
                for _ in 0..len * 2 {
                    let t = rng.gen_range(1..=6u32);
                    threes += (t == 3) as usize;
                    tokens.push(t);
                }
                Sample {
                    x: TokenizedCircuit {
                        lanes: 2,
                        t: 12,
                        tokens,
                    },
                    y: (-(threes as f64) / 3.0).exp(),
                }
            })
            .collect()
    }

    #[test]
    fn overfits_a_small_set() {
        let data = synthetic(32, 1);
        let m = Model::<f32>::new(cfg(), 2).unwrap();
        let tc = TrainConfig {
            epochs: 200,
            patience: None,
            lr: 1e-2,
            ..TrainConfig::default()
        };
        let (trained, hist) = train(&m, &data, &data, &tc).unwrap();
        assert_eq!(hist.train_loss.len(), 200);
        assert!(loss(&trained, &data).unwrap() < 1e-3, "{:?}", hist.val_loss.last());
    }

    #[test]
    fn first_epoch_reduces_loss_and_is_deterministic() {
        let data = synthetic(256, 3);
        let m = Model::<f32>::new(cfg(), 4).unwrap();
        let before = loss(&m, &data).unwrap();
        let tc = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        let (a, ha) = train(&m, &data, &data, &tc).unwrap();
        let (b, hb) = train(&m, &data, &data, &tc).unwrap();
        assert!(loss(&a, &data).unwrap() < before);
        assert_eq!(ha, hb);
        assert_eq!(a, b);
    }

    #[test]
    fn early_stopping_and_best_epoch() {
        let data = synthetic(64, 5);
        let val = synthetic(16, 6);
        let m = Model::<f32>::new(cfg(), 7).unwrap();
        // a huge step size makes validation loss stall quickly
        let tc = TrainConfig {
            epochs: 60,
            lr: 0.5,
            ..TrainConfig::default()
        };
        let (_, hist) = train(&m, &data, &val, &tc).unwrap();
        let argmin = hist
            .val_loss
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(hist.best_epoch, argmin);
        assert!(hist.val_loss.len() < 60);
        assert_eq!(hist.val_loss.len(), hist.best_epoch + 6);
    }

    #[test]
    fn fine_tune_edge_cases() {
        let m = Model::<f32>::new(cfg(), 8).unwrap();
        let tc = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        assert_eq!(fine_tune(&m, &[], &tc).unwrap(), m);
        let data = synthetic(40, 9);
        let tuned = fine_tune(&m, &data, &tc).unwrap();
        assert_ne!(tuned, m);
        for s in &data {
            let y = tuned.forward(&s.x).unwrap();
            assert!(y > 0.0 && y < 1.0);
        }
        assert!(loss(&tuned, &data).unwrap() < loss(&m, &data).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = Model::<f32>::new(cfg(), 8).unwrap();
        let tc = TrainConfig::default();
        let mut data = synthetic(4, 1);
        assert!(matches!(train(&m, &[], &data, &tc), Err(NnError::EmptySet(_))));
        data[0].y = 1.5;
        assert!(matches!(train(&m, &data, &data, &tc), Err(NnError::Label(_))));
    }
}
