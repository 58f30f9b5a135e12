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


use rand::Rng as _;

use super::{param_count, ModelConfig, NnError, Real};
use crate::seed;
use crate::tokenizer::{TokenizedCircuit, PAD};

/// A named parameter tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Offsets {
    /// Start of embedding table `k`, each `(vocab_size + 1) × embed_dim`.
    pub emb: Vec<usize>,
    /// Input kernel, `(lanes · embed_dim) × 4h`.
    pub kernel: usize,
    /// Recurrent kernel, `h × 4h`.
    pub recurrent: usize,
    pub bias: usize,
    /// `(kernel, bias, fan_in, fan_out)` per dense layer; kernels are
    /// `fan_in × fan_out`.
    pub dense: Vec<(usize, usize, usize, usize)>,
    pub total: usize,
}

impl Offsets {
    fn new(cfg: &ModelConfig) -> Offsets {
        let (e, h) = (cfg.embed_dim, cfg.lstm_units);
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let emb = (0..cfg.embedding_tables())
            .map(|_| take((cfg.vocab_size + 1) * e))
            .collect();
        let kernel = take(cfg.lanes * e * 4 * h);
        let recurrent = take(h * 4 * h);
        let bias = take(4 * h);
        let mut dense = Vec::new();
        let mut fan_in = h;
        for &out in &cfg.dense_sizes {
            let k = take(fan_in * out);
            let b = take(out);
            dense.push((k, b, fan_in, out));
            fan_in = out;
        }
        Offsets {
            emb,
            kernel,
            recurrent,
            bias,
            dense,
            total: at,
        }
    }
}

pub(super) fn total_len(cfg: &ModelConfig) -> usize {
    Offsets::new(cfg).total
}

#[inline]
pub(super) fn axpy<F: Real>(y: &mut [F], a: F, x: &[F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

#[inline]
pub(super) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    let mut acc = [F::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (&x, &y) in ra.iter().zip(rb) {
        s = s + x * y;
    }
    s
}

#[inline]
fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<F: Real> {
    cfg: ModelConfig,
    pub(super) off: Offsets,
    pub(super) params: Vec<F>,
}

/// Per-(lane, token) input contributions `kernel_laneᵀ · emb[token]`,
/// each `4h` wide. Valid until the parameters change.
#[derive(Debug, Clone)]
pub struct Projection<F: Real> {
    data: Vec<F>,
    width: usize,
    vocab: usize,
}

impl<F: Real> Projection<F> {
    #[inline]
    fn row(&self, lane: usize, token: u32) -> &[F] {
        let at = (lane * (self.vocab + 1) + token as usize) * self.width;
        &self.data[at..at + self.width]
    }
}

/// Activations kept for backpropagation.
#[derive(Debug, Clone)]
pub(super) struct Trace<F: Real> {
    /// Indices of the non-padding timesteps.
    pub steps: Vec<usize>,
    /// Post-activation gates `i, f, g, o` per active step.
    pub gates: Vec<F>,
    pub cells: Vec<F>,
    pub tanh_cells: Vec<F>,
    pub hidden: Vec<F>,
    /// Dense inputs per layer, then the output.
    pub acts: Vec<Vec<F>>,
}

impl<F: Real> Trace<F> {
    pub fn output(&self) -> F {
        self.acts.last().expect("output")[0]
    }
}

fn f<F: Real>(x: f64) -> F {
    F::from(x).expect("representable")
}

impl<F: Real> Model<F> {
    /// Xavier-uniform kernels, zero biases except the forget gate (+1), and
    /// small uniform embeddings with the padding rows at zero.
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Model<F>, NnError> {
        cfg.validate()?;
        let off = Offsets::new(&cfg);
        let mut params = vec![F::zero(); off.total];
        let mut rng = seed::rng(seed);
        let (e, h) = (cfg.embed_dim, cfg.lstm_units);
        let mut fill = |p: &mut [F], limit: f64| {
            for x in p {
                *x = f(rng.gen_range(-limit..=limit));
            }
        };
        for &t in &off.emb {
            fill(&mut params[t + e..t + (cfg.vocab_size + 1) * e], 0.05);
        }
        let xavier = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n_in = cfg.lanes * e;
        fill(&mut params[off.kernel..off.kernel + n_in * 4 * h], xavier(n_in, 4 * h));
        fill(&mut params[off.recurrent..off.recurrent + h * 4 * h], xavier(h, 4 * h));
        for x in &mut params[off.bias + h..off.bias + 2 * h] {
            *x = F::one();
        }
        for &(k, _, fan_in, fan_out) in &off.dense {
            fill(&mut params[k..k + fan_in * fan_out], xavier(fan_in, fan_out));
        }
        Ok(Model { cfg, off, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    /// Mutable parameters in [`Model::tensors`] layout. The padding rows
    /// must stay zero.
    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.cfg)
    }

    /// Tensors in storage order.
    pub fn tensors(&self) -> Vec<TensorSpec> {
        let cfg = &self.cfg;
        let (e, h) = (cfg.embed_dim, cfg.lstm_units);
        let mut out = Vec::new();
        for (k, &o) in self.off.emb.iter().enumerate() {
            let name = if cfg.shared_embedding {
                "embedding".to_string()
            } else {
                format!("embedding.{k}")
            };
            out.push(TensorSpec {
                name,
                shape: vec![cfg.vocab_size + 1, e],
                offset: o,
            });
        }
        out.push(TensorSpec {
            name: "lstm.kernel".into(),
            shape: vec![cfg.lanes * e, 4 * h],
            offset: self.off.kernel,
        });
        out.push(TensorSpec {
            name: "lstm.recurrent".into(),
            shape: vec![h, 4 * h],
            offset: self.off.recurrent,
        });
        out.push(TensorSpec {
            name: "lstm.bias".into(),
            shape: vec![4 * h],
            offset: self.off.bias,
        });
        for (i, &(k, b, fan_in, fan_out)) in self.off.dense.iter().enumerate() {
            out.push(TensorSpec {
                name: format!("dense.{i}.kernel"),
                shape: vec![fan_in, fan_out],
                offset: k,
            });
            out.push(TensorSpec {
                name: format!("dense.{i}.bias"),
                shape: vec![fan_out],
                offset: b,
            });
        }
        out
    }

    /// Positions of the frozen padding rows.
    pub(super) fn frozen(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        let e = self.cfg.embed_dim;
        self.off.emb.iter().map(move |&o| o..o + e)
    }

    pub(super) fn from_parts(cfg: ModelConfig, params: Vec<F>) -> Result<Model<F>, NnError> {
        cfg.validate()?;
        let off = Offsets::new(&cfg);
        if params.len() != off.total {
            return Err(NnError::Checkpoint(format!(
                "expected {} values, found {}",
                off.total,
                params.len()
            )));
        }
        let m = Model { cfg, off, params };
        if m.frozen().any(|r| m.params[r].iter().any(|x| !x.is_zero())) {
            return Err(NnError::Checkpoint("padding embedding row is not zero".into()));
        }
        Ok(m)
    }

    pub fn cast<G: Real>(&self) -> Model<G> {
        Model {
            cfg: self.cfg.clone(),
            off: self.off.clone(),
            params: self
                .params
                .iter()
                .map(|&x| G::from(x).expect("representable"))
                .collect(),
        }
    }

    fn emb_table(&self, lane: usize) -> usize {
        if self.cfg.shared_embedding {
            self.off.emb[0]
        } else {
            self.off.emb[lane]
        }
    }

    pub fn project(&self) -> Projection<F> {
        let cfg = &self.cfg;
        let (e, w) = (cfg.embed_dim, 4 * cfg.lstm_units);
        let v = cfg.vocab_size;
        let mut data = vec![F::zero(); cfg.lanes * (v + 1) * w];
        for lane in 0..cfg.lanes {
            let table = self.emb_table(lane);
            for tok in 1..=v {
                let emb = &self.params[table + tok * e..table + (tok + 1) * e];
                let at = (lane * (v + 1) + tok) * w;
                let row = &mut data[at..at + w];
                for (j, &x) in emb.iter().enumerate() {
                    let k = self.off.kernel + (lane * e + j) * w;
                    axpy(row, x, &self.params[k..k + w]);
                }
            }
        }
        Projection { data, width: w, vocab: v }
    }

    pub fn check_input(&self, x: &TokenizedCircuit) -> Result<(), NnError> {
        if x.lanes != self.cfg.lanes || x.t != self.cfg.t || x.tokens.len() != x.lanes * x.t {
            return Err(NnError::Shape {
                got_lanes: x.lanes,
                got_t: x.t,
                lanes: self.cfg.lanes,
                t: self.cfg.t,
            });
        }
        if let Some(&bad) = x.tokens.iter().find(|&&t| t as usize > self.cfg.vocab_size) {
            return Err(NnError::Token(bad, self.cfg.vocab_size));
        }
        Ok(())
    }

    pub(super) fn trace(&self, proj: &Projection<F>, x: &TokenizedCircuit) -> Trace<F> {
        let h = self.cfg.lstm_units;
        let w = 4 * h;
        let steps: Vec<usize> = (0..x.t)
            .filter(|&s| x.step(s).iter().any(|&t| t != PAD))
            .collect();
        let n = steps.len();
        let mut gates = vec![F::zero(); n * w];
        let mut cells = vec![F::zero(); n * h];
        let mut tanh_cells = vec![F::zero(); n * h];
        let mut hidden = vec![F::zero(); n * h];
        let bias = &self.params[self.off.bias..self.off.bias + w];
        let rec = &self.params[self.off.recurrent..self.off.recurrent + h * w];
        let zero = vec![F::zero(); h];
        for (k, &s) in steps.iter().enumerate() {
            let z = &mut gates[k * w..(k + 1) * w];
            z.copy_from_slice(bias);
            for (lane, &tok) in x.step(s).iter().enumerate() {
                if tok != PAD {
                    axpy(z, F::one(), proj.row(lane, tok));
                }
            }
            let h_prev = if k == 0 { &zero[..] } else { &hidden[(k - 1) * h..k * h] };
            for (j, &hj) in h_prev.iter().enumerate() {
                if !hj.is_zero() {
                    axpy(z, hj, &rec[j * w..(j + 1) * w]);
                }
            }
            for v in &mut z[..2 * h] {
                *v = sigmoid(*v);
            }
            for v in &mut z[2 * h..3 * h] {
                *v = v.tanh();
            }
            for v in &mut z[3 * h..] {
                *v = sigmoid(*v);
            }
            for j in 0..h {
                let c_prev = if k == 0 { F::zero() } else { cells[(k - 1) * h + j] };
                let c = z[h + j] * c_prev + z[j] * z[2 * h + j];
                let tc = c.tanh();
                cells[k * h + j] = c;
                tanh_cells[k * h + j] = tc;
                hidden[k * h + j] = z[3 * h + j] * tc;
            }
        }
        let last = if n == 0 { zero } else { hidden[(n - 1) * h..].to_vec() };
        let mut acts = vec![last];
        let n_dense = self.off.dense.len();
        for (i, &(kk, bb, _, fan_out)) in self.off.dense.iter().enumerate() {
            let a = acts.last().expect("input");
            let mut z = self.params[bb..bb + fan_out].to_vec();
            for (r, &ar) in a.iter().enumerate() {
                axpy(&mut z, ar, &self.params[kk + r * fan_out..kk + (r + 1) * fan_out]);
            }
            if i + 1 == n_dense {
                z.iter_mut().for_each(|v| *v = sigmoid(*v));
            } else {
                z.iter_mut().for_each(|v| *v = v.max(F::zero()));
            }
            acts.push(z);
        }
        Trace {
            steps,
            gates,
            cells,
            tanh_cells,
            hidden,
            acts,
        }
    }

    /// Accumulates `dL/dθ` for one sample into `grad`, with the per-(lane,
    /// token) input gradients collected in `dproj` (shaped like a
    /// [`Projection`]); call [`Model::fold_projection_grad`] once per batch.
    pub(super) fn backward(
        &self,
        x: &TokenizedCircuit,
        tr: &Trace<F>,
        dy: F,
        grad: &mut [F],
        dproj: &mut [F],
    ) {
        let h = self.cfg.lstm_units;
        let w = 4 * h;
        let v = self.cfg.vocab_size;

        // dense head
        let n_dense = self.off.dense.len();
        let mut delta = vec![dy];
        for i in (0..n_dense).rev() {
            let (kk, bb, fan_in, fan_out) = self.off.dense[i];
            let out = &tr.acts[i + 1];
            let dz: Vec<F> = if i + 1 == n_dense {
                delta.iter().zip(out).map(|(&d, &y)| d * y * (F::one() - y)).collect()
            } else {
                delta
                    .iter()
                    .zip(out)
                    .map(|(&d, &y)| if y > F::zero() { d } else { F::zero() })
                    .collect()
            };
            let a = &tr.acts[i];
            for (b, &d) in grad[bb..bb + fan_out].iter_mut().zip(&dz) {
                *b = *b + d;
            }
            let mut da = vec![F::zero(); fan_in];
            for r in 0..fan_in {
                let row = kk + r * fan_out..kk + (r + 1) * fan_out;
                axpy(&mut grad[row.clone()], a[r], &dz);
                da[r] = dot(&self.params[row], &dz);
            }
            delta = da;
        }

        // LSTM, backwards through the active steps
        let n = tr.steps.len();
        let mut dh = delta;
        let mut dc = vec![F::zero(); h];
        let mut dz = vec![F::zero(); w];
        let rec = self.off.recurrent;
        for k in (0..n).rev() {
            let g = &tr.gates[k * w..(k + 1) * w];
            let tc = &tr.tanh_cells[k * h..(k + 1) * h];
            for j in 0..h {
                let (ig, fg, gg, og) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let c_prev = if k == 0 { F::zero() } else { tr.cells[(k - 1) * h + j] };
                let d_o = dh[j] * tc[j];
                let dcj = dc[j] + dh[j] * og * (F::one() - tc[j] * tc[j]);
                dz[j] = dcj * gg * ig * (F::one() - ig);
                dz[h + j] = dcj * c_prev * fg * (F::one() - fg);
                dz[2 * h + j] = dcj * ig * (F::one() - gg * gg);
                dz[3 * h + j] = d_o * og * (F::one() - og);
                dc[j] = dcj * fg;
            }
            for (b, &d) in grad[self.off.bias..self.off.bias + w].iter_mut().zip(&dz) {
                *b = *b + d;
            }
            let s = tr.steps[k];
            for (lane, &tok) in x.step(s).iter().enumerate() {
                if tok != PAD {
                    let at = (lane * (v + 1) + tok as usize) * w;
                    axpy(&mut dproj[at..at + w], F::one(), &dz);
                }
            }
            if k > 0 {
                let h_prev = &tr.hidden[(k - 1) * h..k * h];
                for j in 0..h {
                    let row = rec + j * w..rec + (j + 1) * w;
                    if !h_prev[j].is_zero() {
                        axpy(&mut grad[row.clone()], h_prev[j], &dz);
                    }
                    dh[j] = dot(&self.params[row], &dz);
                }
            }
        }
    }

    /// Turns accumulated input gradients into kernel and embedding
    /// gradients. The padding rows receive nothing.
    pub(super) fn fold_projection_grad(&self, dproj: &[F], grad: &mut [F]) {
        let cfg = &self.cfg;
        let (e, w, v) = (cfg.embed_dim, 4 * cfg.lstm_units, cfg.vocab_size);
        for lane in 0..cfg.lanes {
            let table = self.emb_table(lane);
            for tok in 1..=v {
                let at = (lane * (v + 1) + tok) * w;
                let d = &dproj[at..at + w];
                if d.iter().all(|x| x.is_zero()) {
                    continue;
                }
                for j in 0..e {
                    let k = self.off.kernel + (lane * e + j) * w;
                    let ej = self.params[table + tok * e + j];
                    axpy(&mut grad[k..k + w], ej, d);
                    let g = dot(&self.params[k..k + w], d);
                    let gi = table + tok * e + j;
                    grad[gi] = grad[gi] + g;
                }
            }
        }
    }

    pub(super) fn projection_len(&self) -> usize {
        self.cfg.lanes * (self.cfg.vocab_size + 1) * 4 * self.cfg.lstm_units
    }

    /// Prediction for one input, using a projection from [`Model::project`].
    pub fn predict_with(&self, proj: &Projection<F>, x: &TokenizedCircuit) -> Result<F, NnError> {
        self.check_input(x)?;
        Ok(self.trace(proj, x).output())
    }

    pub fn forward(&self, x: &TokenizedCircuit) -> Result<F, NnError> {
        self.predict_with(&self.project(), x)
    }

    /// Predictions for many inputs, in input order.
    pub fn predict_many(&self, xs: &[TokenizedCircuit]) -> Result<Vec<F>, NnError> {
        for x in xs {
            self.check_input(x)?;
        }
        let proj = self.project();
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            Ok(xs.par_iter().map(|x| self.trace(&proj, x).output()).collect())
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(xs.iter().map(|x| self.trace(&proj, x).output()).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn tiny() -> ModelConfig {
        ModelConfig {
            lanes: 2,
            vocab_size: 5,
            embed_dim: 4,
            lstm_units: 8,
            dense_sizes: vec![4, 1],
            t: 6,
            shared_embedding: true,
        }
    }

    fn input(tokens: Vec<u32>, lanes: usize) -> TokenizedCircuit {
        TokenizedCircuit {
            lanes,
            t: tokens.len() / lanes,
            tokens,
        }
    }

    #[test]
    fn shapes_and_counts() {
        let m = Model::<f32>::new(tiny(), 1).unwrap();
        let specs = m.tensors();
        let total: usize = specs.iter().map(TensorSpec::len).sum();
        assert_eq!(total, m.params().len());
        assert_eq!(total - m.config().embedding_tables() * 4, m.param_count());
        assert!(m.frozen().all(|r| m.params()[r].iter().all(|&x| x == 0.0)));
        let b = &m.params()[m.off.bias..m.off.bias + 32];
        assert!(b[8..16].iter().all(|&x| x == 1.0));
        assert!(b[..8].iter().chain(&b[16..]).all(|&x| x == 0.0));
    }

    #[test]
    fn input_validation() {
        let m = Model::<f32>::new(tiny(), 1).unwrap();
        assert!(matches!(m.forward(&input(vec![1; 10], 2)), Err(NnError::Shape { .. })));
        assert!(matches!(m.forward(&input(vec![6; 12], 2)), Err(NnError::Token(6, 5))));
    }

    #[test]
    fn all_padding_is_independent_of_t() {
        let m = Model::<f64>::new(tiny(), 3).unwrap();
        let a = m.forward(&input(vec![0; 12], 2)).unwrap();
        let mut cfg = tiny();
        cfg.t = 40;
        let mut m40 = Model::<f64>::new(cfg, 3).unwrap();
        m40.params = m.params.clone();
        let b = m40.forward(&input(vec![0; 80], 2)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn predict_many_matches_forward() {
        let m = Model::<f32>::new(tiny(), 9).unwrap();
        let xs: Vec<_> = (0..5u32)
            .map(|k| input((0..12).map(|i| (i * 7 + k) % 6).collect(), 2))
            .collect();
        let many = m.predict_many(&xs).unwrap();
        for (x, y) in xs.iter().zip(many) {
            assert_eq!(m.forward(x).unwrap().to_bits(), y.to_bits());
        }
    }

    proptest! {
        #[test]
        fn prefix_padding_is_invisible(
            body in proptest::collection::vec(1u32..=5, 2..=12),
            k in 0usize..4,
            seed in 0u64..50,
        ) {
            let mut tokens = body.clone();
            tokens.truncate(tokens.len() / 2 * 2);
            let cols = tokens.len() / 2;
            prop_assume!(cols + k <= 6);
            let mut padded = vec![0u32; (6 - cols) * 2];
            padded.extend(&tokens);
            let x = input(padded, 2);
            let m = Model::<f32>::new(tiny(), seed).unwrap();
            let y = m.forward(&x).unwrap();
            prop_assert!(y > 0.0 && y < 1.0);
            // shifting content right by k within a longer window
            let mut cfg = tiny();
            cfg.t = 6 + k;
            let mut longer = Model::<f32>::new(cfg, seed).unwrap();
            longer.params = m.params.clone();
            let mut more = vec![0u32; 2 * k];
            more.extend(&x.tokens);
            let y2 = longer.forward(&input(more, 2)).unwrap();
            prop_assert_eq!(y.to_bits(), y2.to_bits());
        }
    }
}
