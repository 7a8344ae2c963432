//! Multi-layer perceptron trained by plain mini-batch gradient descent.
//!
//! Rectifier hidden layers, identity output, weighted MAE or MSE loss with
//! one weight per sample-output cell, optional inverted dropout on hidden
//! activations. Arithmetic stays in the instantiated scalar type: the
//! shipped model runs at `f32` (weights are serialized at 32 bits), while
//! [`gradient_check`] instantiates the identical code at `f64` and compares
//! the analytic gradients against central finite differences.
//!
//! Forward passes are plain per-row loops, so a batch prediction is
//! bit-identical to predicting its rows one at a time, and reloading saved
//! weights reproduces predictions exactly.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Real;

use super::{validate_fit_inputs, KDistModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Mae,
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub loss: Loss,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![32],
            batch_size: 256,
            lr: 0.05,
            epochs: 200,
            dropout: 0.0,
            loss: Loss::Mse,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidConfig(
                "hidden widths must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig("dropout must be in [0, 1]".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::InvalidConfig("lr must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer<S> {
    pub w: Vec<S>, // fan_in x fan_out, row-major by input
    pub b: Vec<S>,
    pub fan_in: usize,
    pub fan_out: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S: Scalar> {
    pub(crate) layers: Vec<Layer<S>>,
    input_dim: usize,
    k_max: usize,
}

impl<S: Scalar> Mlp<S> {
    /// Glorot-uniform initialization: each weight is drawn from
    /// `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`; biases start at
    /// zero. Draws happen in `f64` before conversion so the sequence is
    /// scalar-type independent.
    pub fn init(input_dim: usize, k_max: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(k_max);
        let layers = dims
            .windows(2)
            .map(|d| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = (0..fan_in * fan_out)
                    .map(|_| S::from_real(rng.gen::<f64>() * 2.0 * a - a))
                    .collect();
                Layer {
                    w,
                    b: vec![S::zero(); fan_out],
                    fan_in,
                    fan_out,
                }
            })
            .collect();
        Mlp {
            layers,
            input_dim,
            k_max,
        }
    }

    /// Reassembles a network from stored layers; the caller (the artifact
    /// loader) is responsible for dimension validation.
    pub(crate) fn from_layers(layers: Vec<Layer<S>>, input_dim: usize, k_max: usize) -> Self {
        Mlp {
            layers,
            input_dim,
            k_max,
        }
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.fan_out)
            .collect()
    }

    pub fn fit(
        inputs: &ArrayView2<Real>,
        targets: &ArrayView2<Real>,
        weights: &ArrayView2<Real>,
        config: &MlpConfig,
        seed: u64,
    ) -> Result<Self> {
        validate_fit_inputs(inputs, targets, weights)?;
        config.validate()?;
        let (n, d) = inputs.dim();
        let k_max = targets.ncols();
        let conv =
            |m: &ArrayView2<Real>| -> Vec<S> { m.iter().map(|&v| S::from_real(v)).collect() };
        let (xs, ts, ws) = (conv(inputs), conv(targets), conv(weights));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::init(d, k_max, &config.hidden, &mut rng);
        let mut grads = net.zero_grads();
        let mut scratch = Scratch::new(&net);
        let mut order: Vec<usize> = (0..n).collect();
        let lr = S::from_real(config.lr);

        for _ in 0..config.epochs {
            shuffle(&mut order, &mut rng);
            for batch in order.chunks(config.batch_size) {
                net.zero_into(&mut grads);
                let norm = S::from_real(1.0 / (batch.len() * k_max) as f64);
                for &i in batch {
                    let x = &xs[i * d..(i + 1) * d];
                    let t = &ts[i * k_max..(i + 1) * k_max];
                    let w = &ws[i * k_max..(i + 1) * k_max];
                    scratch.sample_dropout(config.dropout, &mut rng);
                    net.forward_train(x, &mut scratch);
                    net.backward(x, t, w, config.loss, norm, &mut scratch, &mut grads);
                }
                for (layer, g) in net.layers.iter_mut().zip(&grads) {
                    for (wv, gv) in layer.w.iter_mut().zip(&g.w) {
                        *wv -= lr * *gv;
                    }
                    for (bv, gv) in layer.b.iter_mut().zip(&g.b) {
                        *bv -= lr * *gv;
                    }
                }
            }
        }
        Ok(net)
    }

    fn zero_grads(&self) -> Vec<LayerGrad<S>> {
        self.layers
            .iter()
            .map(|l| LayerGrad {
                w: vec![S::zero(); l.w.len()],
                b: vec![S::zero(); l.b.len()],
            })
            .collect()
    }

    fn zero_into(&self, grads: &mut [LayerGrad<S>]) {
        for g in grads {
            g.w.iter_mut().for_each(|v| *v = S::zero());
            g.b.iter_mut().for_each(|v| *v = S::zero());
        }
    }

    /// Inference forward pass; writes the output activations into `out`.
    fn forward_infer(&self, x: &[S], out: &mut [S]) {
        let mut cur: Vec<S> = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut next = vec![S::zero(); layer.fan_out];
            affine(layer, &cur, &mut next);
            if li < last {
                next.iter_mut().for_each(|v| {
                    if *v < S::zero() {
                        *v = S::zero()
                    }
                });
            }
            cur = next;
        }
        out.copy_from_slice(&cur);
    }

    /// Training forward pass: keeps pre-activations and applies the dropout
    /// factors already sampled into `scratch`.
    fn forward_train(&self, x: &[S], scratch: &mut Scratch<S>) {
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let input: &[S] = if li == 0 { x } else { &scratch.act[li - 1] };
            affine_into(layer, input, &mut scratch.z[li]);
            scratch.act[li].copy_from_slice(&scratch.z[li]);
            if li < last {
                for (a, &f) in scratch.act[li].iter_mut().zip(&scratch.dropout[li]) {
                    if *a < S::zero() {
                        *a = S::zero();
                    }
                    *a *= f;
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn backward(
        &self,
        x: &[S],
        t: &[S],
        w: &[S],
        loss: Loss,
        norm: S,
        scratch: &mut Scratch<S>,
        grads: &mut [LayerGrad<S>],
    ) {
        let last = self.layers.len() - 1;
        // dL/dz at the output layer.
        {
            let pred = &scratch.act[last];
            let delta = &mut scratch.delta[last];
            for j in 0..pred.len() {
                let r = pred[j] - t[j];
                let g = match loss {
                    Loss::Mse => (r + r) * w[j],
                    Loss::Mae => {
                        let s = if r > S::zero() {
                            S::one()
                        } else if r < S::zero() {
                            -S::one()
                        } else {
                            S::zero()
                        };
                        s * w[j]
                    }
                };
                delta[j] = g * norm;
            }
        }
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input: &[S] = if li == 0 { x } else { &scratch.act[li - 1] };
            {
                let delta = &scratch.delta[li];
                let g = &mut grads[li];
                for (i, &xi) in input.iter().enumerate() {
                    if xi != S::zero() {
                        let row = &mut g.w[i * layer.fan_out..(i + 1) * layer.fan_out];
                        for (gv, &dv) in row.iter_mut().zip(delta) {
                            *gv += xi * dv;
                        }
                    }
                }
                for (bv, &dv) in g.b.iter_mut().zip(delta) {
                    *bv += dv;
                }
            }
            if li > 0 {
                // Propagate through the previous layer's dropout and relu.
                let (dhead, dtail) = scratch.delta.split_at_mut(li);
                let prev_delta = &mut dhead[li - 1];
                let delta = &dtail[0];
                let z_prev = &scratch.z[li - 1];
                let drop_prev = &scratch.dropout[li - 1];
                for i in 0..layer.fan_in {
                    let mut acc = S::zero();
                    let row = &layer.w[i * layer.fan_out..(i + 1) * layer.fan_out];
                    for (wv, dv) in row.iter().zip(delta.iter()) {
                        acc += *wv * *dv;
                    }
                    prev_delta[i] = if z_prev[i] > S::zero() {
                        acc * drop_prev[i]
                    } else {
                        S::zero()
                    };
                }
            }
        }
    }
}

fn affine<S: Scalar>(layer: &Layer<S>, x: &[S], out: &mut Vec<S>) {
    affine_into(layer, x, out.as_mut_slice());
}

fn affine_into<S: Scalar>(layer: &Layer<S>, x: &[S], out: &mut [S]) {
    out.copy_from_slice(&layer.b);
    for (i, &xi) in x.iter().enumerate() {
        if xi != S::zero() {
            let row = &layer.w[i * layer.fan_out..(i + 1) * layer.fan_out];
            for (o, &wv) in out.iter_mut().zip(row) {
                *o += xi * wv;
            }
        }
    }
}

struct LayerGrad<S> {
    w: Vec<S>,
    b: Vec<S>,
}

/// Per-sample training buffers: pre-activations `z`, post-activations `act`,
/// backprop deltas and dropout factors per hidden layer.
struct Scratch<S> {
    z: Vec<Vec<S>>,
    act: Vec<Vec<S>>,
    delta: Vec<Vec<S>>,
    dropout: Vec<Vec<S>>,
    rate_cache: (f64, S),
}

impl<S: Scalar> Scratch<S> {
    fn new(net: &Mlp<S>) -> Self {
        let sizes: Vec<usize> = net.layers.iter().map(|l| l.fan_out).collect();
        let hidden = &sizes[..sizes.len() - 1];
        Scratch {
            z: sizes.iter().map(|&s| vec![S::zero(); s]).collect(),
            act: sizes.iter().map(|&s| vec![S::zero(); s]).collect(),
            delta: sizes.iter().map(|&s| vec![S::zero(); s]).collect(),
            dropout: hidden.iter().map(|&s| vec![S::one(); s]).collect(),
            rate_cache: (0.0, S::one()),
        }
    }

    /// Inverted dropout factors: 0 with probability `rate`, otherwise
    /// `1 / (1 - rate)`. `rate >= 1` silences every unit.
    fn sample_dropout(&mut self, rate: f64, rng: &mut ChaCha8Rng) {
        if rate == 0.0 {
            return;
        }
        if self.rate_cache.0 != rate {
            let scale = if rate >= 1.0 { 0.0 } else { 1.0 / (1.0 - rate) };
            self.rate_cache = (rate, S::from_real(scale));
        }
        let keep_scale = self.rate_cache.1;
        for layer in &mut self.dropout {
            for f in layer {
                *f = if rng.gen::<f64>() < rate {
                    S::zero()
                } else {
                    keep_scale
                };
            }
        }
    }
}

fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}

impl<S: Scalar> KDistModel for Mlp<S> {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn k_max(&self) -> usize {
        self.k_max
    }

    fn predict_into(&self, x: &[Real], out: &mut [Real]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let xs: Vec<S> = x.iter().map(|&v| S::from_real(v)).collect();
        let mut o = vec![S::zero(); self.k_max];
        self.forward_infer(&xs, &mut o);
        for (dst, &v) in out.iter_mut().zip(&o) {
            *dst = v.to_real();
        }
        Ok(())
    }

    fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.fan_in * l.fan_out + l.fan_out)
            .sum()
    }
}

/// Result of one finite-difference comparison.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Compares analytic gradients of a randomly initialized `f64` network on a
/// random batch against central finite differences with the given `step`.
/// Parameters whose perturbation crosses a non-differentiable point are
/// excluded, since the analytic value is a subgradient there: under MAE any
/// flip of a residual sign, and under either loss any flip of a hidden
/// pre-activation sign (the rectifier kink).
pub fn gradient_check(hidden: &[usize], loss: Loss, seed: u64, step: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, k_max, m) = (3usize, 4usize, 5usize);
    let mut net: Mlp<f64> = Mlp::init(d, k_max, hidden, &mut rng);
    let xs: Vec<f64> = (0..m * d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    let ts: Vec<f64> = (0..m * k_max).map(|_| rng.gen::<f64>()).collect();
    let ws: Vec<f64> = (0..m * k_max).map(|_| 0.5 + rng.gen::<f64>()).collect();

    let sign = |v: f64| -> i8 {
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    // Returns the batch loss plus the sign pattern of every kink-relevant
    // quantity: hidden pre-activations always, residuals under MAE.
    let batch_loss = |net: &Mlp<f64>| -> (f64, Vec<i8>) {
        let norm = 1.0 / (m * k_max) as f64;
        let mut scratch = Scratch::new(net);
        let last = net.layers.len() - 1;
        let mut total = 0.0;
        let mut signs = Vec::new();
        for i in 0..m {
            net.forward_train(&xs[i * d..(i + 1) * d], &mut scratch);
            for z in scratch.z.iter().take(last) {
                signs.extend(z.iter().map(|&v| sign(v)));
            }
            let out = &scratch.act[last];
            for k in 0..k_max {
                let r: f64 = out[k] - ts[i * k_max + k];
                let w = ws[i * k_max + k];
                total += match loss {
                    Loss::Mse => w * r * r,
                    Loss::Mae => w * r.abs(),
                } * norm;
                if loss == Loss::Mae {
                    signs.push(sign(r));
                }
            }
        }
        (total, signs)
    };

    // Analytic gradients on the same batch, no dropout.
    let mut grads = net.zero_grads();
    let mut scratch = Scratch::new(&net);
    let norm = 1.0 / (m * k_max) as f64;
    for i in 0..m {
        net.forward_train(&xs[i * d..(i + 1) * d], &mut scratch);
        net.backward(
            &xs[i * d..(i + 1) * d],
            &ts[i * k_max..(i + 1) * k_max],
            &ws[i * k_max..(i + 1) * k_max],
            loss,
            norm,
            &mut scratch,
            &mut grads,
        );
    }

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        checked: 0,
        skipped: 0,
    };
    // Indexing by layer keeps the read/write closures borrow-safe while the
    // net itself is perturbed in place.
    #[allow(clippy::needless_range_loop)]
    for li in 0..net.layers.len() {
        let param_count = net.layers[li].w.len() + net.layers[li].b.len();
        for pi in 0..param_count {
            let read = |net: &Mlp<f64>, pi: usize| -> f64 {
                let l = &net.layers[li];
                if pi < l.w.len() {
                    l.w[pi]
                } else {
                    l.b[pi - l.w.len()]
                }
            };
            let write = |net: &mut Mlp<f64>, pi: usize, v: f64| {
                let l = &mut net.layers[li];
                if pi < l.w.len() {
                    l.w[pi] = v;
                } else {
                    let off = pi - l.w.len();
                    l.b[off] = v;
                }
            };
            let orig = read(&net, pi);
            write(&mut net, pi, orig + step);
            let (lp, sp) = batch_loss(&net);
            write(&mut net, pi, orig - step);
            let (lm, sm) = batch_loss(&net);
            write(&mut net, pi, orig);

            if sp != sm {
                report.skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * step);
            let analytic = {
                let g = &grads[li];
                if pi < g.w.len() {
                    g.w[pi]
                } else {
                    g.b[pi - g.w.len()]
                }
            };
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            report.max_rel_err = report.max_rel_err.max(rel);
            report.checked += 1;
        }
    }
    report
}
