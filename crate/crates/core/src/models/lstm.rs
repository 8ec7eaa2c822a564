//! Single-layer LSTM classifier trained with backpropagation through time.
//!
//! The final hidden state of the valid timesteps goes through dropout
//! (training only), an affine head and a sigmoid. All parameters live in
//! one flat buffer:
//!
//! | block    | shape        |
//! |----------|--------------|
//! | `W`      | `4h x d`     |
//! | `U`      | `4h x h`     |
//! | `b`      | `4h`         |
//! | `head_w` | `h`          |
//! | `head_b` | `1`          |
//!
//! Gate rows are ordered input, forget, candidate, output.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bce_with_logit, check_both_classes, sigmoid};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::SequenceInput;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LstmHyper {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub seed: u64,
    pub patience: usize,
    pub clip_norm: f64,
}

impl Default for LstmHyper {
    fn default() -> Self {
        LstmHyper {
            hidden_dim: 128,
            learning_rate: 0.5,
            max_epochs: 30,
            batch_size: 32,
            dropout: 0.5,
            seed: 0,
            patience: 3,
            clip_norm: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmTrainingMeta {
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub patience: usize,
    pub clip_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    d: usize,
    h: usize,
}

impl Layout {
    fn w(&self) -> Range<usize> {
        0..4 * self.h * self.d
    }

    fn u(&self) -> Range<usize> {
        let s = self.w().end;
        s..s + 4 * self.h * self.h
    }

    fn b(&self) -> Range<usize> {
        let s = self.u().end;
        s..s + 4 * self.h
    }

    fn head_w(&self) -> Range<usize> {
        let s = self.b().end;
        s..s + self.h
    }

    fn head_b(&self) -> usize {
        self.head_w().end
    }

    fn len(&self) -> usize {
        self.head_b() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    input_dim: usize,
    hidden_dim: usize,
    dropout_rate: f64,
    params: Vec<f64>,
    pub meta: Option<LstmTrainingMeta>,
}

/// Per-step activations kept for the backward pass.
#[derive(Default)]
struct Trace {
    /// post-activation gates, `T x 4h`
    gates: Vec<f64>,
    cells: Vec<f64>,
    tanh_cells: Vec<f64>,
    hidden: Vec<f64>,
}

impl LstmModel {
    /// Random initialization: uniform in `±1/sqrt(h)`, forget-gate bias 1.
    pub fn init(input_dim: usize, hidden_dim: usize, dropout_rate: f64, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::InvalidArgument("LSTM dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidArgument("dropout must lie in [0, 1)".into()));
        }
        let layout = Layout {
            d: input_dim,
            h: hidden_dim,
        };
        let k = 1.0 / (hidden_dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params: Vec<f64> = (0..layout.len()).map(|_| rng.random_range(-k..k)).collect();
        let b = layout.b();
        for j in 0..hidden_dim {
            params[b.start + j] = 0.0;
            params[b.start + hidden_dim + j] = 1.0;
            params[b.start + 2 * hidden_dim + j] = 0.0;
            params[b.start + 3 * hidden_dim + j] = 0.0;
        }
        params[layout.head_b()] = 0.0;
        Ok(LstmModel {
            input_dim,
            hidden_dim,
            dropout_rate,
            params,
            meta: None,
        })
    }

    pub fn from_parts(input_dim: usize, hidden_dim: usize, dropout_rate: f64, params: Vec<f64>) -> Result<Self> {
        let layout = Layout {
            d: input_dim,
            h: hidden_dim,
        };
        if params.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                actual: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("LSTM parameter".into()));
        }
        Ok(LstmModel {
            input_dim,
            hidden_dim,
            dropout_rate,
            params,
            meta: None,
        })
    }

    fn layout(&self) -> Layout {
        Layout {
            d: self.input_dim,
            h: self.hidden_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Named parameter blocks and their ranges in [`params`](Self::params).
    pub fn param_blocks(&self) -> Vec<(&'static str, Range<usize>)> {
        let l = self.layout();
        let mut blocks = Vec::new();
        for (gate, k) in [("input", 0), ("forget", 1), ("candidate", 2), ("output", 3)] {
            let w = l.w().start + k * l.h * l.d;
            blocks.push((gate_name("W", gate), w..w + l.h * l.d));
            let u = l.u().start + k * l.h * l.h;
            blocks.push((gate_name("U", gate), u..u + l.h * l.h));
            let b = l.b().start + k * l.h;
            blocks.push((gate_name("b", gate), b..b + l.h));
        }
        blocks.push(("head_w", l.head_w()));
        blocks.push(("head_b", l.head_b()..l.head_b() + 1));
        blocks
    }

    fn check_input<S: SequenceInput>(&self, s: &S) -> Result<()> {
        if s.steps() > 0 && s.input_dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: s.input_dim(),
            });
        }
        Ok(())
    }

    /// Runs the recurrence and returns the final hidden state.
    fn forward<S: SequenceInput>(&self, s: &S, mut trace: Option<&mut Trace>) -> Vec<f64> {
        let Layout { d, h } = self.layout();
        let p = &self.params;
        let (w, u, b) = (&p[self.layout().w()], &p[self.layout().u()], &p[self.layout().b()]);
        let mut hidden = vec![0.0; h];
        let mut cell = vec![0.0; h];
        let mut z = vec![0.0; 4 * h];
        if let Some(tr) = trace.as_deref_mut() {
            let n = s.steps();
            tr.gates.clear();
            tr.gates.reserve(n * 4 * h);
            tr.cells.clear();
            tr.tanh_cells.clear();
            tr.hidden.clear();
        }
        for t in 0..s.steps() {
            let x = s.step(t);
            for r in 0..4 * h {
                let wr = &w[r * d..(r + 1) * d];
                let ur = &u[r * h..(r + 1) * h];
                let mut acc = b[r];
                for k in 0..d {
                    acc += wr[k] * x[k];
                }
                for k in 0..h {
                    acc += ur[k] * hidden[k];
                }
                z[r] = acc;
            }
            for j in 0..h {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                z[j] = i;
                z[h + j] = f;
                z[2 * h + j] = g;
                z[3 * h + j] = o;
                cell[j] = f * cell[j] + i * g;
            }
            for j in 0..h {
                let tc = cell[j].tanh();
                hidden[j] = z[3 * h + j] * tc;
                if let Some(tr) = trace.as_deref_mut() {
                    tr.tanh_cells.push(tc);
                }
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.gates.extend_from_slice(&z);
                tr.cells.extend_from_slice(&cell);
                tr.hidden.extend_from_slice(&hidden);
            }
        }
        hidden
    }

    fn head_logit(&self, hidden: &[f64], mask: Option<&[f64]>) -> f64 {
        let l = self.layout();
        let hw = &self.params[l.head_w()];
        let mut z = self.params[l.head_b()];
        for j in 0..self.hidden_dim {
            let m = mask.map_or(1.0, |m| m[j]);
            z += hw[j] * hidden[j] * m;
        }
        z
    }

    /// Probability of the AI class with dropout disabled.
    pub fn predict_proba<S: SequenceInput>(&self, s: &S) -> Result<f64> {
        self.check_input(s)?;
        let hidden = self.forward(s, None);
        Ok(sigmoid(self.head_logit(&hidden, None)))
    }

    pub fn predict<S: SequenceInput>(&self, s: &S) -> Result<Label> {
        Ok(super::label_from_probability(self.predict_proba(s)?))
    }

    /// Loss of one sample; accumulates `scale * dloss/dparams` into `grad`.
    fn sample_backward<S: SequenceInput>(
        &self,
        s: &S,
        target: f64,
        mask: Option<&[f64]>,
        scale: f64,
        trace: &mut Trace,
        grad: &mut [f64],
    ) -> f64 {
        let l = self.layout();
        let Layout { d, h } = l;
        let hidden = self.forward(s, Some(trace));
        let logit = self.head_logit(&hidden, mask);
        let loss = bce_with_logit(logit, target);
        let dlogit = (sigmoid(logit) - target) * scale;

        let head_w = l.head_w();
        let mut dh = vec![0.0; h];
        for j in 0..h {
            let m = mask.map_or(1.0, |m| m[j]);
            grad[head_w.start + j] += dlogit * hidden[j] * m;
            dh[j] = dlogit * self.params[head_w.start + j] * m;
        }
        grad[l.head_b()] += dlogit;

        let u = &self.params[l.u()];
        let (gw, gu, gb) = (l.w().start, l.u().start, l.b().start);
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        let zeros = vec![0.0; h];
        for t in (0..s.steps()).rev() {
            let gates = &trace.gates[t * 4 * h..(t + 1) * 4 * h];
            let tanh_c = &trace.tanh_cells[t * h..(t + 1) * h];
            let c_prev = if t > 0 { &trace.cells[(t - 1) * h..t * h] } else { &zeros[..] };
            let h_prev = if t > 0 { &trace.hidden[(t - 1) * h..t * h] } else { &zeros[..] };
            for j in 0..h {
                let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                let tc = tanh_c[j];
                let d_o = dh[j] * tc;
                let dc = dc_next[j] + dh[j] * o * (1.0 - tc * tc);
                dc_next[j] = dc * f;
                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - g * g);
                dz[3 * h + j] = d_o * o * (1.0 - o);
            }
            let x = s.step(t);
            for r in 0..4 * h {
                let dzr = dz[r];
                if dzr == 0.0 {
                    continue;
                }
                let row_w = &mut grad[gw + r * d..gw + (r + 1) * d];
                for k in 0..d {
                    row_w[k] += dzr * x[k];
                }
                let row_u = &mut grad[gu + r * h..gu + (r + 1) * h];
                for k in 0..h {
                    row_u[k] += dzr * h_prev[k];
                }
                grad[gb + r] += dzr;
            }
            dh.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..4 * h {
                let dzr = dz[r];
                if dzr == 0.0 {
                    continue;
                }
                let ur = &u[r * h..(r + 1) * h];
                for k in 0..h {
                    dh[k] += ur[k] * dzr;
                }
            }
        }
        loss
    }

    /// Mean binary cross-entropy over `seqs` (dropout disabled) and its
    /// gradient with respect to [`params`](Self::params).
    pub fn loss_and_gradient<S: SequenceInput>(&self, seqs: &[S], y: &[Label]) -> Result<(f64, Vec<f64>)> {
        if seqs.len() != y.len() || seqs.is_empty() {
            return Err(Error::InvalidArgument("need equally many (>= 1) sequences and labels".into()));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut trace = Trace::default();
        let scale = 1.0 / seqs.len() as f64;
        let mut loss = 0.0;
        for (s, label) in seqs.iter().zip(y) {
            self.check_input(s)?;
            loss += self.sample_backward(s, label.target(), None, scale, &mut trace, &mut grad);
        }
        Ok((loss * scale, grad))
    }

    /// Mean loss with dropout disabled.
    pub fn mean_loss<S: SequenceInput>(&self, seqs: &[S], y: &[Label]) -> f64 {
        let total: f64 = seqs
            .iter()
            .zip(y)
            .map(|(s, l)| bce_with_logit(self.head_logit(&self.forward(s, None), None), l.target()))
            .sum();
        total / seqs.len() as f64
    }

    /// Mini-batch gradient descent with norm clipping and early stopping on
    /// the validation loss; returns the parameters of the epoch with the
    /// lowest validation loss.
    pub fn train<S: SequenceInput>(
        train: &[S],
        y: &[Label],
        val: &[S],
        val_y: &[Label],
        hyper: &LstmHyper,
    ) -> Result<Self> {
        if train.len() != y.len() || val.len() != val_y.len() {
            return Err(Error::InvalidArgument("sequence and label counts differ".into()));
        }
        if val.is_empty() {
            return Err(Error::InvalidArgument("validation subset is empty".into()));
        }
        check_both_classes(y)?;
        if hyper.batch_size == 0 || hyper.max_epochs == 0 || !(hyper.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(
                "LSTM needs batch_size >= 1, max_epochs >= 1 and learning_rate > 0".into(),
            ));
        }
        let input_dim = train
            .iter()
            .chain(val)
            .find(|s| s.steps() > 0)
            .map(|s| s.input_dim())
            .ok_or_else(|| Error::InvalidArgument("every sequence is empty".into()))?;
        let mut model = LstmModel::init(input_dim, hyper.hidden_dim, hyper.dropout, hyper.seed)?;
        for s in train.iter().chain(val) {
            model.check_input(s)?;
        }

        let h = hyper.hidden_dim;
        let keep = 1.0 - hyper.dropout;
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut grad = vec![0.0; model.params.len()];
        let mut mask = vec![1.0; h];
        let mut trace = Trace::default();
        let mut meta = LstmTrainingMeta {
            epochs_run: 0,
            best_epoch: 0,
            train_loss: Vec::new(),
            val_loss: Vec::new(),
            learning_rate: hyper.learning_rate,
            batch_size: hyper.batch_size,
            seed: hyper.seed,
            patience: hyper.patience,
            clip_norm: hyper.clip_norm,
        };
        let mut best: Option<(f64, Vec<f64>)> = None;

        for epoch in 1..=hyper.max_epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(hyper.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let scale = 1.0 / batch.len() as f64;
                for &i in batch {
                    for m in mask.iter_mut() {
                        *m = if hyper.dropout > 0.0 && rng.random::<f64>() < hyper.dropout {
                            0.0
                        } else {
                            1.0 / keep
                        };
                    }
                    epoch_loss += model.sample_backward(&train[i], y[i].target(), Some(&mask), scale, &mut trace, &mut grad);
                }
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if !norm.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        loss: epoch_loss,
                    });
                }
                let step = if hyper.clip_norm > 0.0 && norm > hyper.clip_norm {
                    hyper.learning_rate * hyper.clip_norm / norm
                } else {
                    hyper.learning_rate
                };
                for (p, g) in model.params.iter_mut().zip(&grad) {
                    *p -= step * g;
                }
            }
            let train_loss = epoch_loss / train.len() as f64;
            let val_loss = model.mean_loss(val, val_y);
            if !train_loss.is_finite() || !val_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    loss: if train_loss.is_finite() { val_loss } else { train_loss },
                });
            }
            meta.train_loss.push(train_loss);
            meta.val_loss.push(val_loss);
            meta.epochs_run = epoch;
            log::debug!("lstm epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");

            if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
                best = Some((val_loss, model.params.clone()));
                meta.best_epoch = epoch;
            } else if epoch - meta.best_epoch > hyper.patience {
                break;
            }
        }
        let (_, params) = best.expect("at least one epoch ran");
        model.params = params;
        model.meta = Some(meta);
        Ok(model)
    }
}

fn gate_name(block: &str, gate: &str) -> &'static str {
    match (block, gate) {
        ("W", "input") => "W_input",
        ("W", "forget") => "W_forget",
        ("W", "candidate") => "W_candidate",
        ("W", "output") => "W_output",
        ("U", "input") => "U_input",
        ("U", "forget") => "U_forget",
        ("U", "candidate") => "U_candidate",
        ("U", "output") => "U_output",
        ("b", "input") => "b_input",
        ("b", "forget") => "b_forget",
        ("b", "candidate") => "b_candidate",
        _ => "b_output",
    }
}

/// Owned dense sequence, mainly for tests and synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSequence {
    pub data: Vec<f64>,
    pub dim: usize,
}

impl SequenceInput for DenseSequence {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn steps(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    fn step(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }
}
