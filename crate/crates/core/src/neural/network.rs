//! Stacked LSTM over one-hot token inputs with a linear read-out.
//!
//! All weights live in one flat `Vec<f64>` so the optimizer, finite
//! differences and checkpoints can treat the model as a single vector.

use std::io::{Read, Write};

use rand::{Rng, RngCore};

use super::NeuralError;
use crate::lang::Token;

/// Output symbols: every token plus end-of-program.
pub const N_SYMBOLS: usize = Token::COUNT + 1;
/// Index of the end-of-program symbol.
pub const END: usize = Token::COUNT;
/// Inputs: every token plus a start marker fed at the first position.
const N_INPUTS: usize = Token::COUNT + 1;
const START: usize = Token::COUNT;

const MAGIC: &[u8; 8] = b"NGPOLICY";

#[derive(Debug, Clone, Copy)]
struct LayerShape {
    input: usize,
    hidden: usize,
    /// Offset of the `4H x (input + H)` weight matrix, gate rows i, f, g, o.
    w: usize,
    b: usize,
}

impl LayerShape {
    fn cols(&self) -> usize {
        self.input + self.hidden
    }
}

#[derive(Debug, Clone)]
struct Layout {
    layers: Vec<LayerShape>,
    out_w: usize,
    out_b: usize,
    total: usize,
}

impl Layout {
    fn new(widths: &[usize]) -> Self {
        let mut offset = 0;
        let mut input = N_INPUTS;
        let mut layers = Vec::with_capacity(widths.len());
        for &hidden in widths {
            let w = offset;
            offset += 4 * hidden * (input + hidden);
            let b = offset;
            offset += 4 * hidden;
            layers.push(LayerShape { input, hidden, w, b });
            input = hidden;
        }
        let out_w = offset;
        offset += N_SYMBOLS * input;
        let out_b = offset;
        offset += N_SYMBOLS;
        Layout {
            layers,
            out_w,
            out_b,
            total: offset,
        }
    }

    fn top(&self) -> usize {
        self.layers.last().map_or(0, |l| l.hidden)
    }
}

/// Weights of the token policy.
#[derive(Debug, Clone)]
pub struct PolicyParameters {
    widths: Vec<usize>,
    layout: Layout,
    data: Vec<f64>,
}

impl PartialEq for PolicyParameters {
    fn eq(&self, other: &Self) -> bool {
        self.widths == other.widths && self.data == other.data
    }
}

impl PolicyParameters {
    /// Random initialization; `widths` lists hidden sizes bottom to top.
    pub fn new(widths: &[usize], rng: &mut dyn RngCore) -> Result<Self, NeuralError> {
        let mut params = Self::zeros(widths)?;
        let layout = params.layout.clone();
        for l in &layout.layers {
            let scale = 1.0 / (l.hidden as f64).sqrt();
            for v in &mut params.data[l.w..l.b] {
                *v = rng.random_range(-scale..scale);
            }
            // Forget-gate bias starts open.
            for v in &mut params.data[l.b + l.hidden..l.b + 2 * l.hidden] {
                *v = 1.0;
            }
        }
        // Small read-out so the initial policy is close to uniform.
        let scale = 0.1 / (layout.top() as f64).sqrt();
        for v in &mut params.data[layout.out_w..layout.out_b] {
            *v = rng.random_range(-scale..scale);
        }
        Ok(params)
    }

    pub fn zeros(widths: &[usize]) -> Result<Self, NeuralError> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(NeuralError::InvalidShape(widths.to_vec()));
        }
        let layout = Layout::new(widths);
        Ok(PolicyParameters {
            widths: widths.to_vec(),
            data: vec![0.0; layout.total],
            layout,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Mutable view of the read-out bias, one entry per output symbol.
    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        let b = self.layout.out_b;
        &mut self.data[b..b + N_SYMBOLS]
    }

    /// Mutable view of the read-out weight matrix (`N_SYMBOLS` rows).
    pub fn output_weights_mut(&mut self) -> &mut [f64] {
        let (w, b) = (self.layout.out_w, self.layout.out_b);
        &mut self.data[w..b]
    }

    pub fn write_to(&self, out: &mut dyn Write) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.widths.len() as u32).to_le_bytes())?;
        for &w in &self.widths {
            out.write_all(&(w as u32).to_le_bytes())?;
        }
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(input: &mut dyn Read) -> Result<Self, NeuralError> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NeuralError::BadCheckpoint("wrong magic".into()));
        }
        let read_u32 = |input: &mut dyn Read| -> Result<u32, NeuralError> {
            let mut b = [0u8; 4];
            input.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let n = read_u32(input)? as usize;
        if n == 0 || n > 64 {
            return Err(NeuralError::BadCheckpoint(format!("{n} layers")));
        }
        let widths = (0..n)
            .map(|_| read_u32(input).map(|w| w as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let mut params = Self::zeros(&widths)?;
        let mut b = [0u8; 8];
        for v in &mut params.data {
            input.read_exact(&mut b)?;
            *v = f64::from_le_bytes(b);
        }
        let mut rest = Vec::new();
        input.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(NeuralError::BadCheckpoint("trailing bytes".into()));
        }
        Ok(params)
    }
}

/// Activations of one layer at one position, kept for back-propagation.
#[derive(Debug, Clone)]
struct CellCache {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-activation gates `[i, f, g, o]`, each `hidden` long.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Running state of the network while it reads a sequence.
#[derive(Debug, Clone)]
pub(crate) struct Cursor {
    h: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl PolicyParameters {
    pub(crate) fn start(&self) -> Cursor {
        Cursor {
            h: self.layout.layers.iter().map(|l| vec![0.0; l.hidden]).collect(),
            c: self.layout.layers.iter().map(|l| vec![0.0; l.hidden]).collect(),
        }
    }

    /// Feed one input symbol and return the output logits. When `cache` is
    /// given, the per-layer activations are appended to it.
    fn advance(&self, cursor: &mut Cursor, input: usize, mut cache: Option<&mut Vec<CellCache>>) -> Vec<f64> {
        let mut below: Option<Vec<f64>> = None;
        for (li, l) in self.layout.layers.iter().enumerate() {
            let h = l.hidden;
            let cols = l.cols();
            let w = &self.data[l.w..l.b];
            let mut z = self.data[l.b..l.b + 4 * h].to_vec();
            let h_prev = std::mem::take(&mut cursor.h[li]);
            let c_prev = std::mem::take(&mut cursor.c[li]);
            for (r, zr) in z.iter_mut().enumerate() {
                let row = &w[r * cols..(r + 1) * cols];
                let mut acc = match &below {
                    None => row[input],
                    Some(x) => dot(&row[..l.input], x),
                };
                acc += dot(&row[l.input..], &h_prev);
                *zr += acc;
            }
            let mut gates = z;
            for k in 0..h {
                gates[k] = sigmoid(gates[k]);
                gates[h + k] = sigmoid(gates[h + k]);
                gates[2 * h + k] = gates[2 * h + k].tanh();
                gates[3 * h + k] = sigmoid(gates[3 * h + k]);
            }
            let mut c = vec![0.0; h];
            let mut tanh_c = vec![0.0; h];
            let mut h_new = vec![0.0; h];
            for k in 0..h {
                c[k] = gates[h + k] * c_prev[k] + gates[k] * gates[2 * h + k];
                tanh_c[k] = c[k].tanh();
                h_new[k] = gates[3 * h + k] * tanh_c[k];
            }
            if let Some(cache) = cache.as_deref_mut() {
                cache.push(CellCache {
                    h_prev,
                    c_prev,
                    gates,
                    tanh_c,
                });
            }
            cursor.c[li] = c;
            cursor.h[li] = h_new.clone();
            below = Some(h_new);
        }
        let top = below.expect("at least one layer");
        let ow = &self.data[self.layout.out_w..self.layout.out_b];
        let ob = &self.data[self.layout.out_b..self.layout.out_b + N_SYMBOLS];
        (0..N_SYMBOLS)
            .map(|s| ob[s] + dot(&ow[s * top.len()..(s + 1) * top.len()], &top))
            .collect()
    }

    /// Step the cursor with `input` and return the log-probabilities of the
    /// next symbol.
    pub(crate) fn next_log_probs(&self, cursor: &mut Cursor, input: Option<usize>) -> Vec<f64> {
        log_softmax(&self.advance(cursor, input.unwrap_or(START), None))
    }

    /// Teacher-forced pass over `targets`, then back-propagation.
    ///
    /// For each position `t` the caller's `dlogits(t, log_probs)` returns the
    /// gradient of the objective with respect to that position's logits;
    /// parameter gradients are added into `grad`.
    pub(crate) fn backprop(
        &self,
        targets: &[usize],
        grad: &mut [f64],
        mut dlogits: impl FnMut(usize, &[f64]) -> Vec<f64>,
    ) {
        let n_layers = self.layout.layers.len();
        let mut cursor = self.start();
        let mut caches: Vec<Vec<CellCache>> = Vec::with_capacity(targets.len());
        let mut tops: Vec<Vec<f64>> = Vec::with_capacity(targets.len());
        let mut douts: Vec<Vec<f64>> = Vec::with_capacity(targets.len());
        let mut inputs = Vec::with_capacity(targets.len());
        for t in 0..targets.len() {
            let input = if t == 0 { START } else { targets[t - 1] };
            inputs.push(input);
            let mut cache = Vec::with_capacity(n_layers);
            let logits = self.advance(&mut cursor, input, Some(&mut cache));
            tops.push(cursor.h[n_layers - 1].clone());
            douts.push(dlogits(t, &log_softmax(&logits)));
            caches.push(cache);
        }

        let top = self.layout.top();
        let (ow, ob) = (self.layout.out_w, self.layout.out_b);
        // Gradient flowing into each layer's hidden output, per position.
        let mut dh_in: Vec<Vec<f64>> = vec![vec![0.0; top]; targets.len()];
        for t in 0..targets.len() {
            for s in 0..N_SYMBOLS {
                let d = douts[t][s];
                if d == 0.0 {
                    continue;
                }
                grad[ob + s] += d;
                let row = ow + s * top;
                for k in 0..top {
                    grad[row + k] += d * tops[t][k];
                    dh_in[t][k] += d * self.data[row + k];
                }
            }
        }

        for li in (0..n_layers).rev() {
            let l = self.layout.layers[li];
            let h = l.hidden;
            let cols = l.cols();
            let mut dh_next = vec![0.0; h];
            let mut dc_next = vec![0.0; h];
            let mut dx_all: Vec<Vec<f64>> = vec![vec![0.0; l.input]; targets.len()];
            for t in (0..targets.len()).rev() {
                let cc = &caches[t][li];
                let g = &cc.gates;
                let mut dz = vec![0.0; 4 * h];
                for k in 0..h {
                    let dh = dh_in[t][k] + dh_next[k];
                    let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                    let dc = dh * o * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]) + dc_next[k];
                    dz[k] = dc * gg * i * (1.0 - i);
                    dz[h + k] = dc * cc.c_prev[k] * f * (1.0 - f);
                    dz[2 * h + k] = dc * i * (1.0 - gg * gg);
                    dz[3 * h + k] = dh * cc.tanh_c[k] * o * (1.0 - o);
                    dc_next[k] = dc * f;
                }
                dh_next.iter_mut().for_each(|v| *v = 0.0);
                let below = if li == 0 { None } else { Some(&caches[t][li - 1]) };
                // Hidden output of the layer below at this position.
                let x_below: Option<Vec<f64>> = below.map(|_| {
                    if t + 1 < targets.len() {
                        caches[t + 1][li - 1].h_prev.clone()
                    } else {
                        cursor.h[li - 1].clone()
                    }
                });
                for (r, &d) in dz.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grad[l.b + r] += d;
                    let row = l.w + r * cols;
                    match &x_below {
                        None => grad[row + inputs[t]] += d,
                        Some(x) => {
                            for k in 0..l.input {
                                grad[row + k] += d * x[k];
                                dx_all[t][k] += d * self.data[row + k];
                            }
                        }
                    }
                    for k in 0..h {
                        grad[row + l.input + k] += d * cc.h_prev[k];
                        dh_next[k] += d * self.data[row + l.input + k];
                    }
                }
            }
            if li > 0 {
                dh_in = dx_all;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}
