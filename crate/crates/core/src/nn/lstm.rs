//! Single-layer LSTM with backpropagation through time.
//!
//! Gate pre-activations are `W [h(t-1), x(t)] + b` with the four gate blocks
//! stacked in the order forget, input, output, candidate.

use rand::Rng;

use super::{sigmoid, Tensor};
use crate::error::{Error, Result};

const FORGET: usize = 0;
const INPUT: usize = 1;
const OUTPUT: usize = 2;
const CANDIDATE: usize = 3;

/// Weights `(4 * units, units + inputs)`, bias `(4 * units)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Everything the backward pass needs from one cell evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GateCache {
    /// `[h(t-1), x(t)]`
    pub concat: Vec<f64>,
    pub forget: Vec<f64>,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub candidate: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

impl LstmParams {
    pub fn new(weights: Tensor, bias: Tensor) -> Result<Self> {
        weights.expect_rank(2, "lstm weights")?;
        bias.expect_rank(1, "lstm bias")?;
        let rows = weights.dim(0);
        if !rows.is_multiple_of(4) || rows == 0 || bias.dim(0) != rows || weights.dim(1) <= rows / 4 {
            return Err(Error::ShapeMismatch(format!(
                "lstm weights {:?} and bias {:?} are inconsistent",
                weights.shape(),
                bias.shape()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(units: usize, inputs: usize) -> Self {
        Self {
            weights: Tensor::zeros(&[4 * units, units + inputs]),
            bias: Tensor::zeros(&[4 * units]),
        }
    }

    pub fn init(units: usize, inputs: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (units + inputs + units) as f64).sqrt();
        Self {
            weights: Tensor::uniform(&[4 * units, units + inputs], limit, rng),
            bias: Tensor::zeros(&[4 * units]),
        }
    }

    pub fn units(&self) -> usize {
        self.weights.dim(0) / 4
    }

    pub fn inputs(&self) -> usize {
        self.weights.dim(1) - self.units()
    }
}

/// One time step. Returns `(h(t), c(t), cache)`.
pub fn lstm_cell_forward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    params: &LstmParams,
) -> Result<(Vec<f64>, Vec<f64>, GateCache)> {
    let units = params.units();
    let inputs = params.inputs();
    if x.len() != inputs || h_prev.len() != units || c_prev.len() != units {
        return Err(Error::ShapeMismatch(format!(
            "lstm cell expects x[{inputs}], h[{units}], c[{units}]; got x[{}], h[{}], c[{}]",
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let cols = units + inputs;
    let mut concat = Vec::with_capacity(cols);
    concat.extend_from_slice(h_prev);
    concat.extend_from_slice(x);

    let w = params.weights.data();
    let b = params.bias.data();
    let mut pre = vec![0.0; 4 * units];
    for (r, p) in pre.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *p = b[r] + row.iter().zip(&concat).map(|(a, c)| a * c).sum::<f64>();
    }
    let gate = |g: usize| &pre[g * units..(g + 1) * units];
    let forget: Vec<f64> = gate(FORGET).iter().map(|&v| sigmoid(v)).collect();
    let input: Vec<f64> = gate(INPUT).iter().map(|&v| sigmoid(v)).collect();
    let output: Vec<f64> = gate(OUTPUT).iter().map(|&v| sigmoid(v)).collect();
    let candidate: Vec<f64> = gate(CANDIDATE).iter().map(|v| v.tanh()).collect();

    let c: Vec<f64> = (0..units)
        .map(|u| forget[u] * c_prev[u] + input[u] * candidate[u])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..units).map(|u| output[u] * tanh_c[u]).collect();

    let cache = GateCache {
        concat,
        forget,
        input,
        output,
        candidate,
        c_prev: c_prev.to_vec(),
        c: c.clone(),
        tanh_c,
    };
    Ok((h, c, cache))
}

/// Forward pass over `(batch, steps, inputs)` from zero state; returns the
/// final hidden state `(batch, units)` and the per-sample, per-step caches.
pub fn lstm_forward(input: &Tensor, params: &LstmParams) -> Result<(Tensor, Vec<Vec<GateCache>>)> {
    input.expect_rank(3, "lstm input")?;
    let (batch, steps, nin) = (input.dim(0), input.dim(1), input.dim(2));
    let units = params.units();
    let x = input.data();
    let mut out = Vec::with_capacity(batch * units);
    let mut caches = Vec::with_capacity(batch);
    for n in 0..batch {
        let mut h = vec![0.0; units];
        let mut c = vec![0.0; units];
        let mut seq = Vec::with_capacity(steps);
        for t in 0..steps {
            let xt = &x[(n * steps + t) * nin..(n * steps + t + 1) * nin];
            let (h2, c2, cache) = lstm_cell_forward(xt, &h, &c, params)?;
            h = h2;
            c = c2;
            seq.push(cache);
        }
        out.extend_from_slice(&h);
        caches.push(seq);
    }
    Ok((Tensor::new(vec![batch, units], out)?, caches))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrads {
    pub weights: Tensor,
    pub bias: Tensor,
    /// `(batch, steps, inputs)`
    pub input: Tensor,
}

/// Backpropagation through time from a gradient on the final hidden state.
pub fn lstm_backward(
    params: &LstmParams,
    caches: &[Vec<GateCache>],
    grad_h_final: &Tensor,
) -> Result<LstmGrads> {
    let units = params.units();
    let nin = params.inputs();
    let cols = units + nin;
    let batch = caches.len();
    if grad_h_final.shape() != [batch, units] {
        return Err(Error::ShapeMismatch("lstm upstream gradient".into()));
    }
    let steps = caches.first().map_or(0, |s| s.len());
    if steps == 0 {
        return Err(Error::InvalidArgument("missing forward cache".into()));
    }
    let w = params.weights.data();
    let mut dw = vec![0.0; w.len()];
    let mut db = vec![0.0; 4 * units];
    let mut dx = vec![0.0; batch * steps * nin];
    let mut da = vec![0.0; 4 * units];

    for (n, seq) in caches.iter().enumerate() {
        let mut dh: Vec<f64> = grad_h_final.data()[n * units..(n + 1) * units].to_vec();
        let mut dc = vec![0.0; units];
        for t in (0..steps).rev() {
            let g = &seq[t];
            for u in 0..units {
                let d_out = dh[u] * g.tanh_c[u];
                dc[u] += dh[u] * g.output[u] * (1.0 - g.tanh_c[u] * g.tanh_c[u]);
                let d_forget = dc[u] * g.c_prev[u];
                let d_input = dc[u] * g.candidate[u];
                let d_cand = dc[u] * g.input[u];
                da[FORGET * units + u] = d_forget * g.forget[u] * (1.0 - g.forget[u]);
                da[INPUT * units + u] = d_input * g.input[u] * (1.0 - g.input[u]);
                da[OUTPUT * units + u] = d_out * g.output[u] * (1.0 - g.output[u]);
                da[CANDIDATE * units + u] = d_cand * (1.0 - g.candidate[u] * g.candidate[u]);
                dc[u] *= g.forget[u];
            }
            let mut dconcat = vec![0.0; cols];
            for (r, &a) in da.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                db[r] += a;
                let row = &w[r * cols..(r + 1) * cols];
                let drow = &mut dw[r * cols..(r + 1) * cols];
                for j in 0..cols {
                    drow[j] += a * g.concat[j];
                    dconcat[j] += a * row[j];
                }
            }
            dh.copy_from_slice(&dconcat[..units]);
            dx[(n * steps + t) * nin..(n * steps + t + 1) * nin].copy_from_slice(&dconcat[units..]);
        }
    }
    Ok(LstmGrads {
        weights: Tensor::new(params.weights.shape().to_vec(), dw)?,
        bias: Tensor::new(vec![4 * units], db)?,
        input: Tensor::new(vec![batch, steps, nin], dx)?,
    })
}
