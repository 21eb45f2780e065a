//! Convolution, pooling and fully connected layers with their backward
//! passes.

use rand::Rng;

use super::{Activation, Tensor};
use crate::error::{Error, Result};

fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Valid (unpadded) 1-D convolution with a fused activation.
///
/// Weights are `(kernels, in_channels, kernel_size)`, bias `(kernels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub weights: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct Conv1dCache {
    input: Tensor,
    pre: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dGrads {
    pub weights: Tensor,
    pub bias: Tensor,
    pub input: Tensor,
}

impl Conv1d {
    pub fn new(weights: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        weights.expect_rank(3, "conv weights")?;
        bias.expect_rank(1, "conv bias")?;
        if bias.dim(0) != weights.dim(0) {
            return Err(Error::ShapeMismatch(format!(
                "{} kernels but {} biases",
                weights.dim(0),
                bias.dim(0)
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn init(
        kernels: usize,
        in_channels: usize,
        kernel_size: usize,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        let limit = glorot_limit(in_channels * kernel_size, kernels * kernel_size);
        Self {
            weights: Tensor::uniform(&[kernels, in_channels, kernel_size], limit, rng),
            bias: Tensor::zeros(&[kernels]),
            activation,
        }
    }

    pub fn kernels(&self) -> usize {
        self.weights.dim(0)
    }

    pub fn kernel_size(&self) -> usize {
        self.weights.dim(2)
    }

    /// `(batch, length, in_channels)` to `(batch, length - k + 1, kernels)`.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, Conv1dCache)> {
        input.expect_rank(3, "conv input")?;
        let (batch, len, cin) = (input.dim(0), input.dim(1), input.dim(2));
        let (kout, wcin, ks) = (self.weights.dim(0), self.weights.dim(1), self.weights.dim(2));
        if cin != wcin {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {wcin} input channels, got {cin}"
            )));
        }
        if ks > len {
            return Err(Error::ShapeMismatch(format!(
                "kernel of size {ks} is longer than the input ({len})"
            )));
        }
        let out_len = len - ks + 1;
        let x = input.data();
        let w = self.weights.data();
        let b = self.bias.data();
        let mut pre = vec![0.0; batch * out_len * kout];
        for n in 0..batch {
            for t in 0..out_len {
                for k in 0..kout {
                    let mut s = b[k];
                    for c in 0..cin {
                        for j in 0..ks {
                            s += w[(k * cin + c) * ks + j] * x[(n * len + t + j) * cin + c];
                        }
                    }
                    pre[(n * out_len + t) * kout + k] = s;
                }
            }
        }
        let pre = Tensor::new(vec![batch, out_len, kout], pre)?;
        let out = pre.map(|v| self.activation.apply(v));
        Ok((
            out,
            Conv1dCache {
                input: input.clone(),
                pre,
            },
        ))
    }

    pub fn backward(&self, cache: &Conv1dCache, grad_out: &Tensor) -> Result<Conv1dGrads> {
        if grad_out.shape() != cache.pre.shape() {
            return Err(Error::ShapeMismatch("conv upstream gradient".into()));
        }
        let input = &cache.input;
        let (batch, len, cin) = (input.dim(0), input.dim(1), input.dim(2));
        let (kout, ks) = (self.kernels(), self.kernel_size());
        let out_len = len - ks + 1;
        let x = input.data();
        let w = self.weights.data();
        let dpre: Vec<f64> = grad_out
            .data()
            .iter()
            .zip(cache.pre.data())
            .map(|(g, p)| g * self.activation.derivative(*p))
            .collect();
        let mut dw = vec![0.0; w.len()];
        let mut db = vec![0.0; kout];
        let mut dx = vec![0.0; x.len()];
        for n in 0..batch {
            for t in 0..out_len {
                for k in 0..kout {
                    let g = dpre[(n * out_len + t) * kout + k];
                    if g == 0.0 {
                        continue;
                    }
                    db[k] += g;
                    for c in 0..cin {
                        for j in 0..ks {
                            let xi = (n * len + t + j) * cin + c;
                            let wi = (k * cin + c) * ks + j;
                            dw[wi] += g * x[xi];
                            dx[xi] += g * w[wi];
                        }
                    }
                }
            }
        }
        Ok(Conv1dGrads {
            weights: Tensor::new(self.weights.shape().to_vec(), dw)?,
            bias: Tensor::new(vec![kout], db)?,
            input: Tensor::new(input.shape().to_vec(), dx)?,
        })
    }
}

/// Non-overlapping window means along the length axis; trailing samples
/// that do not fill a window are dropped.
pub fn avg_pool(input: &Tensor, size: usize) -> Result<Tensor> {
    input.expect_rank(3, "pool input")?;
    if size == 0 {
        return Err(Error::InvalidArgument("pool size must be at least 1".into()));
    }
    let (batch, len, ch) = (input.dim(0), input.dim(1), input.dim(2));
    let out_len = len / size;
    let x = input.data();
    let mut out = vec![0.0; batch * out_len * ch];
    for n in 0..batch {
        for t in 0..out_len {
            for c in 0..ch {
                let s: f64 = (0..size).map(|j| x[(n * len + t * size + j) * ch + c]).sum();
                out[(n * out_len + t) * ch + c] = s / size as f64;
            }
        }
    }
    Tensor::new(vec![batch, out_len, ch], out)
}

/// Gradient of [`avg_pool`] with respect to its input.
pub fn avg_pool_backward(input_shape: &[usize], size: usize, grad_out: &Tensor) -> Result<Tensor> {
    let (batch, len, ch) = (input_shape[0], input_shape[1], input_shape[2]);
    let out_len = len / size;
    if grad_out.shape() != [batch, out_len, ch] {
        return Err(Error::ShapeMismatch("pool upstream gradient".into()));
    }
    let g = grad_out.data();
    let mut dx = vec![0.0; batch * len * ch];
    for n in 0..batch {
        for t in 0..out_len {
            for c in 0..ch {
                let v = g[(n * out_len + t) * ch + c] / size as f64;
                for j in 0..size {
                    dx[(n * len + t * size + j) * ch + c] = v;
                }
            }
        }
    }
    Tensor::new(input_shape.to_vec(), dx)
}

/// Affine map plus activation. Weights are `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Tensor,
    pre: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Tensor,
    pub bias: Tensor,
    pub input: Tensor,
}

impl Dense {
    pub fn new(weights: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        weights.expect_rank(2, "dense weights")?;
        bias.expect_rank(1, "dense bias")?;
        if bias.dim(0) != weights.dim(0) {
            return Err(Error::ShapeMismatch("dense bias length".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        Self {
            weights: Tensor::uniform(&[outputs, inputs], glorot_limit(inputs, outputs), rng),
            bias: Tensor::zeros(&[outputs]),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.dim(1)
    }

    pub fn outputs(&self) -> usize {
        self.weights.dim(0)
    }

    /// `(batch, in)` to `(batch, out)`.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, DenseCache)> {
        input.expect_rank(2, "dense input")?;
        let (batch, nin) = (input.dim(0), input.dim(1));
        if nin != self.inputs() {
            return Err(Error::ShapeMismatch(format!(
                "dense expects {} inputs, got {nin}",
                self.inputs()
            )));
        }
        let nout = self.outputs();
        let x = input.data();
        let w = self.weights.data();
        let b = self.bias.data();
        let mut pre = vec![0.0; batch * nout];
        for n in 0..batch {
            let xr = &x[n * nin..(n + 1) * nin];
            for o in 0..nout {
                let wr = &w[o * nin..(o + 1) * nin];
                pre[n * nout + o] = b[o] + wr.iter().zip(xr).map(|(a, c)| a * c).sum::<f64>();
            }
        }
        let pre = Tensor::new(vec![batch, nout], pre)?;
        let out = pre.map(|v| self.activation.apply(v));
        Ok((
            out,
            DenseCache {
                input: input.clone(),
                pre,
            },
        ))
    }

    pub fn backward(&self, cache: &DenseCache, grad_out: &Tensor) -> Result<DenseGrads> {
        if grad_out.shape() != cache.pre.shape() {
            return Err(Error::ShapeMismatch("dense upstream gradient".into()));
        }
        let (batch, nin, nout) = (cache.input.dim(0), self.inputs(), self.outputs());
        let x = cache.input.data();
        let w = self.weights.data();
        let mut dw = vec![0.0; w.len()];
        let mut db = vec![0.0; nout];
        let mut dx = vec![0.0; x.len()];
        for n in 0..batch {
            for o in 0..nout {
                let g = grad_out.data()[n * nout + o]
                    * self.activation.derivative(cache.pre.data()[n * nout + o]);
                if g == 0.0 {
                    continue;
                }
                db[o] += g;
                for i in 0..nin {
                    dw[o * nin + i] += g * x[n * nin + i];
                    dx[n * nin + i] += g * w[o * nin + i];
                }
            }
        }
        Ok(DenseGrads {
            weights: Tensor::new(vec![nout, nin], dw)?,
            bias: Tensor::new(vec![nout], db)?,
            input: Tensor::new(vec![batch, nin], dx)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn conv_hand_cases() {
        let conv = Conv1d::new(t(&[1, 1, 2], &[1.0, 0.0]), t(&[1], &[0.0]), Activation::Identity).unwrap();
        let (out, _) = conv.forward(&t(&[1, 4, 1], &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(out.shape(), &[1, 3, 1]);
        assert_eq!(out.data(), &[1.0, 2.0, 3.0]);

        for act in [Activation::Identity, Activation::Relu] {
            for b in [-1.5, 2.0] {
                let conv = Conv1d::new(t(&[1, 1, 2], &[0.0, 0.0]), t(&[1], &[b]), act).unwrap();
                let (out, _) = conv.forward(&t(&[1, 4, 1], &[1.0, -2.0, 3.0, 4.0])).unwrap();
                assert!(out.data().iter().all(|&v| v == act.apply(b)));
            }
        }
    }

    #[test]
    fn conv_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (batch, len, cin, kout, ks) = (3, 6, 2, 5, rng.random_range(1..=4));
            let conv = Conv1d::init(kout, cin, ks, Activation::Identity, &mut rng);
            let mut conv = conv;
            conv.bias = Tensor::uniform(&[kout], 1.0, &mut rng);
            let x = Tensor::uniform(&[batch, len, cin], 2.0, &mut rng);
            let (out, _) = conv.forward(&x).unwrap();
            // oracle: explicit 5-deep index arithmetic on nested vectors
            let xv: Vec<Vec<Vec<f64>>> = (0..batch)
                .map(|n| (0..len).map(|i| (0..cin).map(|c| x.data()[(n * len + i) * cin + c]).collect()).collect())
                .collect();
            for n in 0..batch {
                for tt in 0..len - ks + 1 {
                    for k in 0..kout {
                        let mut s = conv.bias.data()[k];
                        for j in 0..ks {
                            for c in 0..cin {
                                s += conv.weights.data()[k * cin * ks + c * ks + j] * xv[n][tt + j][c];
                            }
                        }
                        let got = out.data()[(n * (len - ks + 1) + tt) * kout + k];
                        assert!((got - s).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn conv_kernel_too_long() {
        let conv = Conv1d::new(t(&[1, 1, 5], &[0.0; 5]), t(&[1], &[0.0]), Activation::Relu).unwrap();
        assert!(conv.forward(&t(&[1, 4, 1], &[0.0; 4])).is_err());
    }

    #[test]
    fn pool_cases() {
        let x = t(&[1, 4, 1], &[2.0, 4.0, 6.0, 8.0]);
        assert_eq!(avg_pool(&x, 1).unwrap(), x);
        assert_eq!(avg_pool(&x, 2).unwrap().data(), &[3.0, 7.0]);
        assert!(avg_pool(&x, 0).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Tensor::uniform(&[2, 7, 3], 1.0, &mut rng);
        let out = avg_pool(&x, 2).unwrap();
        assert_eq!(out.shape(), &[2, 3, 3]);
        for n in 0..2 {
            for i in 0..3 {
                for c in 0..3 {
                    let a = x.data()[(n * 7 + 2 * i) * 3 + c];
                    let b = x.data()[(n * 7 + 2 * i + 1) * 3 + c];
                    assert!((out.data()[(n * 3 + i) * 3 + c] - (a + b) / 2.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dense_cases() {
        let eye = Dense::new(t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]), t(&[2], &[0.0, 0.0]), Activation::Identity).unwrap();
        let x = t(&[1, 2], &[3.0, -4.0]);
        assert_eq!(eye.forward(&x).unwrap().0, x);
        let zero = Dense::new(t(&[1, 2], &[0.0, 0.0]), t(&[1], &[2.5]), Activation::Identity).unwrap();
        assert_eq!(zero.forward(&x).unwrap().0.data(), &[2.5]);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut d = Dense::init(5, 3, Activation::Identity, &mut rng);
        d.bias = Tensor::uniform(&[3], 1.0, &mut rng);
        let x = Tensor::uniform(&[4, 5], 1.0, &mut rng);
        let (y, _) = d.forward(&x).unwrap();
        for n in 0..4 {
            for o in 0..3 {
                let mut s = d.bias.data()[o];
                for i in 0..5 {
                    s += d.weights.data()[o * 5 + i] * x.data()[n * 5 + i];
                }
                assert!((y.data()[n * 3 + o] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let conv = Conv1d::init(4, 1, 2, Activation::Relu, &mut rng);
        let x = Tensor::uniform(&[3, 4, 1], 1.0, &mut rng);
        let (out, cache) = conv.forward(&x).unwrap();
        let g = conv.backward(&cache, &Tensor::zeros_like(&out)).unwrap();
        assert!(g.weights.data().iter().chain(g.bias.data()).chain(g.input.data()).all(|&v| v == 0.0));

        let d = Dense::init(3, 2, Activation::Relu, &mut rng);
        let x = Tensor::uniform(&[2, 3], 1.0, &mut rng);
        let (out, cache) = d.forward(&x).unwrap();
        let g = d.backward(&cache, &Tensor::zeros_like(&out)).unwrap();
        assert!(g.weights.data().iter().chain(g.bias.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn relu_blocks_negative_preactivation() {
        // single unit with negative pre-activation: no gradient flows
        let d = Dense::new(t(&[1, 1], &[1.0]), t(&[1], &[-5.0]), Activation::Relu).unwrap();
        let (out, cache) = d.forward(&t(&[1, 1], &[2.0])).unwrap();
        assert_eq!(out.data(), &[0.0]);
        let g = d.backward(&cache, &t(&[1, 1], &[1.0])).unwrap();
        assert_eq!(g.weights.data(), &[0.0]);
        assert_eq!(g.bias.data(), &[0.0]);
        assert_eq!(g.input.data(), &[0.0]);
    }
}
