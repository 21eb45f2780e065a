//! Central-difference gradient checks for every layer and for both full
//! networks. Shared by the core test suite and the acceptance run.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solarcast_core::nn::{
    avg_pool, avg_pool_backward, lstm_backward, lstm_forward, Activation, CnnNet, Conv1d, ConvSpec, Dense, LstmNet,
    LstmParams, LstmSpec, Network, Tensor, WINDOW_LEN,
};

pub const STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const MIN_ANALYTIC: f64 = 1e-6;

#[derive(Debug, Default)]
pub struct GradReport {
    pub configs: usize,
    pub checked: usize,
    /// Entries whose finite difference straddles a ReLU kink.
    pub kinks: usize,
    pub worst_rel: f64,
    pub failures: Vec<String>,
}

impl GradReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(&mut self, other: GradReport) {
        self.configs += other.configs;
        self.checked += other.checked;
        self.kinks += other.kinks;
        self.worst_rel = self.worst_rel.max(other.worst_rel);
        self.failures.extend(other.failures);
    }
}

fn central(tensors: &mut [Tensor], t: usize, i: usize, h: f64, loss: &impl Fn(&[Tensor]) -> f64) -> f64 {
    let v = tensors[t].data()[i];
    tensors[t].data_mut()[i] = v + h;
    let lp = loss(tensors);
    tensors[t].data_mut()[i] = v - h;
    let lm = loss(tensors);
    tensors[t].data_mut()[i] = v;
    (lp - lm) / (2.0 * h)
}

/// Compares `analytic[t]` with central differences of `loss` for every
/// element of every tensor in `tensors`.
pub fn check_tensors(
    report: &mut GradReport,
    label: &str,
    tensors: &mut [Tensor],
    analytic: &[Tensor],
    loss: impl Fn(&[Tensor]) -> f64,
) {
    assert_eq!(tensors.len(), analytic.len(), "{label}: gradient count");
    for t in 0..tensors.len() {
        assert_eq!(tensors[t].shape(), analytic[t].shape(), "{label}: gradient shape {t}");
        for i in 0..tensors[t].len() {
            let a = analytic[t].data()[i];
            let n = central(tensors, t, i, STEP, &loss);
            let n_fine = central(tensors, t, i, STEP / 10.0, &loss);
            if (n - n_fine).abs() > 1e-6 * n.abs().max(1.0) {
                report.kinks += 1;
                continue;
            }
            report.checked += 1;
            if a.abs() > MIN_ANALYTIC {
                let rel = (a - n).abs() / a.abs().max(n.abs());
                report.worst_rel = report.worst_rel.max(rel);
                if rel >= REL_TOL {
                    report.failures.push(format!("{label}: tensor {t}[{i}] analytic {a:e} numeric {n:e}"));
                }
            } else if n.abs() > 10.0 * MIN_ANALYTIC {
                report.failures.push(format!("{label}: tensor {t}[{i}] analytic {a:e} numeric {n:e}"));
            }
        }
    }
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn activation(rng: &mut ChaCha8Rng) -> Activation {
    if rng.random_bool(0.5) {
        Activation::Relu
    } else {
        Activation::Identity
    }
}

fn check_conv(rng: &mut ChaCha8Rng, report: &mut GradReport, k: usize) {
    let batch = rng.random_range(1..=3);
    let len = rng.random_range(1..=8);
    let cin = rng.random_range(1..=3);
    let kernels = rng.random_range(1..=5);
    let ks = rng.random_range(1..=len);
    let act = activation(rng);
    let x = Tensor::uniform(&[batch, len, cin], 1.0, rng);
    let w = Tensor::uniform(&[kernels, cin, ks], 1.0, rng);
    let b = Tensor::uniform(&[kernels], 0.5, rng);
    let g = Tensor::uniform(&[batch, len - ks + 1, kernels], 1.0, rng);
    let layer = Conv1d::new(w.clone(), b.clone(), act).unwrap();
    let (_, cache) = layer.forward(&x).unwrap();
    let gr = layer.backward(&cache, &g).unwrap();
    let mut tensors = vec![w, b, x];
    check_tensors(report, &format!("conv1d #{k}"), &mut tensors, &[gr.weights, gr.bias, gr.input], |t| {
        let l = Conv1d::new(t[0].clone(), t[1].clone(), act).unwrap();
        dot(&l.forward(&t[2]).unwrap().0, &g)
    });
    report.configs += 1;
}

fn check_pool(rng: &mut ChaCha8Rng, report: &mut GradReport, k: usize) {
    let batch = rng.random_range(1..=3);
    let len = rng.random_range(1..=9);
    let ch = rng.random_range(1..=4);
    let size = rng.random_range(1..=len);
    let x = Tensor::uniform(&[batch, len, ch], 1.0, rng);
    let g = Tensor::uniform(&[batch, len / size, ch], 1.0, rng);
    let gi = avg_pool_backward(x.shape(), size, &g).unwrap();
    let mut tensors = vec![x];
    check_tensors(report, &format!("avg_pool #{k}"), &mut tensors, &[gi], |t| {
        dot(&avg_pool(&t[0], size).unwrap(), &g)
    });
    report.configs += 1;
}

fn check_dense(rng: &mut ChaCha8Rng, report: &mut GradReport, k: usize) {
    let batch = rng.random_range(1..=4);
    let nin = rng.random_range(1..=8);
    let nout = rng.random_range(1..=6);
    let act = activation(rng);
    let x = Tensor::uniform(&[batch, nin], 1.0, rng);
    let w = Tensor::uniform(&[nout, nin], 1.0, rng);
    let b = Tensor::uniform(&[nout], 0.5, rng);
    let g = Tensor::uniform(&[batch, nout], 1.0, rng);
    let layer = Dense::new(w.clone(), b.clone(), act).unwrap();
    let (_, cache) = layer.forward(&x).unwrap();
    let gr = layer.backward(&cache, &g).unwrap();
    let mut tensors = vec![w, b, x];
    check_tensors(report, &format!("dense #{k}"), &mut tensors, &[gr.weights, gr.bias, gr.input], |t| {
        let l = Dense::new(t[0].clone(), t[1].clone(), act).unwrap();
        dot(&l.forward(&t[2]).unwrap().0, &g)
    });
    report.configs += 1;
}

fn check_lstm(rng: &mut ChaCha8Rng, report: &mut GradReport, k: usize) {
    let batch = rng.random_range(1..=3);
    let steps = rng.random_range(1..=5);
    let nin = rng.random_range(1..=3);
    let units = rng.random_range(1..=5);
    let x = Tensor::uniform(&[batch, steps, nin], 1.0, rng);
    let w = Tensor::uniform(&[4 * units, units + nin], 0.8, rng);
    let b = Tensor::uniform(&[4 * units], 0.5, rng);
    let g = Tensor::uniform(&[batch, units], 1.0, rng);
    let params = LstmParams::new(w.clone(), b.clone()).unwrap();
    let (_, caches) = lstm_forward(&x, &params).unwrap();
    let gr = lstm_backward(&params, &caches, &g).unwrap();
    let mut tensors = vec![w, b, x];
    check_tensors(report, &format!("lstm #{k}"), &mut tensors, &[gr.weights, gr.bias, gr.input], |t| {
        let p = LstmParams::new(t[0].clone(), t[1].clone()).unwrap();
        dot(&lstm_forward(&t[2], &p).unwrap().0, &g)
    });
    report.configs += 1;
}

fn check_network(net: Network, rng: &mut ChaCha8Rng, report: &mut GradReport, label: &str) {
    let batch = rng.random_range(1..=6);
    let x = Tensor::uniform(&[batch, WINDOW_LEN, 1], 1.5, rng);
    let targets: Vec<f64> = (0..batch).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (_, pg, ig) = net.loss_and_grads(&x, &targets).unwrap();
    let mut tensors: Vec<Tensor> = net.params().into_iter().cloned().collect();
    let np = tensors.len();
    tensors.push(x);
    let mut analytic = pg;
    analytic.push(ig);
    check_tensors(report, label, &mut tensors, &analytic, |t| {
        let mut n = net.clone();
        for (dst, src) in n.params_mut().into_iter().zip(&t[..np]) {
            *dst = src.clone();
        }
        n.loss_and_grads(&t[np], &targets).unwrap().0
    });
    report.configs += 1;
}

/// Runs `per_kind` random configurations of each layer kind plus a fifth as
/// many of each full network. Network biases start non-zero so no
/// pre-activation sits exactly on a ReLU kink.
pub fn run(seed: u64, per_kind: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradReport::default();
    for k in 0..per_kind {
        check_conv(&mut rng, &mut report, k);
        check_pool(&mut rng, &mut report, k);
        check_dense(&mut rng, &mut report, k);
        check_lstm(&mut rng, &mut report, k);
    }
    for k in 0..per_kind.div_ceil(5) {
        let ks = rng.random_range(1..=WINDOW_LEN);
        let spec = ConvSpec {
            kernel_count: rng.random_range(1..=6),
            kernel_size: ks,
            pool_size: rng.random_range(1..=WINDOW_LEN - ks + 1),
            hidden: (0..rng.random_range(0..=2)).map(|_| rng.random_range(1..=6)).collect(),
            ..ConvSpec::default()
        };
        let mut sub = GradReport::default();
        let mut net = CnnNet::init(&spec, &mut rng).unwrap();
        net.conv.bias = Tensor::uniform(net.conv.bias.shape(), 0.3, &mut rng);
        for d in net.hidden.iter_mut().chain(std::iter::once(&mut net.output)) {
            d.bias = Tensor::uniform(d.bias.shape(), 0.3, &mut rng);
        }
        check_network(Network::Cnn(net), &mut rng, &mut sub, &format!("cnn #{k}"));
        let spec = LstmSpec {
            units: rng.random_range(1..=6),
            dense_hidden: rng.random_range(1..=5),
            ..LstmSpec::default()
        };
        let mut net = LstmNet::init(&spec, &mut rng).unwrap();
        net.lstm.bias = Tensor::uniform(net.lstm.bias.shape(), 0.5, &mut rng);
        for d in net.hidden.iter_mut().chain(std::iter::once(&mut net.output)) {
            d.bias = Tensor::uniform(d.bias.shape(), 0.3, &mut rng);
        }
        check_network(Network::Lstm(net), &mut rng, &mut sub, &format!("lstm net #{k}"));
        report.merge(sub);
    }
    report
}
