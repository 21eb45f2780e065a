//! The two forecasting baselines built from the layers in this module:
//! a 1-D CNN fed lag-1 differences of the standardized signal, and an LSTM
//! fed the standardized signal directly. Both read a window of the four most
//! recent samples and emit one value.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{avg_pool, avg_pool_backward, Conv1d, Conv1dCache, Dense, DenseCache};
use super::lstm::{lstm_backward, lstm_forward, GateCache, LstmParams};
use super::{adam_step, Activation, AdamState, Tensor};
use crate::dataset::{difference_transform, inverse_difference, row_bases, DaylightWindow, IrradianceSeries, Scaler};
use crate::error::{Error, Result};
use crate::metrics::ForecastRow;
use crate::persist::{fmt_f64, parse_f64s, LineReader};

pub const NN_MODEL_MAGIC: &str = "nn-model v1";
/// Number of past samples each network sees.
pub const WINDOW_LEN: usize = 4;
const MIN_TRAINING_WINDOWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Cnn,
    Lstm,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Cnn => "cnn",
            ModelKind::Lstm => "lstm",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnn" => Ok(ModelKind::Cnn),
            "lstm" => Ok(ModelKind::Lstm),
            _ => Err(Error::ModelFormat(format!("unknown network kind `{s}`"))),
        }
    }
}

/// CNN hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSpec {
    pub kernel_count: usize,
    pub kernel_size: usize,
    pub pool_size: usize,
    /// Widths of the fully connected hidden layers, input side first.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ConvSpec {
    fn default() -> Self {
        Self {
            kernel_count: 16,
            kernel_size: 2,
            pool_size: 1,
            hidden: vec![16, 8],
            learning_rate: 0.005,
            batch_size: 256,
            epochs: 30,
            seed: 0,
        }
    }
}

/// LSTM hyper-parameters. The learning rate is multiplied by
/// `lr_drop_factor` every `lr_drop_period` epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmSpec {
    pub units: usize,
    pub layers: usize,
    pub dense_hidden: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub lr_drop_period: usize,
    pub lr_drop_factor: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LstmSpec {
    fn default() -> Self {
        Self {
            units: 32,
            layers: 1,
            dense_hidden: 8,
            epochs: 100,
            initial_lr: 0.05,
            lr_drop_period: 30,
            lr_drop_factor: 0.1,
            batch_size: 256,
            seed: 0,
        }
    }
}

impl LstmSpec {
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        let drops = epoch.checked_div(self.lr_drop_period).unwrap_or(0);
        self.initial_lr * self.lr_drop_factor.powi(drops as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnNet {
    pub conv: Conv1d,
    pub pool_size: usize,
    pub hidden: Vec<Dense>,
    pub output: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmNet {
    pub lstm: LstmParams,
    pub hidden: Vec<Dense>,
    pub output: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Cnn(CnnNet),
    Lstm(LstmNet),
}

enum FrontCache {
    Conv { conv: Conv1dCache, pooled_shape: Vec<usize>, conv_shape: Vec<usize> },
    Lstm(Vec<Vec<GateCache>>),
}

pub struct ForwardCache {
    front: FrontCache,
    dense: Vec<DenseCache>,
}

impl CnnNet {
    pub fn init(spec: &ConvSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        if spec.kernel_size > WINDOW_LEN || spec.kernel_size == 0 || spec.pool_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "kernel size {} / pool size {} do not fit a {WINDOW_LEN}-sample window",
                spec.kernel_size, spec.pool_size
            )));
        }
        let conv = Conv1d::init(spec.kernel_count, 1, spec.kernel_size, Activation::Relu, rng);
        let conv_len = WINDOW_LEN - spec.kernel_size + 1;
        let pooled = conv_len / spec.pool_size;
        if pooled == 0 {
            return Err(Error::InvalidArgument("pooling leaves no features".into()));
        }
        let mut width = pooled * spec.kernel_count;
        let mut hidden = Vec::new();
        for &h in &spec.hidden {
            hidden.push(Dense::init(width, h, Activation::Relu, rng));
            width = h;
        }
        let output = Dense::init(width, 1, Activation::Identity, rng);
        Ok(Self {
            conv,
            pool_size: spec.pool_size,
            hidden,
            output,
        })
    }
}

impl LstmNet {
    pub fn init(spec: &LstmSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        if spec.layers != 1 {
            return Err(Error::InvalidArgument(format!(
                "only single-layer LSTMs are supported, got {}",
                spec.layers
            )));
        }
        let lstm = LstmParams::init(spec.units, 1, rng);
        let hidden = vec![Dense::init(spec.units, spec.dense_hidden, Activation::Relu, rng)];
        let output = Dense::init(spec.dense_hidden, 1, Activation::Identity, rng);
        Ok(Self { lstm, hidden, output })
    }
}

impl Network {
    pub fn kind(&self) -> ModelKind {
        match self {
            Network::Cnn(_) => ModelKind::Cnn,
            Network::Lstm(_) => ModelKind::Lstm,
        }
    }

    fn dense_stack(&self) -> (&[Dense], &Dense) {
        match self {
            Network::Cnn(n) => (&n.hidden, &n.output),
            Network::Lstm(n) => (&n.hidden, &n.output),
        }
    }

    /// Parameter tensors in a fixed order shared by [`Self::params_mut`],
    /// the gradients from [`Self::backward`] and the optimizer state.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = match self {
            Network::Cnn(n) => vec![&n.conv.weights, &n.conv.bias],
            Network::Lstm(n) => vec![&n.lstm.weights, &n.lstm.bias],
        };
        let (hidden, output) = self.dense_stack();
        for d in hidden.iter().chain(std::iter::once(output)) {
            out.push(&d.weights);
            out.push(&d.bias);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let (front, hidden, output) = match self {
            Network::Cnn(n) => (vec![&mut n.conv.weights, &mut n.conv.bias], &mut n.hidden, &mut n.output),
            Network::Lstm(n) => (vec![&mut n.lstm.weights, &mut n.lstm.bias], &mut n.hidden, &mut n.output),
        };
        let mut out = front;
        for d in hidden.iter_mut().chain(std::iter::once(output)) {
            out.push(&mut d.weights);
            out.push(&mut d.bias);
        }
        out
    }

    /// `(batch, WINDOW_LEN, 1)` to `(batch, 1)`.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
        input.expect_rank(3, "network input")?;
        let batch = input.dim(0);
        let (mut x, front) = match self {
            Network::Cnn(n) => {
                let (conv_out, cache) = n.conv.forward(input)?;
                let pooled = avg_pool(&conv_out, n.pool_size)?;
                let pooled_shape = pooled.shape().to_vec();
                let features: usize = pooled_shape[1] * pooled_shape[2];
                (
                    pooled.reshape(&[batch, features])?,
                    FrontCache::Conv {
                        conv: cache,
                        pooled_shape,
                        conv_shape: conv_out.shape().to_vec(),
                    },
                )
            }
            Network::Lstm(n) => {
                let (h, caches) = lstm_forward(input, &n.lstm)?;
                (h, FrontCache::Lstm(caches))
            }
        };
        let (hidden, output) = self.dense_stack();
        let mut dense = Vec::with_capacity(hidden.len() + 1);
        for d in hidden.iter().chain(std::iter::once(output)) {
            let (y, c) = d.forward(&x)?;
            dense.push(c);
            x = y;
        }
        Ok((x, ForwardCache { front, dense }))
    }

    /// Parameter gradients (in [`Self::params`] order) and the input
    /// gradient, given the gradient on the network output.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Tensor) -> Result<(Vec<Tensor>, Tensor)> {
        let (hidden, output) = self.dense_stack();
        let layers: Vec<&Dense> = hidden.iter().chain(std::iter::once(output)).collect();
        if cache.dense.len() != layers.len() {
            return Err(Error::InvalidArgument("missing forward cache".into()));
        }
        let mut dense_grads = Vec::with_capacity(2 * layers.len());
        let mut g = grad_out.clone();
        for (d, c) in layers.iter().zip(&cache.dense).rev() {
            let gr = d.backward(c, &g)?;
            dense_grads.push(gr.bias);
            dense_grads.push(gr.weights);
            g = gr.input;
        }
        dense_grads.reverse();

        let (mut grads, input_grad) = match (self, &cache.front) {
            (Network::Cnn(n), FrontCache::Conv { conv, pooled_shape, conv_shape }) => {
                let g = g.reshape(pooled_shape)?;
                let g = avg_pool_backward(conv_shape, n.pool_size, &g)?;
                let gr = n.conv.backward(conv, &g)?;
                (vec![gr.weights, gr.bias], gr.input)
            }
            (Network::Lstm(n), FrontCache::Lstm(caches)) => {
                let gr = lstm_backward(&n.lstm, caches, &g)?;
                (vec![gr.weights, gr.bias], gr.input)
            }
            _ => return Err(Error::InvalidArgument("cache does not match network".into())),
        };
        grads.extend(dense_grads);
        Ok((grads, input_grad))
    }

    pub fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0.into_data())
    }

    /// Mean squared error over the batch with its parameter and input
    /// gradients.
    pub fn loss_and_grads(&self, input: &Tensor, targets: &[f64]) -> Result<(f64, Vec<Tensor>, Tensor)> {
        let (out, cache) = self.forward(input)?;
        if out.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} outputs vs {} targets",
                out.len(),
                targets.len()
            )));
        }
        let n = targets.len() as f64;
        let mut loss = 0.0;
        let mut grad = Vec::with_capacity(targets.len());
        for (y, t) in out.data().iter().zip(targets) {
            let e = y - t;
            loss += e * e;
            grad.push(2.0 * e / n);
        }
        let grad = Tensor::new(out.shape().to_vec(), grad)?;
        let (pg, ig) = self.backward(&cache, &grad)?;
        Ok((loss / n, pg, ig))
    }
}

/// Input windows and targets for one model kind and horizon.
///
/// Windows are in chronological order (oldest first). For the CNN both the
/// inputs and the target are lag-1 differences, the target being taken
/// relative to the last observed sample; for the LSTM they are
/// standardized values.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    /// `(rows, WINDOW_LEN, 1)`
    pub inputs: Tensor,
    pub targets: Vec<f64>,
    /// Last observed standardized value per row, added back to CNN outputs.
    pub anchors: Vec<f64>,
    /// Series index `n` per row; the target sits at `n + horizon - 1`.
    pub bases: Vec<usize>,
}

impl TrainingData {
    pub fn build(
        kind: ModelKind,
        z: &IrradianceSeries,
        window: DaylightWindow,
        support: usize,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let zv = z.values();
        let bases = row_bases(
            z.samples_per_day(),
            z.days(),
            z.step_minutes(),
            window,
            support.max(WINDOW_LEN),
            horizon,
        );
        let deltas = match kind {
            ModelKind::Cnn => Some(difference_transform(zv)?.deltas),
            ModelKind::Lstm => None,
        };
        let mut inputs = Vec::with_capacity(bases.len() * WINDOW_LEN);
        let mut targets = Vec::with_capacity(bases.len());
        let mut anchors = Vec::with_capacity(bases.len());
        for &n in &bases {
            let anchor = zv[n - 1];
            let target = zv[n + horizon - 1];
            match &deltas {
                Some(d) => {
                    inputs.extend_from_slice(&d[n - WINDOW_LEN..n]);
                    targets.push(target - anchor);
                }
                None => {
                    inputs.extend_from_slice(&zv[n - WINDOW_LEN..n]);
                    targets.push(target);
                }
            }
            anchors.push(anchor);
        }
        Ok(Self {
            inputs: Tensor::new(vec![bases.len(), WINDOW_LEN, 1], inputs)?,
            targets,
            anchors,
            bases,
        })
    }

    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    pub fn batch(&self, idx: &[usize]) -> Result<(Tensor, Vec<f64>)> {
        let x = self.inputs.data();
        let mut data = Vec::with_capacity(idx.len() * WINDOW_LEN);
        for &i in idx {
            data.extend_from_slice(&x[i * WINDOW_LEN..(i + 1) * WINDOW_LEN]);
        }
        let t = idx.iter().map(|&i| self.targets[i]).collect();
        Ok((Tensor::new(vec![idx.len(), WINDOW_LEN, 1], data)?, t))
    }
}

/// A trained network together with the preprocessing it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    pub network: Network,
    pub scaler: Scaler,
    pub horizon: usize,
    pub window: DaylightWindow,
    pub step_minutes: u32,
    /// Full-training-set MSE before training, then after each epoch.
    pub loss_curve: Vec<f64>,
}

impl NeuralModel {
    pub fn kind(&self) -> ModelKind {
        self.network.kind()
    }

    /// Mean squared error of the network on its own training targets.
    pub fn mse(&self, data: &TrainingData) -> Result<f64> {
        mse_full(&self.network, data)
    }

    /// `epoch,loss` with epoch 0 the untrained network.
    pub fn loss_curve_csv(&self) -> String {
        let mut s = String::from("epoch,loss\n");
        for (i, l) in self.loss_curve.iter().enumerate() {
            s.push_str(&format!("{i},{l}\n"));
        }
        s
    }
}

fn mse_full(net: &Network, data: &TrainingData) -> Result<f64> {
    let all: Vec<usize> = (0..data.rows()).collect();
    let mut sse = 0.0;
    for chunk in all.chunks(1024) {
        let (x, t) = data.batch(chunk)?;
        let y = net.predict(&x)?;
        sse += y.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(sse / data.rows() as f64)
}

fn train_loop(
    net: &mut Network,
    data: &TrainingData,
    epochs: usize,
    batch_size: usize,
    lr: impl Fn(usize) -> f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    let mut state = AdamState::new(&net.params());
    let mut order: Vec<usize> = (0..data.rows()).collect();
    let mut curve = Vec::with_capacity(epochs + 1);
    let initial = mse_full(net, data)?;
    if !initial.is_finite() {
        return Err(Error::Divergence { epoch: 0, loss: initial });
    }
    curve.push(initial);
    for epoch in 0..epochs {
        order.shuffle(rng);
        let rate = lr(epoch);
        for chunk in order.chunks(batch_size) {
            let (x, t) = data.batch(chunk)?;
            let (loss, grads, _) = net.loss_and_grads(&x, &t)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch: epoch + 1, loss });
            }
            adam_step(&mut net.params_mut(), &grads, &mut state, rate)?;
        }
        let loss = mse_full(net, data)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch: epoch + 1, loss });
        }
        curve.push(loss);
    }
    Ok(curve)
}

fn prepare(
    kind: ModelKind,
    train: &IrradianceSeries,
    window: DaylightWindow,
    horizon: usize,
) -> Result<(Scaler, TrainingData)> {
    let scaler = Scaler::fit(train)?;
    let z = scaler.standardize(train)?;
    let data = TrainingData::build(kind, &z, window, WINDOW_LEN, horizon)?;
    if data.rows() < MIN_TRAINING_WINDOWS {
        return Err(Error::InsufficientData(format!(
            "{} training windows; need at least {MIN_TRAINING_WINDOWS}",
            data.rows()
        )));
    }
    Ok((scaler, data))
}

pub fn train_cnn(
    train: &IrradianceSeries,
    spec: &ConvSpec,
    horizon: usize,
    window: DaylightWindow,
) -> Result<NeuralModel> {
    let (scaler, data) = prepare(ModelKind::Cnn, train, window, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut network = Network::Cnn(CnnNet::init(spec, &mut rng)?);
    let curve = train_loop(&mut network, &data, spec.epochs, spec.batch_size, |_| spec.learning_rate, &mut rng)?;
    Ok(NeuralModel {
        network,
        scaler,
        horizon,
        window,
        step_minutes: train.step_minutes(),
        loss_curve: curve,
    })
}

pub fn train_lstm(
    train: &IrradianceSeries,
    spec: &LstmSpec,
    horizon: usize,
    window: DaylightWindow,
) -> Result<NeuralModel> {
    let (scaler, data) = prepare(ModelKind::Lstm, train, window, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut network = Network::Lstm(LstmNet::init(spec, &mut rng)?);
    let curve = train_loop(&mut network, &data, spec.epochs, spec.batch_size, |e| spec.learning_rate(e), &mut rng)?;
    Ok(NeuralModel {
        network,
        scaler,
        horizon,
        window,
        step_minutes: train.step_minutes(),
        loss_curve: curve,
    })
}

/// Forecast rows on `test`, using the same row policy as the MAR model with
/// `support` preceding samples required inside the daylight window.
pub fn nn_forecast(model: &NeuralModel, test: &IrradianceSeries, horizon: usize, support: usize) -> Result<Vec<ForecastRow>> {
    if horizon != model.horizon {
        return Err(Error::UnfittedHorizon(horizon));
    }
    if test.step_minutes() != model.step_minutes {
        return Err(Error::GridMismatch(format!(
            "model sampled every {} min, test every {} min",
            model.step_minutes,
            test.step_minutes()
        )));
    }
    let z = model.scaler.standardize(test)?;
    let data = TrainingData::build(model.kind(), &z, model.window, support, horizon)?;
    let mut outputs = Vec::with_capacity(data.rows());
    let all: Vec<usize> = (0..data.rows()).collect();
    for chunk in all.chunks(1024) {
        let (x, _) = data.batch(chunk)?;
        outputs.extend(model.network.predict(&x)?);
    }
    let z_pred = match model.kind() {
        ModelKind::Cnn => inverse_difference(&outputs, &data.anchors)?,
        ModelKind::Lstm => outputs,
    };
    let raw = test.values();
    Ok(data
        .bases
        .iter()
        .zip(z_pred)
        .map(|(&n, zp)| {
            let target = n + horizon - 1;
            ForecastRow {
                timestamp: test.timestamp(target),
                actual: raw[target],
                predicted: model.scaler.from_z(zp).max(0.0),
                horizon,
            }
        })
        .collect())
}

fn write_tensor(w: &mut impl Write, name: &str, t: &Tensor) -> std::io::Result<()> {
    let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
    writeln!(w, "tensor {name} {}", dims.join(" "))?;
    let vals: Vec<String> = t.data().iter().map(|v| fmt_f64(*v)).collect();
    writeln!(w, "{}", vals.join(" "))
}

fn read_tensor<R: BufRead>(lines: &mut LineReader<R>) -> Result<Tensor> {
    let head = lines.keyed("tensor")?;
    let mut parts = head.split_whitespace();
    parts.next();
    let shape = parts
        .map(|d| d.parse::<usize>().map_err(|_| Error::ModelFormat(format!("bad dimension `{d}`"))))
        .collect::<Result<Vec<_>>>()?;
    let data = parse_f64s(&lines.next_line()?)?;
    Tensor::new(shape, data).map_err(|e| Error::ModelFormat(e.to_string()))
}

/// Writes models back to back, each starting with the format tag.
pub fn save_models(mut w: impl Write, models: &[NeuralModel], comments: &[String]) -> std::io::Result<()> {
    for m in models {
        writeln!(w, "{NN_MODEL_MAGIC}")?;
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "kind {}", m.kind())?;
        writeln!(w, "horizon {}", m.horizon)?;
        writeln!(w, "step_minutes {}", m.step_minutes)?;
        writeln!(w, "daylight {}", m.window)?;
        writeln!(w, "window {WINDOW_LEN}")?;
        writeln!(w, "scaler {} {}", fmt_f64(m.scaler.mu), fmt_f64(m.scaler.sigma))?;
        match &m.network {
            Network::Cnn(n) => writeln!(w, "arch pool={} dense={}", n.pool_size, n.hidden.len())?,
            Network::Lstm(n) => writeln!(w, "arch layers=1 dense={}", n.hidden.len())?,
        }
        let params = m.network.params();
        writeln!(w, "tensors {}", params.len())?;
        for (i, t) in params.iter().enumerate() {
            write_tensor(&mut w, &format!("p{i}"), t)?;
        }
        let curve: Vec<String> = m.loss_curve.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "loss_curve {} {}", curve.len(), curve.join(" "))?;
    }
    w.flush()
}

pub fn load_models(r: impl BufRead) -> Result<Vec<NeuralModel>> {
    let mut lines = LineReader::new(r);
    let mut models = Vec::new();
    while let Some(first) = lines.try_next_line()? {
        if first != NN_MODEL_MAGIC {
            return Err(Error::ModelFormat(format!("expected `{NN_MODEL_MAGIC}`, found `{first}`")));
        }
        let kind: ModelKind = lines.keyed_parse("kind")?;
        let horizon = lines.keyed_parse("horizon")?;
        let step_minutes = lines.keyed_parse("step_minutes")?;
        let window = lines.keyed_parse("daylight")?;
        let wl: usize = lines.keyed_parse("window")?;
        if wl != WINDOW_LEN {
            return Err(Error::ModelFormat(format!("window length {wl} is not {WINDOW_LEN}")));
        }
        let sc = parse_f64s(&lines.keyed("scaler")?)?;
        if sc.len() != 2 {
            return Err(Error::ModelFormat("scaler needs mu and sigma".into()));
        }
        let scaler = Scaler::new(sc[0], sc[1])?;
        let arch = lines.keyed("arch")?;
        let mut pool = 1usize;
        for kv in arch.split_whitespace() {
            if let Some(v) = kv.strip_prefix("pool=") {
                pool = v.parse().map_err(|_| Error::ModelFormat(format!("bad pool `{v}`")))?;
            }
        }
        let count: usize = lines.keyed_parse("tensors")?;
        if count < 4 || !count.is_multiple_of(2) {
            return Err(Error::ModelFormat(format!("unexpected tensor count {count}")));
        }
        let mut tensors = (0..count).map(|_| read_tensor(&mut lines)).collect::<Result<Vec<_>>>()?.into_iter();
        let (fw, fb) = (tensors.next().unwrap(), tensors.next().unwrap());
        let mut dense = Vec::new();
        while let (Some(w), Some(b)) = (tensors.next(), tensors.next()) {
            dense.push((w, b));
        }
        let (ow, ob) = dense.pop().unwrap();
        let hidden = dense
            .into_iter()
            .map(|(w, b)| Dense::new(w, b, Activation::Relu))
            .collect::<Result<Vec<_>>>()?;
        let output = Dense::new(ow, ob, Activation::Identity)?;
        let network = match kind {
            ModelKind::Cnn => Network::Cnn(CnnNet {
                conv: Conv1d::new(fw, fb, Activation::Relu)?,
                pool_size: pool,
                hidden,
                output,
            }),
            ModelKind::Lstm => Network::Lstm(LstmNet {
                lstm: LstmParams::new(fw, fb)?,
                hidden,
                output,
            }),
        };
        let curve_line = lines.keyed("loss_curve")?;
        let mut curve = parse_f64s(&curve_line)?;
        if curve.is_empty() || curve[0] as usize != curve.len() - 1 {
            return Err(Error::ModelFormat("loss curve length mismatch".into()));
        }
        curve.remove(0);
        models.push(NeuralModel {
            network,
            scaler,
            horizon,
            window,
            step_minutes,
            loss_curve: curve,
        });
    }
    if models.is_empty() {
        return Err(Error::ModelFormat("no models in file".into()));
    }
    Ok(models)
}
