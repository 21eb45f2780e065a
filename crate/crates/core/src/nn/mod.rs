//! A small neural-network toolkit: just enough tensors, layers, gradients
//! and optimizer to train the convolutional and LSTM forecasting baselines.

mod adam;
mod layers;
mod lstm;
mod model;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use layers::{avg_pool, avg_pool_backward, Conv1d, Conv1dCache, Conv1dGrads, Dense, DenseCache, DenseGrads};
pub use lstm::{lstm_backward, lstm_cell_forward, lstm_forward, GateCache, LstmGrads, LstmParams};
pub use model::{
    load_models, nn_forecast, save_models, train_cnn, train_lstm, CnnNet, ConvSpec, LstmNet, LstmSpec, ModelKind,
    Network, NeuralModel, TrainingData, NN_MODEL_MAGIC, WINDOW_LEN,
};
pub use tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => relu(x),
        }
    }

    /// Derivative at pre-activation `x`; ReLU takes 0 at the kink.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
