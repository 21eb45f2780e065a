//! Short-term univariate solar irradiance forecasting.
//!
//! The main model is an autoregression fitted on ensemble-deducted
//! irradiance (the per-time-of-day training mean removed before the fit and
//! added back after prediction). Small convolutional and LSTM networks,
//! written from scratch in [`nn`], serve as baselines. Every model reports
//! RMSE, MAE and MAPE per forecast horizon through [`metrics`].

pub mod dataset;
pub mod error;
mod linalg;
pub mod mar;
pub mod metrics;
pub mod nn;
mod persist;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
pub use linalg::lstsq;
