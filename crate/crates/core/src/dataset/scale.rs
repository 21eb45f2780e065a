use crate::dataset::IrradianceSeries;
use crate::error::{Error, Result};

/// z-score parameters fitted on the training split.
///
/// `sigma` is the population standard deviation, not the variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub mu: f64,
    pub sigma: f64,
}

impl Scaler {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 || !mu.is_finite() {
            return Err(Error::ZeroSigma);
        }
        Ok(Self { mu, sigma })
    }

    pub fn fit(train: &IrradianceSeries) -> Result<Self> {
        Self::fit_values(train.values())
    }

    pub fn fit_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty training series".into()));
        }
        let n = values.len() as f64;
        let mu = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        let sigma = var.sqrt();
        if sigma == 0.0 || sigma < 1e-12 * mu.abs().max(1.0) {
            return Err(Error::ZeroSigma);
        }
        Self::new(mu, sigma)
    }

    #[inline]
    pub fn to_z(&self, x: f64) -> f64 {
        (x - self.mu) / self.sigma
    }

    #[inline]
    pub fn from_z(&self, z: f64) -> f64 {
        z * self.sigma + self.mu
    }

    pub fn standardize(&self, series: &IrradianceSeries) -> Result<IrradianceSeries> {
        series.with_values(series.values().iter().map(|&x| self.to_z(x)).collect())
    }

    pub fn destandardize(&self, series: &IrradianceSeries) -> Result<IrradianceSeries> {
        series.with_values(series.values().iter().map(|&z| self.from_z(z)).collect())
    }
}
