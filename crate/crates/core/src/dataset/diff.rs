use crate::error::{Error, Result};

/// Lag-1 differences of a signal, with the first element differenced
/// against an implicit zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencedSeries {
    /// Value the first delta is taken against (always 0 for the forward
    /// transform).
    pub first_value: f64,
    pub deltas: Vec<f64>,
}

impl DifferencedSeries {
    /// Cumulative sum back to the original signal.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut acc = self.first_value;
        self.deltas
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect()
    }
}

/// `[x0 - 0, x1 - x0, ..., xn - x(n-1)]`
pub fn difference_transform(values: &[f64]) -> Result<DifferencedSeries> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "difference transform needs at least 2 samples, got {}",
            values.len()
        )));
    }
    let mut deltas = Vec::with_capacity(values.len());
    deltas.push(values[0]);
    deltas.extend(values.windows(2).map(|w| w[1] - w[0]));
    Ok(DifferencedSeries {
        first_value: 0.0,
        deltas,
    })
}

/// Adds each predicted change to the observed value it is relative to:
/// `y[i] = delta[i] + anchor[i]`.
pub fn inverse_difference(predicted: &[f64], anchors: &[f64]) -> Result<Vec<f64>> {
    if predicted.len() != anchors.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted deltas but {} anchors",
            predicted.len(),
            anchors.len()
        )));
    }
    Ok(predicted.iter().zip(anchors).map(|(d, a)| d + a).collect())
}
