//! Dense least squares by Householder QR.

use crate::error::{Error, Result};

/// Ratio of largest to smallest |R_ii| above which columns are treated as
/// collinear.
const MAX_CONDITION: f64 = 1e12;

/// Solves `min ||A w - b||` for a row-major `rows x cols` matrix.
///
/// `A` is reduced to `R` with Householder reflections applied to `b` on the
/// fly; the normal equations are never formed.
pub fn lstsq(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != rows * cols || b.len() != rows {
        return Err(Error::ShapeMismatch(format!(
            "matrix {}x{} with {} entries and {} targets",
            rows,
            cols,
            a.len(),
            b.len()
        )));
    }
    if cols == 0 || rows < cols {
        return Err(Error::InsufficientData(format!(
            "{rows} rows cannot determine {cols} unknowns"
        )));
    }

    // column-major working copy
    let mut r: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i * cols + j]).collect())
        .collect();
    let mut qtb = b.to_vec();

    let mut diag = vec![0.0; cols];
    for k in 0..cols {
        let norm = r[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        let alpha = if r[k][k] > 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored in place of column k
        let mut v: Vec<f64> = r[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in r.iter_mut().skip(k + 1) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(p, q)| p * q).sum();
                let f = 2.0 * dot / vnorm2;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&qtb[k..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in qtb[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        diag[k] = alpha;
    }

    let max = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let min = diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    let condition = max / min;
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::RankDeficient { condition });
    }

    // back substitution on R w = Q^T b
    let mut w = vec![0.0; cols];
    for i in (0..cols).rev() {
        let mut s = qtb[i];
        for j in i + 1..cols {
            s -= r[j][i] * w[j];
        }
        w[i] = s / diag[i];
    }
    Ok(w)
}
