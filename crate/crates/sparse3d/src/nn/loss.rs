//! Stabilized classification and reconstruction losses.

use super::tensor::Tensor2;
use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Mean softmax cross-entropy over a batch of logit rows.
///
/// Stabilized by subtracting the row max. Returns the loss and
/// `dloss/dlogits = (softmax - onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Tensor2, labels: &[usize]) -> Result<(f64, Tensor2)> {
    let (batch, classes) = logits.shape();
    if labels.len() != batch {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {batch} logit rows",
            labels.len()
        )));
    }
    let mut dlogits = Tensor2::zeros(batch, classes);
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::Invalid(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for &v in row {
            denom += (v - max).exp();
        }
        let log_denom = denom.ln();
        loss += -(row[label] - max - log_denom);
        let drow = dlogits.row_mut(i);
        for (j, &v) in row.iter().enumerate() {
            let softmax = (v - max).exp() / denom;
            drow[j] = (softmax - if j == label { 1.0 } else { 0.0 }) / batch as f64;
        }
    }
    Ok((loss / batch as f64, dlogits))
}

/// Mean binary cross-entropy with logits over all elements.
///
/// Uses the log-sum-exp form `max(x,0) - x t + ln(1 + exp(-|x|))`, finite for
/// any finite logit. Returns the loss and `dloss/dlogits = (sigmoid(x) - t)/N`.
pub fn binary_cross_entropy_logits(logits: &Tensor2, targets: &Tensor2) -> Result<(f64, Tensor2)> {
    if logits.shape() != targets.shape() {
        return Err(Error::ShapeMismatch(format!(
            "logits {:?} vs targets {:?}",
            logits.shape(),
            targets.shape()
        )));
    }
    for &t in targets.data() {
        if t != 0.0 && t != 1.0 {
            return Err(Error::Invalid(format!("voxel target {t} not in {{0,1}}")));
        }
    }
    let n = logits.data().len() as f64;
    let mut loss = 0.0;
    let mut dlogits = logits.clone();
    for (d, (&x, &t)) in dlogits
        .data_mut()
        .iter_mut()
        .zip(logits.data().iter().zip(targets.data()))
    {
        loss += x.max(0.0) - x * t + (-x.abs()).exp().ln_1p();
        *d = (sigmoid(x) - t) / n;
    }
    Ok((loss / n, dlogits))
}
