//! Column-wise max pooling over descriptor rows.
//!
//! Pooling compresses all descriptor information into a single vector and is
//! what makes the network output invariant to row permutations. Ties pick
//! the lowest row index, and the scan keeps the first maximum, so pooled
//! values are bit-identical under any permutation of equal rows.

use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Pool all rows into one vector; returns the per-column argmax row indices.
pub fn maxpool_rows(x: &Tensor2) -> Result<(Vec<f64>, Vec<usize>)> {
    if x.rows() == 0 {
        return Err(Error::Invalid("maxpool of empty input".into()));
    }
    let cols = x.cols();
    let mut values = x.row(0).to_vec();
    let mut argmax = vec![0usize; cols];
    for i in 1..x.rows() {
        let row = x.row(i);
        for j in 0..cols {
            if row[j] > values[j] {
                values[j] = row[j];
                argmax[j] = i;
            }
        }
    }
    Ok((values, argmax))
}

/// Gradient of pooled values w.r.t. the input: routed only to argmax cells.
pub fn maxpool_rows_backward(
    dvalues: &[f64],
    argmax: &[usize],
    rows: usize,
    cols: usize,
) -> Tensor2 {
    let mut dx = Tensor2::zeros(rows, cols);
    for (j, (&g, &i)) in dvalues.iter().zip(argmax).enumerate() {
        dx.row_mut(i)[j] = g;
    }
    dx
}

/// Pool consecutive `segment_len`-row blocks independently: input
/// `(B * segment_len) x C` becomes `B x C`. Argmax indices are global row
/// indices into the input.
pub fn maxpool_segments(x: &Tensor2, segment_len: usize) -> Result<(Tensor2, Vec<usize>)> {
    if segment_len == 0 || !x.rows().is_multiple_of(segment_len) {
        return Err(Error::ShapeMismatch(format!(
            "cannot split {} rows into segments of {segment_len}",
            x.rows()
        )));
    }
    let batch = x.rows() / segment_len;
    let cols = x.cols();
    let mut pooled = Tensor2::zeros(batch, cols);
    let mut argmax = vec![0usize; batch * cols];
    for b in 0..batch {
        let start = b * segment_len;
        let out = pooled.row_mut(b);
        out.copy_from_slice(x.row(start));
        let arg = &mut argmax[b * cols..(b + 1) * cols];
        arg.fill(start);
        for i in (start + 1)..(start + segment_len) {
            let row = x.row(i);
            for j in 0..cols {
                if row[j] > out[j] {
                    out[j] = row[j];
                    arg[j] = i;
                }
            }
        }
    }
    Ok((pooled, argmax))
}

pub fn maxpool_segments_backward(dpooled: &Tensor2, argmax: &[usize], rows: usize) -> Tensor2 {
    let cols = dpooled.cols();
    let mut dx = Tensor2::zeros(rows, cols);
    for b in 0..dpooled.rows() {
        let dr = dpooled.row(b);
        let arg = &argmax[b * cols..(b + 1) * cols];
        for j in 0..cols {
            dx.row_mut(arg[j])[j] += dr[j];
        }
    }
    dx
}
