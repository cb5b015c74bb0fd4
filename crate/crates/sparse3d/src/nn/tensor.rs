//! Dense row-major f64 matrices.
//!
//! The three matmul variants cover exactly what the layer stack needs.
//! Parallelism only ever splits the *output* dimension; every output scalar
//! is accumulated sequentially over its inner dimension, so results are
//! bit-identical whether or not rayon kicks in.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Work threshold below which a matmul stays single-threaded.
const PAR_FLOP_THRESHOLD: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self (r x c) * w^T (c x n)` for `w` stored `n x c`.
    pub fn matmul_nt(&self, w: &Tensor2) -> Result<Tensor2> {
        if self.cols != w.cols {
            return Err(Error::ShapeMismatch(format!(
                "matmul_nt: {}x{} vs {}x{}",
                self.rows, self.cols, w.rows, w.cols
            )));
        }
        let (r, n, inner) = (self.rows, w.rows, self.cols);
        let mut out = Tensor2::zeros(r, n);
        let body = |i: usize, out_row: &mut [f64]| {
            let x = self.row(i);
            for (o, slot) in out_row.iter_mut().enumerate() {
                let wr = w.row(o);
                let mut acc = 0.0;
                for c in 0..inner {
                    acc += x[c] * wr[c];
                }
                *slot = acc;
            }
        };
        if r * n * inner >= PAR_FLOP_THRESHOLD {
            out.data
                .par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, row)| body(i, row));
        } else {
            for (i, row) in out.data.chunks_mut(n).enumerate() {
                body(i, row);
            }
        }
        Ok(out)
    }

    /// `self (r x n) * w (n x c)`.
    pub fn matmul_nn(&self, w: &Tensor2) -> Result<Tensor2> {
        if self.cols != w.rows {
            return Err(Error::ShapeMismatch(format!(
                "matmul_nn: {}x{} vs {}x{}",
                self.rows, self.cols, w.rows, w.cols
            )));
        }
        let (r, n, c) = (self.rows, self.cols, w.cols);
        let mut out = Tensor2::zeros(r, c);
        let body = |i: usize, out_row: &mut [f64]| {
            let g = self.row(i);
            for (o, &coeff) in g.iter().enumerate() {
                if coeff == 0.0 {
                    continue;
                }
                let wr = w.row(o);
                for (slot, wv) in out_row.iter_mut().zip(wr) {
                    *slot += coeff * wv;
                }
            }
        };
        if r * n * c >= PAR_FLOP_THRESHOLD {
            out.data
                .par_chunks_mut(c)
                .enumerate()
                .for_each(|(i, row)| body(i, row));
        } else {
            for (i, row) in out.data.chunks_mut(c).enumerate() {
                body(i, row);
            }
        }
        Ok(out)
    }

    /// `self^T (n x r) * x (r x c)` for `self` stored `r x n`.
    pub fn matmul_tn(&self, x: &Tensor2) -> Result<Tensor2> {
        if self.rows != x.rows {
            return Err(Error::ShapeMismatch(format!(
                "matmul_tn: {}x{} vs {}x{}",
                self.rows, self.cols, x.rows, x.cols
            )));
        }
        let (r, n, c) = (self.rows, self.cols, x.cols);
        let mut out = Tensor2::zeros(n, c);
        let body = |o: usize, out_row: &mut [f64]| {
            for i in 0..r {
                let coeff = self.data[i * n + o];
                if coeff == 0.0 {
                    continue;
                }
                let xr = x.row(i);
                for (slot, xv) in out_row.iter_mut().zip(xr) {
                    *slot += coeff * xv;
                }
            }
        };
        if r * n * c >= PAR_FLOP_THRESHOLD {
            out.data
                .par_chunks_mut(c)
                .enumerate()
                .for_each(|(o, row)| body(o, row));
        } else {
            for (o, row) in out.data.chunks_mut(c).enumerate() {
                body(o, row);
            }
        }
        Ok(out)
    }

    /// Add a `1 x cols` bias to every row.
    pub fn add_row_broadcast(&mut self, bias: &Tensor2) -> Result<()> {
        if bias.rows != 1 || bias.cols != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "bias shape {}x{} vs data cols {}",
                bias.rows, bias.cols, self.cols
            )));
        }
        for row in self.data.chunks_mut(self.cols) {
            for (x, b) in row.iter_mut().zip(&bias.data) {
                *x += b;
            }
        }
        Ok(())
    }

    /// Column sums as a `1 x cols` tensor (sequential over rows).
    pub fn column_sums(&self) -> Tensor2 {
        let mut out = Tensor2::zeros(1, self.cols);
        for row in self.data.chunks(self.cols) {
            for (acc, x) in out.data.iter_mut().zip(row) {
                *acc += x;
            }
        }
        out
    }
}
