//! Minimal dense building blocks with hand-written backward passes.
//!
//! Everything here is deliberately small: row-major matrices, an LSTM layer
//! with truncation-free BPTT, and a parameter registry that lets models be
//! flattened for optimizers, checkpoints and finite-difference checks.

mod fit;
mod lstm;
mod optim;

pub use fit::{fit, Schedule};
pub use lstm::{Lstm, LstmCache, LstmStack, LstmStackCache, LstmState};
pub use optim::{Optimizer, OptimizerKind};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.08;

/// Row-major dense matrix. Vectors are stored as `n x 1` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Matrix { rows, cols, data }
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

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill_uniform(&mut self, rng: &mut ChaCha8Rng, half_width: f64) {
        for v in &mut self.data {
            *v = S::of(rng.gen_range(-half_width..=half_width));
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = S::zero());
    }

    /// `self * x`
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `out += self^T * y`
    pub fn matvec_t_acc(&self, y: &[S], out: &mut [S]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            if yr == S::zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * yr;
            }
        }
    }

    /// `self += y x^T`
    pub fn outer_acc(&mut self, y: &[S], x: &[S]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            if yr == S::zero() {
                continue;
            }
            for (w, &xc) in self.row_mut(r).iter_mut().zip(x) {
                *w += yr * xc;
            }
        }
    }

    /// Adds `v` element-wise to a column vector.
    pub fn add_vec(&mut self, v: &[S]) {
        debug_assert_eq!(v.len(), self.data.len());
        for (a, &b) in self.data.iter_mut().zip(v) {
            *a += b;
        }
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn add_into<S: Scalar>(acc: &mut [S], v: &[S]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

pub fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

/// Numerically stable log-softmax.
pub fn log_softmax<S: Scalar>(logits: &[S]) -> Vec<S> {
    let max = logits
        .iter()
        .copied()
        .fold(S::neg_infinity(), |m, v| if v > m { v } else { m });
    let sum: S = logits.iter().map(|&v| (v - max).exp()).sum();
    let log_z = max + sum.ln();
    logits.iter().map(|&v| v - log_z).collect()
}

pub fn softmax<S: Scalar>(logits: &[S]) -> Vec<S> {
    let max = logits
        .iter()
        .copied()
        .fold(S::neg_infinity(), |m, v| if v > m { v } else { m });
    let exps: Vec<S> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<S: PartialOrd + Copy>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Shape and name of one parameter tensor, as recorded in checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// A model whose trainable state is a fixed, ordered list of named tensors.
///
/// The order returned by `tensors` is the serialization order and the order
/// in which parameters are initialized from the seeded RNG.
pub trait Parameters<S: Scalar> {
    fn tensors(&self) -> Vec<(String, &Matrix<S>)>;

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<S>>;

    fn tensor_specs(&self) -> Vec<TensorSpec> {
        self.tensors()
            .into_iter()
            .map(|(name, m)| TensorSpec {
                name,
                rows: m.rows(),
                cols: m.cols(),
            })
            .collect()
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.as_slice().len()).sum()
    }

    fn flatten(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (_, m) in self.tensors() {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    fn assign_flat(&mut self, flat: &[S]) {
        let mut offset = 0;
        for m in self.tensors_mut() {
            let n = m.as_slice().len();
            m.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, flat.len(), "flat parameter vector has wrong length");
    }

    fn zero_all(&mut self) {
        for m in self.tensors_mut() {
            m.fill_zero();
        }
    }

    fn init_uniform(&mut self, seed: u64) {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in self.tensors_mut() {
            m.fill_uniform(&mut rng, INIT_RANGE);
        }
    }

    /// `self += scale * other`, tensor by tensor.
    fn add_scaled(&mut self, other: &Self, scale: S)
    where
        Self: Sized,
    {
        let src: Vec<Vec<S>> = other
            .tensors()
            .into_iter()
            .map(|(_, m)| m.as_slice().to_vec())
            .collect();
        for (dst, src) in self.tensors_mut().into_iter().zip(src) {
            for (d, s) in dst.as_mut_slice().iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, m)| m.as_slice().iter().all(|v| v.is_finite()))
    }
}

/// Token embedding table, one row per vocabulary entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<S> {
    pub table: Matrix<S>,
}

impl<S: Scalar> Embedding<S> {
    pub fn new(vocab_size: usize, dim: usize) -> Self {
        Embedding {
            table: Matrix::zeros(vocab_size, dim),
        }
    }

    pub fn lookup(&self, id: u32) -> Vec<S> {
        self.table.row(id as usize).to_vec()
    }

    pub fn accumulate(&mut self, id: u32, grad: &[S]) {
        add_into(self.table.row_mut(id as usize), grad);
    }
}

/// Affine map `W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S> {
    pub weight: Matrix<S>,
    pub bias: Matrix<S>,
}

impl<S: Scalar> Dense<S> {
    pub fn new(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Matrix::zeros(outputs, inputs),
            bias: Matrix::zeros(outputs, 1),
        }
    }

    pub fn forward(&self, x: &[S]) -> Vec<S> {
        let mut y = self.weight.matvec(x);
        add_into(&mut y, self.bias.as_slice());
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[S], dy: &[S], grad: &mut Dense<S>) -> Vec<S> {
        grad.weight.outer_acc(dy, x);
        grad.bias.add_vec(dy);
        let mut dx = vec![S::zero(); x.len()];
        self.weight.matvec_t_acc(dy, &mut dx);
        dx
    }

    pub fn push_tensors<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Matrix<S>)>) {
        out.push((format!("{prefix}.weight"), &self.weight));
        out.push((format!("{prefix}.bias"), &self.bias));
    }

    pub fn push_tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Matrix<S>>) {
        out.push(&mut self.weight);
        out.push(&mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_softmax_of_zeros_is_uniform() {
        let lp = log_softmax(&[0.0f64; 8]);
        for v in lp {
            assert!((v + 8f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_handles_large_logits() {
        let p = softmax(&[1000.0f64, 1000.0, -1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5, 0.1]), 1);
        assert_eq!(argmax(&[0.0f32; 4]), 0);
    }

    #[test]
    fn transpose_product_matches_explicit_transpose() {
        let m = Matrix::from_vec(2, 3, vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut out = vec![0.0; 3];
        m.matvec_t_acc(&[1.0, -1.0], &mut out);
        assert_eq!(out, vec![-3.0, -3.0, -3.0]);
    }
}
