//! Seeded pseudo-randomness and the small set of dense vector/matrix
//! operations and elementwise nonlinearities used by the rest of the crate.
//!
//! Everything operates on `f64`. No exported operation produces NaN or Inf
//! for finite inputs within its documented domain.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic seeded random number generator.
///
/// Identical seed plus identical call sequence yields a bit-exact identical
/// output sequence. One instance is threaded through a whole training run;
/// never share an instance across concurrent tasks.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Deterministically derive a generator for an independent stream, e.g.
    /// one per child-model training run.
    pub fn derived(master: u64, stream: u64) -> Self {
        let seed = master ^ (stream.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        Self::new(seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        // 53 high bits -> uniform double in [0,1)
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform draw in `[-scale, scale]`.
    pub fn next_symmetric(&mut self, scale: f64) -> f64 {
        (self.next_f64() * 2.0 - 1.0) * scale
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            xs.swap(i, j);
        }
    }
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self { rows, cols, values }
    }

    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::from_values",
                expected: rows * cols,
                actual: values.len(),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, delta: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.values[r * self.cols + c] += delta;
    }

    /// `vᵀ · M` — vector of length `cols`.
    pub fn vecmat(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::vecmat",
                expected: self.rows,
                actual: v.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            let row = &self.values[r * self.cols..(r + 1) * self.cols];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += vr * w;
            }
        }
        Ok(out)
    }

    /// `M · h` — vector of length `rows`.
    pub fn matvec(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::matvec",
                expected: self.cols,
                actual: h.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.values[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(h).map(|(w, hj)| w * hj).sum();
        }
        Ok(out)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn push_column(&mut self, col: &[f64]) -> Result<()> {
        if col.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::push_column",
                expected: self.rows,
                actual: col.len(),
            });
        }
        let mut values = Vec::with_capacity(self.rows * (self.cols + 1));
        for (r, &appended) in col.iter().enumerate() {
            values.extend_from_slice(&self.values[r * self.cols..(r + 1) * self.cols]);
            values.push(appended);
        }
        self.cols += 1;
        self.values = values;
        Ok(())
    }

    pub fn remove_column(&mut self, c: usize) -> Result<()> {
        if c >= self.cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::remove_column",
                expected: self.cols,
                actual: c,
            });
        }
        let mut values = Vec::with_capacity(self.rows * (self.cols - 1));
        for r in 0..self.rows {
            for cc in 0..self.cols {
                if cc != c {
                    values.push(self.get(r, cc));
                }
            }
        }
        self.cols -= 1;
        self.values = values;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Logistic function `1 / (1 + exp(-x))`.
///
/// Saturates to exactly 0.0 / 1.0 at the extremes; never NaN for finite input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically safe softmax (max-subtraction). Output is nonnegative and
/// sums to 1 within 1e-12; invariant under additive shifts of the input.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput("softmax input"));
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Draw one Bernoulli sample per probability, driven solely by `rng`.
pub fn sample_bernoulli(p: &[f64], rng: &mut SeededRng) -> Result<Vec<f64>> {
    for &pi in p {
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::InvalidValue {
                what: "bernoulli probability".into(),
                value: pi,
            });
        }
    }
    Ok(p.iter()
        .map(|&pi| if rng.next_f64() < pi { 1.0 } else { 0.0 })
        .collect())
}

/// Mean of a slice; 0 for an empty slice.
pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Population variance (divisor n); 0 for an empty slice.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}
