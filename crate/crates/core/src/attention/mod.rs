//! Reference softmax attention in double precision.
//!
//! Both kernels subtract the row maximum before exponentiating. The masked
//! kernel only ever touches kept keys, so a dropped entry contributes exactly
//! zero probability (the same as adding `-inf` to its logit).

mod score_row;
mod synth;

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub use score_row::{l1_from_scores, Normalizers, RowError, ScoreRow};
pub use synth::{synth_decay_instance, synth_decay_row, DecayMode};

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::mask::KeySelector;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..rows * cols).map(|x| f(x / cols, x % cols)).collect();
        Self { rows, cols, data }
    }

    /// `rows x cols` entries drawn from a standard normal, seeded.
    pub fn standard_normal(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Where the attention logits come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Scores {
    /// `QK^T / sqrt(d)`.
    Projections { q: Matrix, k: Matrix },
    /// An explicit `n x n` logit matrix, used as is (no `sqrt(d)` scaling).
    Logits(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionInstance {
    shape: GridShape,
    head_dim: usize,
    scores: Scores,
    v: Matrix,
}

impl AttentionInstance {
    pub fn new(shape: GridShape, q: Matrix, k: Matrix, v: Matrix) -> Result<Self> {
        let n = shape.total_tokens();
        let d = q.cols();
        if d == 0 {
            return Err(Error::ShapeMismatch("head_dim must be at least 1".into()));
        }
        for (name, m) in [("Q", &q), ("K", &k), ("V", &v)] {
            if m.rows() != n || m.cols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "{name} is {}x{}, expected {n}x{d}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !m.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        Ok(Self {
            shape,
            head_dim: d,
            scores: Scores::Projections { q, k },
            v,
        })
    }

    pub fn from_logits(shape: GridShape, logits: Matrix, v: Matrix) -> Result<Self> {
        let n = shape.total_tokens();
        if logits.rows() != n || logits.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "logits are {}x{}, expected {n}x{n}",
                logits.rows(),
                logits.cols()
            )));
        }
        if v.rows() != n || v.cols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "V is {}x{}, expected {n} rows and at least one column",
                v.rows(),
                v.cols()
            )));
        }
        if !logits.is_finite() {
            return Err(Error::NonFinite("logits"));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite("V"));
        }
        Ok(Self {
            shape,
            head_dim: v.cols(),
            scores: Scores::Logits(logits),
            v,
        })
    }

    /// Q, K and V filled with seeded standard normals.
    pub fn random(shape: GridShape, head_dim: usize, seed: u64) -> Result<Self> {
        let n = shape.total_tokens();
        let q = Matrix::standard_normal(n, head_dim, seed);
        let k = Matrix::standard_normal(n, head_dim, seed.wrapping_add(1));
        let v = Matrix::standard_normal(n, head_dim, seed.wrapping_add(2));
        Self::new(shape, q, k, v)
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn head_dim(&self) -> usize {
        self.head_dim
    }

    pub fn scores(&self) -> &Scores {
        &self.scores
    }

    pub fn values(&self) -> &Matrix {
        &self.v
    }

    /// Same instance with a different value matrix.
    pub fn with_values(&self, v: Matrix) -> Result<Self> {
        if v.rows() != self.v.rows() {
            return Err(Error::ShapeMismatch("value matrix row count changed".into()));
        }
        let mut out = self.clone();
        out.head_dim = match &out.scores {
            Scores::Projections { .. } => self.head_dim,
            Scores::Logits(_) => v.cols(),
        };
        out.v = v;
        Ok(out)
    }

    /// Pre-softmax score of `query` against `key`.
    #[inline]
    pub fn logit(&self, query: usize, key: usize) -> f64 {
        match &self.scores {
            Scores::Projections { q, k } => {
                let dot: f64 = q.row(query).iter().zip(k.row(key)).map(|(a, b)| a * b).sum();
                dot / (self.head_dim as f64).sqrt()
            }
            Scores::Logits(m) => m.get(query, key),
        }
    }

    fn n(&self) -> usize {
        self.shape.total_tokens()
    }
}

/// Softmax over the keys in `ranges`, written into `out`. Returns false when
/// `ranges` is empty.
fn attend_row(
    inst: &AttentionInstance,
    query: usize,
    ranges: &[Range<usize>],
    logits: &mut Vec<f64>,
    out: &mut [f64],
) -> bool {
    logits.clear();
    for r in ranges {
        logits.extend(r.clone().map(|key| inst.logit(query, key)));
    }
    if logits.is_empty() {
        return false;
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.fill(0.0);
    let mut z = 0.0;
    let mut w = logits.iter();
    for r in ranges {
        for key in r.clone() {
            let p = (w.next().unwrap() - max).exp();
            z += p;
            for (o, x) in out.iter_mut().zip(inst.v.row(key)) {
                *o += p * x;
            }
        }
    }
    for o in out.iter_mut() {
        *o /= z;
    }
    true
}

/// `softmax(QK^T / sqrt(d)) V`.
pub fn dense_attention(inst: &AttentionInstance) -> Matrix {
    let n = inst.n();
    let cols = inst.v.cols();
    let mut out = Matrix::zeros(n, cols);
    #[allow(clippy::single_range_in_vec_init)]
    let all = [0..n];
    out.data
        .par_chunks_mut(cols)
        .enumerate()
        .for_each_init(Vec::new, |buf, (u, row)| {
            attend_row(inst, u, &all, buf, row);
        });
    out
}

/// Softmax restricted to the keys `mask` keeps for each query.
pub fn masked_attention<M: KeySelector + ?Sized>(inst: &AttentionInstance, mask: &M) -> Result<Matrix> {
    let n = inst.n();
    if mask.total_tokens() != n {
        return Err(Error::ShapeMismatch(format!(
            "mask covers {} tokens, instance has {n}",
            mask.total_tokens()
        )));
    }
    let cols = inst.v.cols();
    let mut out = Matrix::zeros(n, cols);
    let empty_row = out
        .data
        .par_chunks_mut(cols)
        .enumerate()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(ranges, buf), (u, row)| {
                ranges.clear();
                mask.kept_ranges(u, ranges);
                if attend_row(inst, u, ranges, buf, row) {
                    None
                } else {
                    Some(u)
                }
            },
        )
        .flatten()
        .min();
    match empty_row {
        Some(row) => Err(Error::FullyMaskedRow { row }),
        None => Ok(out),
    }
}

/// Full `n x n` softmax probability matrix.
pub fn attention_probabilities(inst: &AttentionInstance) -> Matrix {
    let n = inst.n();
    let mut out = Matrix::zeros(n, n);
    out.data.par_chunks_mut(n).enumerate().for_each(|(u, row)| {
        for (key, slot) in row.iter_mut().enumerate() {
            *slot = inst.logit(u, key);
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            z += *x;
        }
        for x in row.iter_mut() {
            *x /= z;
        }
    });
    out
}

/// `||p~ - p||_1` for one query row of `inst` under `mask`.
pub fn row_l1_error<M: KeySelector + ?Sized>(
    inst: &AttentionInstance,
    mask: &M,
    query: usize,
) -> Result<RowError> {
    let n = inst.n();
    if query >= n {
        return Err(Error::IndexOutOfRange {
            name: "query",
            value: query,
            limit: n,
        });
    }
    let logits: Vec<f64> = (0..n).map(|key| inst.logit(query, key)).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scores: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let mut ranges = Vec::new();
    mask.kept_ranges(query, &mut ranges);
    l1_from_scores(&scores, &ranges).ok_or(Error::FullyMaskedRow { row: query })
}

/// Mean squared difference over every entry.
pub fn output_mse(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if a.data.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / a.data.len() as f64)
}
