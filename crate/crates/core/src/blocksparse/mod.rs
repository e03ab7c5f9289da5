//! Block-sparse layouts.
//!
//! Hardware kernels skip whole `B x B` tiles, so a token mask is lifted to
//! the block grid by keeping every tile that contains at least one kept
//! token pair. The result is stored CSR-style: `row_ptr` has `R + 1`
//! offsets into `col_idx`, which lists each block row's kept columns in
//! increasing order.

mod codec;
mod pgm;

use std::ops::Range;

use rayon::prelude::*;

pub use codec::{deserialize, serialize, FORMAT_VERSION, MAGIC};
pub use pgm::{render_pgm, MAX_IMAGE_ROWS};

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::mask::KeySelector;
use crate::pattern::{power_distance_kept, PatternKind, PatternSpec};

/// The block size used by the reference kernels.
pub const DEFAULT_BLOCK_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    shape: GridShape,
    block_size: usize,
    kind: PatternKind,
    sink: bool,
    row_ptr: Vec<u64>,
    col_idx: Vec<u32>,
}

impl BlockLayout {
    /// Assembles a layout from raw CSR arrays, checking every invariant.
    pub fn from_parts(
        shape: GridShape,
        block_size: usize,
        kind: PatternKind,
        sink: bool,
        row_ptr: Vec<u64>,
        col_idx: Vec<u32>,
    ) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidBlockSize);
        }
        let rows = shape.total_tokens().div_ceil(block_size);
        if row_ptr.len() != rows + 1 {
            return Err(Error::format(
                "row_ptr",
                format!("expected {} offsets, found {}", rows + 1, row_ptr.len()),
            ));
        }
        if row_ptr[0] != 0 {
            return Err(Error::format("row_ptr", "first offset must be 0"));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::format("row_ptr", "offsets decrease"));
        }
        if row_ptr[rows] != col_idx.len() as u64 {
            return Err(Error::format(
                "row_ptr",
                format!(
                    "last offset {} does not match {} column indices",
                    row_ptr[rows],
                    col_idx.len()
                ),
            ));
        }
        for r in 0..rows {
            let cols = &col_idx[row_ptr[r] as usize..row_ptr[r + 1] as usize];
            if cols.iter().any(|&c| c as usize >= rows) {
                return Err(Error::format(
                    "col_idx",
                    format!("row {r} has a column outside [0, {rows})"),
                ));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::format(
                    "col_idx",
                    format!("row {r} is not strictly increasing"),
                ));
            }
        }
        Ok(Self {
            shape,
            block_size,
            kind,
            sink,
            row_ptr,
            col_idx,
        })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn sink(&self) -> bool {
        self.sink
    }

    /// `R = ceil(n / B)`.
    pub fn grid_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row_ptr(&self) -> &[u64] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn kept_blocks(&self) -> u64 {
        self.col_idx.len() as u64
    }

    /// Kept columns of block row `r`.
    pub fn row(&self, r: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[r] as usize..self.row_ptr[r + 1] as usize]
    }

    pub fn is_kept(&self, r: usize, c: usize) -> bool {
        self.row(r).binary_search(&(c as u32)).is_ok()
    }

    /// Token range covered by block index `b` (the last block may be short).
    pub fn block_span(&self, b: usize) -> Range<usize> {
        let start = b * self.block_size;
        start..(start + self.block_size).min(self.shape.total_tokens())
    }

    /// Token pairs inside kept blocks, edge blocks clipped to the grid.
    pub fn covered_pairs(&self) -> u128 {
        (0..self.grid_rows())
            .map(|r| {
                let h = self.block_span(r).len() as u128;
                let w: u128 = self
                    .row(r)
                    .iter()
                    .map(|&c| self.block_span(c as usize).len() as u128)
                    .sum();
                h * w
            })
            .sum()
    }
}

impl KeySelector for BlockLayout {
    fn total_tokens(&self) -> usize {
        self.shape.total_tokens()
    }

    fn kept_ranges(&self, query: usize, out: &mut Vec<Range<usize>>) {
        for &c in self.row(query / self.block_size) {
            let span = self.block_span(c as usize);
            match out.last_mut() {
                Some(last) if last.end == span.start => last.end = span.end,
                _ => out.push(span),
            }
        }
    }
}

struct BitRow(Vec<u64>);

impl BitRow {
    fn new(len: usize) -> Self {
        BitRow(vec![0; len.div_ceil(64)])
    }

    /// Sets bits `lo..=hi`.
    fn set_span(&mut self, lo: usize, hi: usize) {
        let (wl, wh) = (lo / 64, hi / 64);
        let low_mask = u64::MAX << (lo % 64);
        let high_mask = u64::MAX >> (63 - hi % 64);
        if wl == wh {
            self.0[wl] |= low_mask & high_mask;
        } else {
            self.0[wl] |= low_mask;
            for w in &mut self.0[wl + 1..wh] {
                *w = u64::MAX;
            }
            self.0[wh] |= high_mask;
        }
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn ones(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((wi * 64) as u32 + b)
            })
        })
    }
}

/// Lifts `pattern` to a `block_size` grid.
///
/// A block is kept when any token pair inside it is kept. `power` is the
/// exception: its distance rule is applied to block indices directly.
pub fn blockify(shape: &GridShape, pattern: &PatternSpec, block_size: usize) -> Result<BlockLayout> {
    if block_size == 0 {
        return Err(Error::InvalidBlockSize);
    }
    pattern.validate()?;
    let n = shape.total_tokens();
    let s = shape.tokens_per_frame();
    let rows = n.div_ceil(block_size);
    if rows > u32::MAX as usize {
        return Err(Error::InvalidShape(format!("{rows} block rows do not fit the u32 index")));
    }
    let sink_last_block = (s - 1) / block_size;

    let per_row: Vec<Vec<u32>> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let mut bits = BitRow::new(rows);
            match pattern.kind {
                PatternKind::Dense => bits.set_span(0, rows - 1),
                PatternKind::Power => {
                    if pattern.sink {
                        bits.set_span(0, sink_last_block);
                    }
                    for c in 0..rows {
                        if power_distance_kept(r.abs_diff(c)) {
                            bits.set(c);
                        }
                    }
                }
                _ => {
                    let u0 = r * block_size;
                    let u1 = (u0 + block_size).min(n) - 1;
                    let (first_frame, _) = shape.split(u0);
                    let (last_frame, _) = shape.split(u1);
                    for i in first_frame..=last_frame {
                        let k_lo = if i == first_frame { u0 % s } else { 0 };
                        let k_hi = if i == last_frame { u1 % s } else { s - 1 };
                        for j in 0..shape.frames() {
                            let rule = pattern.pair_rule(shape, i, j).expect("frame-structured");
                            if let Some((lo, hi)) = rule.key_interval(k_lo, k_hi, s) {
                                let base = j * s;
                                bits.set_span((base + lo) / block_size, (base + hi) / block_size);
                            }
                        }
                    }
                }
            }
            bits.ones().collect()
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(rows + 1);
    row_ptr.push(0u64);
    let mut col_idx = Vec::with_capacity(per_row.iter().map(Vec::len).sum());
    for cols in per_row {
        col_idx.extend_from_slice(&cols);
        row_ptr.push(col_idx.len() as u64);
    }
    Ok(BlockLayout {
        shape: *shape,
        block_size,
        kind: pattern.kind,
        sink: pattern.sink,
        row_ptr,
        col_idx,
    })
}

/// Fraction of blocks skipped, `1 - kept / R^2`.
pub fn sparsity(layout: &BlockLayout) -> f64 {
    let r = layout.grid_rows() as f64;
    1.0 - layout.kept_blocks() as f64 / (r * r)
}

/// FLOPs of the two attention matmuls (`QK^T` and `PV`, two FLOPs per MAC).
///
/// Softmax is not counted. Sparse FLOPs count every token pair inside a kept
/// block; ragged edge blocks are clipped to the grid, so a dense layout
/// always has a reduction of exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionFlops {
    pub dense_flops: u128,
    pub sparse_flops: u128,
    pub reduction_ratio: f64,
}

pub fn attention_flops(layout: &BlockLayout, head_dim: usize, num_heads: usize) -> Result<AttentionFlops> {
    if head_dim == 0 {
        return Err(Error::param("head_dim", "must be at least 1"));
    }
    if num_heads == 0 {
        return Err(Error::param("num_heads", "must be at least 1"));
    }
    let n = layout.shape().total_tokens() as u128;
    let per_pair = 4 * head_dim as u128 * num_heads as u128;
    let dense_flops = per_pair * n * n;
    let sparse_flops = per_pair * layout.covered_pairs();
    let reduction_ratio = if sparse_flops == 0 {
        f64::INFINITY
    } else {
        dense_flops as f64 / sparse_flops as f64
    };
    Ok(AttentionFlops {
        dense_flops,
        sparse_flops,
        reduction_ratio,
    })
}
