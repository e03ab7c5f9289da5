//! Token-level masks and the row-wise key selection used by the kernels.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::pattern::{power_distance_kept, PatternKind, PatternSpec};

/// Default cap on materialized masks (16384 tokens, 32 MiB of bits).
pub const DEFAULT_MATERIALIZATION_CAP: usize = 16_384;

/// Anything that can list the kept keys of a query row.
///
/// Ranges are appended in increasing order and never overlap, so kernels
/// can walk them as contiguous slices of `K` and `V`.
pub trait KeySelector: Sync {
    fn total_tokens(&self) -> usize;

    fn kept_ranges(&self, query: usize, out: &mut Vec<Range<usize>>);
}

fn push_merged(out: &mut Vec<Range<usize>>, r: Range<usize>) {
    if r.is_empty() {
        return;
    }
    if let Some(last) = out.last_mut() {
        if last.end >= r.start {
            last.end = last.end.max(r.end);
            return;
        }
    }
    out.push(r);
}

/// A pattern evaluated lazily on a grid.
#[derive(Debug, Clone, Copy)]
pub struct PatternMask {
    pub shape: GridShape,
    pub pattern: PatternSpec,
}

impl PatternMask {
    pub fn new(shape: GridShape, pattern: PatternSpec) -> Result<Self> {
        pattern.validate()?;
        Ok(Self { shape, pattern })
    }
}

impl KeySelector for PatternMask {
    fn total_tokens(&self) -> usize {
        self.shape.total_tokens()
    }

    fn kept_ranges(&self, query: usize, out: &mut Vec<Range<usize>>) {
        let s = self.shape.tokens_per_frame();
        let n = self.shape.total_tokens();
        if self.pattern.kind == PatternKind::Power {
            if self.pattern.sink {
                push_merged(out, 0..s);
            }
            // walk distances outwards on both sides, then emit in key order
            let mut keys: Vec<usize> = Vec::new();
            let mut d = 1usize;
            while d <= query {
                keys.push(query - d);
                d *= 2;
            }
            keys.reverse();
            keys.push(query);
            let mut d = 1usize;
            while query + d < n {
                keys.push(query + d);
                d *= 2;
            }
            debug_assert!(keys.iter().all(|&v| power_distance_kept(v.abs_diff(query))));
            for v in keys {
                push_merged(out, v..v + 1);
            }
            return;
        }
        let (i, k) = self.shape.split(query);
        for j in 0..self.shape.frames() {
            let rule = self
                .pattern
                .pair_rule(&self.shape, i, j)
                .expect("frame-structured pattern");
            if let Some((lo, hi)) = rule.key_interval(k, k, s) {
                let base = j * s;
                push_merged(out, base + lo..base + hi + 1);
            }
        }
    }
}

/// Dense `n x n` bit matrix; bit `(u, v)` set when query `u` may attend key `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMask {
    shape: GridShape,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl TokenMask {
    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    #[inline]
    pub fn get(&self, query: usize, key: usize) -> bool {
        let w = self.bits[query * self.words_per_row + key / 64];
        (w >> (key % 64)) & 1 == 1
    }

    pub fn kept_count(&self) -> u128 {
        self.bits.iter().map(|w| u128::from(w.count_ones())).sum()
    }

    pub fn row_count(&self, query: usize) -> usize {
        self.row_words(query)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    fn row_words(&self, query: usize) -> &[u64] {
        &self.bits[query * self.words_per_row..(query + 1) * self.words_per_row]
    }

    /// Builds a mask from an arbitrary predicate. Meant for tests and
    /// hand-made masks (e.g. diagonal-only).
    pub fn from_fn(
        shape: GridShape,
        cap: usize,
        keep: impl Fn(usize, usize) -> bool + Sync,
    ) -> Result<Self> {
        let mut mask = Self::empty(shape, cap)?;
        let n = shape.total_tokens();
        let wpr = mask.words_per_row;
        mask.bits
            .par_chunks_mut(wpr)
            .enumerate()
            .for_each(|(u, row)| {
                for v in 0..n {
                    if keep(u, v) {
                        row[v / 64] |= 1 << (v % 64);
                    }
                }
            });
        Ok(mask)
    }

    fn empty(shape: GridShape, cap: usize) -> Result<Self> {
        let n = shape.total_tokens();
        let words_per_row = n.div_ceil(64);
        if n > cap {
            return Err(Error::MaterializationCap {
                tokens: n,
                cap,
                bytes: (n as u128) * (words_per_row as u128) * 8,
            });
        }
        Ok(Self {
            shape,
            words_per_row,
            bits: vec![0; n * words_per_row],
        })
    }
}

fn set_range(row: &mut [u64], r: Range<usize>) {
    for v in r {
        row[v / 64] |= 1 << (v % 64);
    }
}

impl KeySelector for TokenMask {
    fn total_tokens(&self) -> usize {
        self.shape.total_tokens()
    }

    fn kept_ranges(&self, query: usize, out: &mut Vec<Range<usize>>) {
        let n = self.shape.total_tokens();
        let mut v = 0;
        while v < n {
            if self.get(query, v) {
                let start = v;
                while v < n && self.get(query, v) {
                    v += 1;
                }
                out.push(start..v);
            } else {
                v += 1;
            }
        }
    }
}

/// Materializes `pattern` on `shape` at the default cap.
pub fn materialize_mask(shape: &GridShape, pattern: &PatternSpec) -> Result<TokenMask> {
    materialize_mask_with_cap(shape, pattern, DEFAULT_MATERIALIZATION_CAP)
}

pub fn materialize_mask_with_cap(
    shape: &GridShape,
    pattern: &PatternSpec,
    cap: usize,
) -> Result<TokenMask> {
    let lazy = PatternMask::new(*shape, *pattern)?;
    let mut mask = TokenMask::empty(*shape, cap)?;
    let wpr = mask.words_per_row;
    mask.bits
        .par_chunks_mut(wpr)
        .enumerate()
        .for_each_init(Vec::new, |ranges, (u, row)| {
            ranges.clear();
            lazy.kept_ranges(u, ranges);
            for r in ranges.drain(..) {
                set_range(row, r);
            }
        });
    Ok(mask)
}
