//! Brute-force reference for the radial mask.
//!
//! Written straight from the three-case definition on the 4D index
//! `(i, j, k, l)` with no shared helpers from [`crate::grid`] or
//! [`crate::pattern`], so it can police the fast paths. Only meant for small
//! grids: every function here is a full `O(f^2 s^2)` enumeration.

use crate::blocksparse::BlockLayout;
use crate::grid::GridShape;
use crate::mask::TokenMask;

fn exponent_by_halving(distance: usize) -> u32 {
    let mut x = distance.max(1);
    let mut e = 0;
    while x > 1 {
        x /= 2;
        e += 1;
    }
    e
}

/// One entry of the 4D radial mask.
pub fn radial_entry(f_i: usize, f_j: usize, k: usize, l: usize, s: usize, sink: bool) -> bool {
    let dist = f_i.abs_diff(f_j);
    let two_e = 2f64.powi(exponent_by_halving(dist) as i32);
    let s = s as f64;
    let case_band = two_e <= s && (k.abs_diff(l) as f64 + 1.0) <= s / two_e;
    let period = (two_e / s).ceil() as usize;
    let case_diag = dist.is_multiple_of(period) && k == l;
    case_band || case_diag || (sink && f_j == 0)
}

/// Kept-pair count by full enumeration.
pub fn radial_count(frames: usize, s: usize, sink: bool) -> u128 {
    let mut count = 0u128;
    for i in 0..frames {
        for j in 0..frames {
            for k in 0..s {
                for l in 0..s {
                    if radial_entry(i, j, k, l, s, sink) {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

/// Whether every bit of `mask` equals the enumerated radial entry.
pub fn radial_mask_matches(mask: &TokenMask, sink: bool) -> bool {
    let shape = *mask.shape();
    let s = shape.tokens_per_frame();
    let n = shape.total_tokens();
    (0..n).all(|u| {
        (0..n).all(|v| mask.get(u, v) == radial_entry(u / s, v / s, u % s, v % s, s, sink))
    })
}

/// Block occupancy of a token predicate, computed by scanning every token pair.
pub fn blockify_by_scan(
    shape: &GridShape,
    block_size: usize,
    keep: impl Fn(usize, usize) -> bool,
) -> Vec<Vec<bool>> {
    let n = shape.total_tokens();
    let rows = n.div_ceil(block_size);
    let mut grid = vec![vec![false; rows]; rows];
    for u in 0..n {
        for v in 0..n {
            if keep(u, v) {
                grid[u / block_size][v / block_size] = true;
            }
        }
    }
    grid
}

/// Whether a layout's kept blocks are exactly `expected`.
pub fn layout_matches(layout: &BlockLayout, expected: &[Vec<bool>]) -> bool {
    let rows = layout.grid_rows();
    expected.len() == rows
        && (0..rows).all(|r| {
            let cols = layout.row(r);
            let want: Vec<u32> = (0..rows)
                .filter(|&c| expected[r][c])
                .map(|c| c as u32)
                .collect();
            cols == want.as_slice()
        })
}
