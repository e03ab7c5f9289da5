//! Window selection that equalizes kept-block counts between patterns.

use crate::blocksparse::blockify;
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::pattern::{PatternKind, PatternSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetMatch {
    /// The target pattern with its windows replaced.
    pub pattern: PatternSpec,
    pub kept_blocks: u64,
    /// Even the smallest windows keep more than the reference count.
    pub under_budget: bool,
}

fn kept(shape: &GridShape, pattern: &PatternSpec, block_size: usize) -> Result<u64> {
    Ok(blockify(shape, pattern, block_size)?.kept_blocks())
}

/// Closest candidate along one monotone window axis `0..=max`.
/// Returns `(window, count)`, preferring the smaller window on ties.
fn closest_on_axis(
    reference: u64,
    max: usize,
    count: impl Fn(usize) -> Result<u64>,
) -> Result<(usize, u64)> {
    // first window whose count reaches `target`, or max + 1
    let first_reaching = |target: u64| -> Result<usize> {
        let (mut lo, mut hi) = (0usize, max + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if count(mid)? >= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    };
    let up = first_reaching(reference)?;
    if up == 0 {
        return Ok((0, count(0)?));
    }
    let below = count(up - 1)?;
    if up <= max {
        let above = count(up)?;
        if above - reference < reference - below {
            return Ok((up, above));
        }
    }
    Ok((first_reaching(below)?, below))
}

/// Retunes the windows of `target` so its kept-block count at `block_size`
/// is as close as possible to `reference_count`.
///
/// `spatial` sweeps its frame window over `0..f`, `temporal` its token
/// window over `0..s`, `sta` both (every spatial window, the best frame
/// window for each). Counts are monotone in each window, so each axis is
/// searched by bisection. Ties go to the smaller spatial window, then the
/// smaller frame window. The sink flag of `target` is kept.
pub fn budget_match(
    target: &PatternSpec,
    reference_count: u64,
    shape: &GridShape,
    block_size: usize,
) -> Result<BudgetMatch> {
    if block_size == 0 {
        return Err(Error::InvalidBlockSize);
    }
    let max_tw = shape.frames() - 1;
    let max_sw = shape.tokens_per_frame() - 1;
    let with = |tw: Option<usize>, sw: Option<usize>| PatternSpec {
        temporal_window: tw,
        spatial_window: sw,
        ..*target
    };
    let (pattern, kept_blocks, minimal) = match target.kind {
        PatternKind::Spatial => {
            let (tw, c) = closest_on_axis(reference_count, max_tw, |tw| {
                kept(shape, &with(Some(tw), None), block_size)
            })?;
            let p = with(Some(tw), None);
            (p, c, with(Some(0), None))
        }
        PatternKind::Temporal => {
            let (sw, c) = closest_on_axis(reference_count, max_sw, |sw| {
                kept(shape, &with(None, Some(sw)), block_size)
            })?;
            (with(None, Some(sw)), c, with(None, Some(0)))
        }
        PatternKind::Sta => {
            let mut best: Option<(usize, usize, u64)> = None;
            for sw in 0..=max_sw {
                let (tw, c) = closest_on_axis(reference_count, max_tw, |tw| {
                    kept(shape, &with(Some(tw), Some(sw)), block_size)
                })?;
                if best.is_none_or(|(_, _, b)| c.abs_diff(reference_count) < b.abs_diff(reference_count)) {
                    best = Some((tw, sw, c));
                }
            }
            let (tw, sw, c) = best.expect("at least one spatial window");
            (with(Some(tw), Some(sw)), c, with(Some(0), Some(0)))
        }
        kind => return Err(Error::NotTunable(kind.name())),
    };
    let under_budget = kept(shape, &minimal, block_size)? > reference_count;
    Ok(BudgetMatch {
        pattern,
        kept_blocks,
        under_budget,
    })
}
