//! Side-by-side error of several patterns on one attention instance.

use rayon::prelude::*;

use super::budget_match;
use crate::attention::{dense_attention, masked_attention, output_mse, row_l1_error, AttentionInstance, Matrix};
use crate::blocksparse::{blockify, sparsity, BlockLayout};
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::pattern::PatternSpec;

/// Error of a block layout against exact attention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskError {
    /// Mean over query rows of `||p~ - p||_1`.
    pub mean_l1: f64,
    pub max_l1: f64,
    /// Mean squared difference of the attention outputs.
    pub output_mse: f64,
}

/// Measures `layout` on `inst`; `dense` is `dense_attention(inst)`.
pub fn mask_error(inst: &AttentionInstance, layout: &BlockLayout, dense: &Matrix) -> Result<MaskError> {
    let n = inst.shape().total_tokens();
    if layout.shape() != inst.shape() {
        return Err(Error::ShapeMismatch(format!(
            "layout is on {}, instance on {}",
            layout.shape(),
            inst.shape()
        )));
    }
    let errors: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|u| row_l1_error(inst, layout, u).map(|e| e.value()))
        .collect::<Result<_>>()?;
    let masked = masked_attention(inst, layout)?;
    Ok(MaskError {
        mean_l1: errors.iter().sum::<f64>() / n as f64,
        max_l1: errors.iter().copied().fold(0.0, f64::max),
        output_mse: output_mse(&masked, dense)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchedPattern {
    pub pattern: PatternSpec,
    pub kept_blocks: u64,
    /// Windows were retuned to the radial budget.
    pub tuned: bool,
}

/// Retunes every tunable pattern to the kept-block count of the radial mask
/// (with sink) at `block_size`; the rest are passed through unchanged.
pub fn match_budgets(patterns: &[PatternSpec], shape: &GridShape, block_size: usize) -> Result<Vec<MatchedPattern>> {
    let reference = blockify(shape, &PatternSpec::radial(), block_size)?.kept_blocks();
    patterns
        .iter()
        .map(|p| {
            p.validate()?;
            Ok(match budget_match(p, reference, shape, block_size) {
                Ok(m) => MatchedPattern {
                    pattern: m.pattern,
                    kept_blocks: m.kept_blocks,
                    tuned: true,
                },
                Err(Error::NotTunable(_)) => MatchedPattern {
                    pattern: *p,
                    kept_blocks: blockify(shape, p, block_size)?.kept_blocks(),
                    tuned: false,
                },
                Err(e) => return Err(e),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub matched: MatchedPattern,
    pub sparsity: f64,
    pub error: MaskError,
}

/// Budget-matches `patterns` and measures each on `inst`.
pub fn compare_patterns(
    inst: &AttentionInstance,
    patterns: &[PatternSpec],
    block_size: usize,
) -> Result<Vec<ComparisonRow>> {
    let shape = *inst.shape();
    let dense = dense_attention(inst);
    match_budgets(patterns, &shape, block_size)?
        .into_iter()
        .map(|matched| {
            let layout = blockify(&shape, &matched.pattern, block_size)?;
            Ok(ComparisonRow {
                matched,
                sparsity: sparsity(&layout),
                error: mask_error(inst, &layout, &dense)?,
            })
        })
        .collect()
}
