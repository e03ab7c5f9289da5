//! Counting bounds for the radial mask.
//!
//! "Zeros" follows the additive-mask convention: an entry of value 0 is a
//! kept pair. The mask splits into three regions, each bounded separately:
//! the central band plus sink (`4 s^2 f`), the bands whose diagonal width is
//! still at least one token (`4 s^2 f * floor(log2 s)`), and the bands that
//! fall back to strided diagonals (`(floor(log2 f) - floor(log2 s)) * 4 s^2 f`,
//! never negative). For long videos the sum collapses to
//! `4 s^2 f floor(log2 f) <= 4 s n (log2 n - log2 s)`.

use crate::error::Result;
use crate::grid::GridShape;
use crate::pattern::{count_kept, PatternSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBounds {
    pub central_and_sink: u128,
    pub wide_bands: u128,
    pub narrow_bands: u128,
    pub total: u128,
    /// `4 s n (log2 n - log2 s)`.
    pub headline: f64,
}

pub fn region_zero_bounds(shape: &GridShape) -> RegionBounds {
    let f = shape.frames() as u128;
    let s = shape.tokens_per_frame() as u128;
    let unit = 4 * s * s * f;
    let log_f = u128::from(shape.frames().ilog2());
    let log_s = u128::from(shape.tokens_per_frame().ilog2());
    let central_and_sink = unit;
    let wide_bands = unit * log_s;
    let narrow_bands = unit * log_f.saturating_sub(log_s);
    let n = shape.total_tokens() as f64;
    let sf = shape.tokens_per_frame() as f64;
    RegionBounds {
        central_and_sink,
        wide_bands,
        narrow_bands,
        total: central_and_sink + wide_bands + narrow_bands,
        headline: 4.0 * sf * n * (n.log2() - sf.log2()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub shape: GridShape,
    /// Kept pairs of the radial mask with sink.
    pub actual_zeros: u128,
    pub bounds: RegionBounds,
    /// `total + 4 s^2 f`: region total plus slack for the sink, which the
    /// first region shares with the central band.
    pub region_limit: u128,
    pub pass_region: bool,
    /// `4 s^2 f floor(log2 f)`.
    pub headline_limit: u128,
    /// `None` when `f < 2s`, outside the long-video regime the collapsed
    /// bound is derived for.
    pub pass_headline: Option<bool>,
}

impl ComplexityReport {
    pub fn passed(&self) -> bool {
        self.pass_region && self.pass_headline.unwrap_or(true)
    }
}

pub fn verify_complexity(shape: &GridShape) -> Result<ComplexityReport> {
    let actual_zeros = count_kept(shape, &PatternSpec::radial())?;
    let bounds = region_zero_bounds(shape);
    let f = shape.frames() as u128;
    let s = shape.tokens_per_frame() as u128;
    let region_limit = bounds.total + 4 * s * s * f;
    let headline_limit = 4 * s * s * f * u128::from(shape.frames().ilog2());
    let pass_headline = (f >= 2 * s).then_some(actual_zeros <= headline_limit);
    Ok(ComplexityReport {
        shape: *shape,
        actual_zeros,
        bounds,
        region_limit,
        pass_region: actual_zeros <= region_limit,
        headline_limit,
        pass_headline,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthStep {
    pub frames: usize,
    pub kept: u128,
    /// `kept / kept_previous`; `None` for the first entry.
    pub ratio: Option<f64>,
}

/// Radial kept counts along a sequence of frame counts at fixed `s`.
pub fn doubling_profile(tokens_per_frame: usize, frames: &[usize]) -> Result<Vec<GrowthStep>> {
    let mut out: Vec<GrowthStep> = Vec::with_capacity(frames.len());
    for &f in frames {
        let kept = count_kept(&GridShape::new(f, tokens_per_frame)?, &PatternSpec::radial())?;
        let ratio = out.last().map(|p| kept as f64 / p.kept as f64);
        out.push(GrowthStep { frames: f, kept, ratio });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(f: usize, s: usize) -> GridShape {
        GridShape::new(f, s).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let b = region_zero_bounds(&shape(1, 4));
        assert_eq!((b.central_and_sink, b.wide_bands, b.narrow_bands), (64, 128, 0));
        assert_eq!(b.total, 192);
        assert_eq!(b.headline, 0.0);

        assert_eq!(region_zero_bounds(&shape(256, 1)).wide_bands, 0);
    }

    /// Re-derives the three regions by summing the per-band series.
    #[test]
    fn series_agree_with_closed_forms() {
        let (f, s) = (512u128, 64u128);
        let n = f * s;
        let log_s = 6u32;
        let ceil_log_f = 9u32;
        let wide: u128 = (1..=log_s).map(|r| (1u128 << (r + 1)) * s * n * 2 / (1u128 << r)).sum();
        let narrow: u128 = (log_s + 1..=ceil_log_f - 1)
            .map(|_| (1u128 << (log_s + 1)) * n)
            .sum();
        let b = region_zero_bounds(&shape(512, 64));
        assert_eq!(b.central_and_sink, 4 * s * s * f);
        assert_eq!(b.wide_bands, wide);
        assert!(narrow <= b.narrow_bands);
        assert_eq!(b.narrow_bands, 3 * 4 * s * s * f);
        assert_eq!(b.total, b.central_and_sink + b.wide_bands + b.narrow_bands);
        let headline = 4.0 * 64.0 * (n as f64) * ((n as f64).log2() - 6.0);
        assert!((b.headline - headline).abs() < 1e-6 * headline);
    }

    #[test]
    fn verify_examples() {
        let r = verify_complexity(&shape(512, 16)).unwrap();
        assert!(r.pass_region);
        assert_eq!(r.pass_headline, Some(true));

        let r = verify_complexity(&shape(2, 4)).unwrap();
        assert!(r.pass_region);
        assert_eq!(r.pass_headline, None);
    }

    #[test]
    fn profile_ratios() {
        let p = doubling_profile(64, &[256, 512, 1024]).unwrap();
        assert_eq!(p[0].ratio, None);
        for step in &p[1..] {
            let r = step.ratio.unwrap();
            assert!(r > 2.0 && r < 2.3, "{r}");
        }
    }
}
