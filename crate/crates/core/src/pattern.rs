//! Mask families and their token-level keep predicates.
//!
//! Every family except `power` is decided frame pair by frame pair: for a
//! pair of frames at temporal distance `d` the kept spatial offsets form a
//! band `|k - l| <= h` (possibly empty, possibly the whole block). That
//! [`SpanRule`] drives materialization, streaming counts, blockification and
//! the sparse attention kernels alike. The plain predicates
//! ([`radial_keep`], [`baseline_keep`]) evaluate the formulas directly and
//! are what the rules are tested against.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{band_exponent, diagonal_width, keep_period, GridShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    Radial,
    Dense,
    /// Dense attention inside a temporal window of frames.
    Spatial,
    /// Same-neighbourhood diagonals across every frame.
    Temporal,
    /// Sliding window in both time and space.
    Sta,
    /// Keys at power-of-two distances.
    Power,
    /// Diagonal width inversely proportional to temporal distance.
    Harmonic,
}

impl PatternKind {
    pub const ALL: [PatternKind; 7] = [
        PatternKind::Radial,
        PatternKind::Dense,
        PatternKind::Spatial,
        PatternKind::Temporal,
        PatternKind::Sta,
        PatternKind::Power,
        PatternKind::Harmonic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Radial => "radial",
            PatternKind::Dense => "dense",
            PatternKind::Spatial => "spatial",
            PatternKind::Temporal => "temporal",
            PatternKind::Sta => "sta",
            PatternKind::Power => "power",
            PatternKind::Harmonic => "harmonic",
        }
    }

    /// Tag byte used by the `.ramk` format.
    pub fn code(self) -> u8 {
        match self {
            PatternKind::Radial => 0,
            PatternKind::Dense => 1,
            PatternKind::Spatial => 2,
            PatternKind::Temporal => 3,
            PatternKind::Sta => 4,
            PatternKind::Power => 5,
            PatternKind::Harmonic => 6,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownPattern(s.to_string()))
    }
}

/// A mask family together with its parameters.
///
/// `temporal_window` is a frame distance (read by `spatial` and `sta`),
/// `spatial_window` a token offset (read by `temporal` and `sta`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternSpec {
    pub kind: PatternKind,
    /// Every query also attends to all of frame 0.
    pub sink: bool,
    pub temporal_window: Option<usize>,
    pub spatial_window: Option<usize>,
}

impl PatternSpec {
    fn bare(kind: PatternKind, sink: bool) -> Self {
        Self {
            kind,
            sink,
            temporal_window: None,
            spatial_window: None,
        }
    }

    /// The radial mask with its attention sink.
    pub fn radial() -> Self {
        Self::bare(PatternKind::Radial, true)
    }

    pub fn dense() -> Self {
        Self::bare(PatternKind::Dense, false)
    }

    pub fn spatial(temporal_window: usize) -> Self {
        Self {
            temporal_window: Some(temporal_window),
            ..Self::bare(PatternKind::Spatial, false)
        }
    }

    pub fn temporal(spatial_window: usize) -> Self {
        Self {
            spatial_window: Some(spatial_window),
            ..Self::bare(PatternKind::Temporal, false)
        }
    }

    pub fn sta(temporal_window: usize, spatial_window: usize) -> Self {
        Self {
            temporal_window: Some(temporal_window),
            spatial_window: Some(spatial_window),
            ..Self::bare(PatternKind::Sta, false)
        }
    }

    pub fn power() -> Self {
        Self::bare(PatternKind::Power, false)
    }

    pub fn harmonic() -> Self {
        Self::bare(PatternKind::Harmonic, false)
    }

    /// `kind` with the stock windows: spatial 1 frame, temporal 0 tokens, sta (2, 2).
    pub fn with_default_windows(kind: PatternKind) -> Self {
        match kind {
            PatternKind::Radial => Self::radial(),
            PatternKind::Dense => Self::dense(),
            PatternKind::Spatial => Self::spatial(1),
            PatternKind::Temporal => Self::temporal(0),
            PatternKind::Sta => Self::sta(2, 2),
            PatternKind::Power => Self::power(),
            PatternKind::Harmonic => Self::harmonic(),
        }
    }

    pub fn with_sink(mut self, sink: bool) -> Self {
        self.sink = sink;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let needs_temporal = matches!(self.kind, PatternKind::Spatial | PatternKind::Sta);
        let needs_spatial = matches!(self.kind, PatternKind::Temporal | PatternKind::Sta);
        if needs_temporal && self.temporal_window.is_none() {
            return Err(Error::MissingWindow {
                kind: self.kind.name(),
                field: "temporal_window",
            });
        }
        if needs_spatial && self.spatial_window.is_none() {
            return Err(Error::MissingWindow {
                kind: self.kind.name(),
                field: "spatial_window",
            });
        }
        Ok(())
    }

    /// Kept spatial offsets for a frame pair at temporal distance `distance`,
    /// ignoring the sink. `None` for `power`, which is not frame-structured.
    pub(crate) fn distance_rule(&self, shape: &GridShape, distance: usize) -> Option<SpanRule> {
        let s = shape.tokens_per_frame();
        let rule = match self.kind {
            PatternKind::Dense => SpanRule::Full,
            PatternKind::Radial => {
                let span = 1usize << band_exponent(distance);
                if span <= s {
                    SpanRule::Band(s / span - 1)
                } else if distance.is_multiple_of(span.div_ceil(s)) {
                    SpanRule::Band(0)
                } else {
                    SpanRule::Drop
                }
            }
            PatternKind::Harmonic => {
                let d = distance.max(1);
                if d <= s {
                    SpanRule::Band(s / d - 1)
                } else if distance.is_multiple_of(d.div_ceil(s)) {
                    SpanRule::Band(0)
                } else {
                    SpanRule::Drop
                }
            }
            PatternKind::Spatial => {
                if distance <= self.temporal_window.unwrap_or(0) {
                    SpanRule::Full
                } else {
                    SpanRule::Drop
                }
            }
            PatternKind::Temporal => SpanRule::Band(self.spatial_window.unwrap_or(0)),
            PatternKind::Sta => {
                if distance <= self.temporal_window.unwrap_or(0) {
                    SpanRule::Band(self.spatial_window.unwrap_or(0))
                } else {
                    SpanRule::Drop
                }
            }
            PatternKind::Power => return None,
        };
        Some(rule.normalize(s))
    }

    /// Rule for the ordered frame pair `(i, j)`, sink included.
    pub(crate) fn pair_rule(&self, shape: &GridShape, i: usize, j: usize) -> Option<SpanRule> {
        if self.sink && j == 0 {
            return Some(SpanRule::Full);
        }
        self.distance_rule(shape, i.abs_diff(j))
    }

    /// Keep predicate on flat token indices, without bounds checks.
    pub fn keeps_token_pair(&self, shape: &GridShape, query: usize, key: usize) -> bool {
        let s = shape.tokens_per_frame();
        if self.sink && key < s {
            return true;
        }
        if self.kind == PatternKind::Power {
            return power_distance_kept(query.abs_diff(key));
        }
        let (i, k) = shape.split(query);
        let (j, l) = shape.split(key);
        self.pair_rule(shape, i, j)
            .is_some_and(|rule| rule.admits(k.abs_diff(l)))
    }
}

impl fmt::Display for PatternSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if let Some(t) = self.temporal_window {
            write!(f, "(t={t}")?;
            match self.spatial_window {
                Some(w) => write!(f, ",x={w})")?,
                None => f.write_str(")")?,
            }
        } else if let Some(w) = self.spatial_window {
            write!(f, "(x={w})")?;
        }
        if self.sink {
            f.write_str("+sink")?;
        }
        Ok(())
    }
}

/// Kept spatial offsets within one frame pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SpanRule {
    Drop,
    /// `|k - l| <= h`; always strictly below `s - 1` after normalization.
    Band(usize),
    Full,
}

impl SpanRule {
    fn normalize(self, s: usize) -> Self {
        match self {
            SpanRule::Band(h) if h + 1 >= s => SpanRule::Full,
            other => other,
        }
    }

    #[inline]
    pub(crate) fn admits(self, offset: usize) -> bool {
        match self {
            SpanRule::Drop => false,
            SpanRule::Band(h) => offset <= h,
            SpanRule::Full => true,
        }
    }

    /// Kept key positions for the query positions `lo..=hi`, as one
    /// inclusive interval (the union of the per-query bands is contiguous).
    #[inline]
    pub(crate) fn key_interval(self, lo: usize, hi: usize, s: usize) -> Option<(usize, usize)> {
        match self {
            SpanRule::Drop => None,
            SpanRule::Full => Some((0, s - 1)),
            SpanRule::Band(h) => Some((lo.saturating_sub(h), (hi + h).min(s - 1))),
        }
    }

    /// Kept pairs inside one `s x s` frame block.
    pub(crate) fn count(self, s: usize) -> u128 {
        let s = s as u128;
        match self {
            SpanRule::Drop => 0,
            SpanRule::Full => s * s,
            SpanRule::Band(h) => {
                let h = (h as u128).min(s - 1);
                s + h * (2 * s - h - 1)
            }
        }
    }
}

/// Token distances kept by the power pattern: 0, 1 and every power of two.
#[inline]
pub(crate) fn power_distance_kept(distance: usize) -> bool {
    distance <= 1 || distance.is_power_of_two()
}

fn check_indices(shape: &GridShape, i: usize, j: usize, k: usize, l: usize) -> Result<()> {
    shape.check_frame("i", i)?;
    shape.check_frame("j", j)?;
    shape.check_position("k", k)?;
    shape.check_position("l", l)
}

/// Whether position `k` of frame `i` may attend to position `l` of frame `j`
/// under the radial mask.
pub fn radial_keep(
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    shape: &GridShape,
    sink: bool,
) -> Result<bool> {
    check_indices(shape, i, j, k, l)?;
    let s = shape.tokens_per_frame() as u64;
    let span = 1u64 << band_exponent(i.abs_diff(j));
    let in_band = span <= s && diagonal_width(i, j, shape).admits(k.abs_diff(l));
    let on_kept_diagonal = i.abs_diff(j).is_multiple_of(keep_period(i, j, shape)) && k == l;
    Ok(in_band || on_kept_diagonal || (sink && j == 0))
}

/// Keep predicate for every non-radial family.
pub fn baseline_keep(
    pattern: &PatternSpec,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    shape: &GridShape,
) -> Result<bool> {
    check_indices(shape, i, j, k, l)?;
    pattern.validate()?;
    let dt = i.abs_diff(j);
    let dx = k.abs_diff(l);
    let s = shape.tokens_per_frame();
    let kept = match pattern.kind {
        PatternKind::Radial => return radial_keep(i, j, k, l, shape, pattern.sink),
        PatternKind::Dense => true,
        PatternKind::Spatial => dt <= pattern.temporal_window.unwrap_or_default(),
        PatternKind::Temporal => dx <= pattern.spatial_window.unwrap_or_default(),
        PatternKind::Sta => {
            dt <= pattern.temporal_window.unwrap_or_default()
                && dx <= pattern.spatial_window.unwrap_or_default()
        }
        PatternKind::Power => power_distance_kept(shape.token(i, k).abs_diff(shape.token(j, l))),
        PatternKind::Harmonic => {
            let d = dt.max(1);
            // |k - l| + 1 <= s / d, cross-multiplied
            let in_band = (dx + 1) * d <= s;
            in_band || (d > s && dt.is_multiple_of(d.div_ceil(s)) && dx == 0)
        }
    };
    Ok(kept || (pattern.sink && j == 0))
}

/// Exact number of kept token pairs, without materializing anything.
///
/// Works frame-distance by frame-distance, so full model-size grids
/// (hundreds of frames, thousands of tokens per frame) are instant.
pub fn count_kept(shape: &GridShape, pattern: &PatternSpec) -> Result<u128> {
    pattern.validate()?;
    let f = shape.frames();
    let s = shape.tokens_per_frame();
    if pattern.kind == PatternKind::Power {
        return Ok(count_power(shape, pattern.sink));
    }
    let mut total = 0u128;
    let full = (s as u128) * (s as u128);
    for d in 0..f {
        let rule = pattern
            .distance_rule(shape, d)
            .expect("frame-structured pattern");
        let per_block = rule.count(s);
        let pairs = if d == 0 { f } else { 2 * (f - d) } as u128;
        total += pairs * per_block;
        if pattern.sink {
            // the pair (i = d, j = 0) becomes fully kept
            total += full - per_block;
        }
    }
    Ok(total)
}

fn power_distances(n: usize) -> impl Iterator<Item = usize> {
    std::iter::once(0).chain(std::iter::successors(Some(1usize), |&d| d.checked_mul(2)).take_while(move |&d| d < n))
}

fn count_power(shape: &GridShape, sink: bool) -> u128 {
    let n = shape.total_tokens();
    let mut total: u128 = power_distances(n)
        .map(|d| if d == 0 { n as u128 } else { 2 * (n - d) as u128 })
        .sum();
    if sink {
        for v in 0..shape.tokens_per_frame() {
            let already: usize = power_distances(n)
                .map(|d| {
                    if d == 0 {
                        1
                    } else {
                        usize::from(v + d < n) + usize::from(v >= d)
                    }
                })
                .sum();
            total += (n - already) as u128;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(f: usize, s: usize) -> GridShape {
        GridShape::new(f, s).unwrap()
    }

    #[test]
    fn radial_keep_examples() {
        for s in 1..10 {
            let g = shape(8, s);
            assert!(radial_keep(3, 3, 0, s - 1, &g, false).unwrap());
        }
        let g = shape(64, 8);
        assert!(!radial_keep(0, 17, 2, 2, &g, false).unwrap());
        assert!(radial_keep(0, 16, 2, 2, &g, false).unwrap());
        assert!(radial_keep(50, 0, 7, 3, &g, true).unwrap());
        assert!(!radial_keep(50, 0, 7, 3, &g, false).unwrap());
    }

    #[test]
    fn radial_keep_rejects_out_of_range() {
        let g = shape(4, 4);
        assert!(matches!(
            radial_keep(4, 0, 0, 0, &g, true),
            Err(Error::IndexOutOfRange { name: "i", .. })
        ));
        assert!(radial_keep(0, 0, 0, 4, &g, true).is_err());
    }

    #[test]
    fn baseline_examples() {
        let g = shape(16, 8);
        assert!(!baseline_keep(&PatternSpec::sta(1, 2), 0, 2, 0, 0, &g).unwrap());
        assert!(baseline_keep(&PatternSpec::temporal(0), 0, 9, 4, 4, &g).unwrap());
        assert!(baseline_keep(&PatternSpec::harmonic(), 0, 2, 1, 3, &g).unwrap());
        assert!(baseline_keep(&PatternSpec::harmonic(), 0, 2, 1, 4, &g).unwrap());
        assert!(!baseline_keep(&PatternSpec::harmonic(), 0, 2, 1, 5, &g).unwrap());
        assert!(baseline_keep(&PatternSpec::dense(), 0, 15, 0, 7, &g).unwrap());
    }

    #[test]
    fn missing_window_is_reported() {
        let bad = PatternSpec {
            spatial_window: None,
            ..PatternSpec::sta(1, 1)
        };
        let g = shape(4, 4);
        assert_eq!(
            baseline_keep(&bad, 0, 0, 0, 0, &g),
            Err(Error::MissingWindow {
                kind: "sta",
                field: "spatial_window"
            })
        );
        assert!(count_kept(&g, &bad).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in PatternKind::ALL {
            assert_eq!(kind.name().parse::<PatternKind>().unwrap(), kind);
            assert_eq!(PatternKind::from_code(kind.code()), Some(kind));
        }
        assert!("radiant".parse::<PatternKind>().is_err());
    }

    fn all_patterns() -> Vec<PatternSpec> {
        let mut v = Vec::new();
        for sink in [false, true] {
            v.push(PatternSpec::radial().with_sink(sink));
            v.push(PatternSpec::dense().with_sink(sink));
            v.push(PatternSpec::spatial(1).with_sink(sink));
            v.push(PatternSpec::temporal(1).with_sink(sink));
            v.push(PatternSpec::sta(2, 1).with_sink(sink));
            v.push(PatternSpec::power().with_sink(sink));
            v.push(PatternSpec::harmonic().with_sink(sink));
        }
        v
    }

    #[test]
    fn span_rules_agree_with_direct_predicates() {
        for (f, s) in [(1, 1), (3, 5), (9, 4), (20, 3), (33, 6)] {
            let g = shape(f, s);
            for p in all_patterns() {
                for i in 0..f {
                    for j in 0..f {
                        for k in 0..s {
                            for l in 0..s {
                                let direct = baseline_keep(&p, i, j, k, l, &g).unwrap();
                                let fast = p.keeps_token_pair(&g, g.token(i, k), g.token(j, l));
                                assert_eq!(direct, fast, "{p} {g} ({i},{j},{k},{l})");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn counts_agree_with_enumeration() {
        for (f, s) in [(1, 4), (2, 3), (7, 5), (17, 2), (12, 12)] {
            let g = shape(f, s);
            let n = g.total_tokens();
            for p in all_patterns() {
                let brute = (0..n)
                    .flat_map(|u| (0..n).map(move |v| (u, v)))
                    .filter(|&(u, v)| p.keeps_token_pair(&g, u, v))
                    .count() as u128;
                assert_eq!(count_kept(&g, &p).unwrap(), brute, "{p} {g}");
            }
        }
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_kept(&shape(1, 4), &PatternSpec::radial()).unwrap(), 16);
        assert_eq!(count_kept(&shape(2, 4), &PatternSpec::radial()).unwrap(), 64);
        let g = shape(3600, 3600);
        assert_eq!(
            count_kept(&g, &PatternSpec::dense()).unwrap(),
            (g.total_tokens() as u128).pow(2)
        );
    }
}
