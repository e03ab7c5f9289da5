//! Video latent geometry and the band arithmetic of the radial mask.
//!
//! A latent video is `f` frames of `s` tokens each. Tokens are flattened
//! frame-major, so token `u` sits at frame `u / s`, spatial position `u % s`.
//! The frame-to-frame attention map is cut into diagonal bands by the
//! exponent `e = floor(log2(max(|i - j|, 1)))`; everything else in this
//! module is derived from that exponent.

use std::fmt;

use crate::error::{Error, Result};

/// Largest token count a [`GridShape`] accepts.
pub const MAX_TOKENS: u64 = 1 << 32;

/// `f` frames of `s` tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridShape {
    frames: usize,
    tokens_per_frame: usize,
}

impl GridShape {
    pub fn new(frames: usize, tokens_per_frame: usize) -> Result<Self> {
        if frames == 0 || tokens_per_frame == 0 {
            return Err(Error::InvalidShape(format!(
                "frames ({frames}) and tokens per frame ({tokens_per_frame}) must both be positive"
            )));
        }
        let total = (frames as u64)
            .checked_mul(tokens_per_frame as u64)
            .filter(|&n| n <= MAX_TOKENS)
            .ok_or_else(|| {
                Error::InvalidShape(format!(
                    "{frames} x {tokens_per_frame} tokens exceeds the 2^32 token limit"
                ))
            })?;
        usize::try_from(total)
            .map_err(|_| Error::InvalidShape("token count does not fit in usize".into()))?;
        Ok(Self {
            frames,
            tokens_per_frame,
        })
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn tokens_per_frame(&self) -> usize {
        self.tokens_per_frame
    }

    /// `n = f * s`.
    #[inline]
    pub fn total_tokens(&self) -> usize {
        self.frames * self.tokens_per_frame
    }

    /// Splits a flat token index into `(frame, position)`.
    #[inline]
    pub fn split(&self, token: usize) -> (usize, usize) {
        (token / self.tokens_per_frame, token % self.tokens_per_frame)
    }

    /// Flat token index of `position` in `frame`.
    #[inline]
    pub fn token(&self, frame: usize, position: usize) -> usize {
        frame * self.tokens_per_frame + position
    }

    pub(crate) fn check_frame(&self, name: &'static str, frame: usize) -> Result<()> {
        if frame < self.frames {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                name,
                value: frame,
                limit: self.frames,
            })
        }
    }

    pub(crate) fn check_position(&self, name: &'static str, position: usize) -> Result<()> {
        if position < self.tokens_per_frame {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                name,
                value: position,
                limit: self.tokens_per_frame,
            })
        }
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.frames, self.tokens_per_frame)
    }
}

/// `floor(log2(max(distance, 1)))`.
#[inline]
pub fn band_exponent(distance: usize) -> u32 {
    distance.max(1).ilog2()
}

/// Signed band of the frame pair `(i, j)`: `sign(j - i) * floor(log2(max(|i - j|, 1)))`.
pub fn band_index(i: usize, j: usize) -> i64 {
    let e = i64::from(band_exponent(i.abs_diff(j)));
    match j.cmp(&i) {
        std::cmp::Ordering::Greater => e,
        std::cmp::Ordering::Less => -e,
        std::cmp::Ordering::Equal => 0,
    }
}

/// Number of bands in an `f`-frame attention map, `2 * ceil(log2(max(f, 2))) - 1`.
pub fn num_bands(frames: usize) -> usize {
    let f = frames.max(2);
    let ceil_log2 = (f - 1).ilog2() as usize + 1;
    2 * ceil_log2 - 1
}

/// Exact rational `numer / denom` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub numer: u64,
    pub denom: u64,
}

impl Ratio {
    pub fn new(numer: u64, denom: u64) -> Self {
        assert!(denom > 0, "zero denominator");
        let g = gcd(numer, denom).max(1);
        Self {
            numer: numer / g,
            denom: denom / g,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }

    /// Whether a spatial offset fits under this width, i.e. `offset + 1 <= numer / denom`.
    #[inline]
    pub fn admits(&self, offset: usize) -> bool {
        (offset as u128 + 1) * self.denom as u128 <= self.numer as u128
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom == 1 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/{}", self.numer, self.denom)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Diagonal width `s / 2^e` of the frame pair `(i, j)`, kept exact.
///
/// The keep test compares `|k - l| + 1` against this rational directly, so
/// `s = 6` at distance 4 gives `3/2` and only the `k = l` diagonal survives.
pub fn diagonal_width(i: usize, j: usize, shape: &GridShape) -> Ratio {
    let e = band_exponent(i.abs_diff(j));
    Ratio::new(shape.tokens_per_frame() as u64, 1u64 << e)
}

/// Frame stride `ceil(2^e / s)` at which same-position diagonals are kept
/// once the diagonal width has dropped below one token.
pub fn keep_period(i: usize, j: usize, shape: &GridShape) -> usize {
    let span = 1usize << band_exponent(i.abs_diff(j));
    span.div_ceil(shape.tokens_per_frame())
}
