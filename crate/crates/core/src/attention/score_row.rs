use std::ops::Range;

use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::mask::KeySelector;

/// `Z = Z_keep + Z_out` for one row of unnormalized scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub z: f64,
    pub z_keep: f64,
    pub z_out: f64,
}

/// ℓ1 distance between the exact and the masked softmax row, computed twice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowError {
    /// `sum |p~ - p|` over the probability vectors.
    pub direct: f64,
    /// `2 Z_out / Z`.
    pub identity: f64,
    pub normalizers: Normalizers,
}

impl RowError {
    pub fn value(&self) -> f64 {
        self.identity
    }

    pub fn discrepancy(&self) -> f64 {
        (self.direct - self.identity).abs()
    }
}

/// ℓ1 error of masking `scores` (nonnegative, unnormalized) down to `kept`.
/// `None` when nothing is kept.
pub fn l1_from_scores(scores: &[f64], kept: &[Range<usize>]) -> Option<RowError> {
    if kept.iter().all(|r| r.is_empty()) {
        return None;
    }
    let mut z_keep = 0.0;
    let mut z_out = 0.0;
    let mut cursor = 0;
    for r in kept {
        z_out += scores[cursor..r.start].iter().sum::<f64>();
        z_keep += scores[r.clone()].iter().sum::<f64>();
        cursor = r.end;
    }
    z_out += scores[cursor..].iter().sum::<f64>();
    let z = z_keep + z_out;
    let normalizers = Normalizers { z, z_keep, z_out };
    let identity = 2.0 * z_out / z;
    if z_keep == 0.0 {
        // kept keys all underflowed; the masked row is undefined, treat as total loss
        return Some(RowError {
            direct: 2.0,
            identity,
            normalizers,
        });
    }
    let mut direct = 0.0;
    let mut cursor = 0;
    for r in kept {
        direct += scores[cursor..r.start].iter().map(|a| a / z).sum::<f64>();
        direct += scores[r.clone()]
            .iter()
            .map(|a| (a / z_keep - a / z).abs())
            .sum::<f64>();
        cursor = r.end;
    }
    direct += scores[cursor..].iter().map(|a| a / z).sum::<f64>();
    Some(RowError {
        direct,
        identity,
        normalizers,
    })
}

/// One unnormalized attention row `a_{j,l}` anchored at query `(i0, k0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    shape: GridShape,
    query_frame: usize,
    query_pos: usize,
    scores: Vec<f64>,
}

impl ScoreRow {
    pub fn new(shape: GridShape, query_frame: usize, query_pos: usize, scores: Vec<f64>) -> Result<Self> {
        shape.check_frame("query_frame", query_frame)?;
        shape.check_position("query_pos", query_pos)?;
        if scores.len() != shape.total_tokens() {
            return Err(Error::ShapeMismatch(format!(
                "score row has {} entries, grid has {} tokens",
                scores.len(),
                shape.total_tokens()
            )));
        }
        if scores.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::param("scores", "must be finite and nonnegative"));
        }
        let anchor = scores[shape.token(query_frame, query_pos)];
        if anchor <= 0.0 {
            return Err(Error::param("scores", "anchor score must be positive"));
        }
        Ok(Self {
            shape,
            query_frame,
            query_pos,
            scores,
        })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn query_frame(&self) -> usize {
        self.query_frame
    }

    pub fn query_pos(&self) -> usize {
        self.query_pos
    }

    pub fn query_token(&self) -> usize {
        self.shape.token(self.query_frame, self.query_pos)
    }

    /// `a_0 = a_{i0,k0}`.
    pub fn anchor(&self) -> f64 {
        self.scores[self.query_token()]
    }

    pub fn score(&self, frame: usize, pos: usize) -> f64 {
        self.scores[self.shape.token(frame, pos)]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn l1_error<M: KeySelector + ?Sized>(&self, mask: &M) -> Result<RowError> {
        if mask.total_tokens() != self.scores.len() {
            return Err(Error::ShapeMismatch("mask and score row disagree on n".into()));
        }
        let mut ranges = Vec::new();
        mask.kept_ranges(self.query_token(), &mut ranges);
        l1_from_scores(&self.scores, &ranges).ok_or(Error::FullyMaskedRow {
            row: self.query_token(),
        })
    }

    pub fn normalizers<M: KeySelector + ?Sized>(&self, mask: &M) -> Result<Normalizers> {
        self.l1_error(mask).map(|e| e.normalizers)
    }
}
