//! Synthetic attention rows and instances obeying relative exponential decay:
//! every score is at most `c_rel * exp(-alpha * dt - beta * dx)` times the
//! query's own score.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AttentionInstance, Matrix, ScoreRow};
use crate::analysis::DecayParams;
use crate::error::Result;
use crate::grid::GridShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecayMode {
    /// Every score sits exactly on the envelope, which maximizes the mass
    /// a mask can drop.
    WorstCase,
    /// Envelope times independent uniform(0, 1] factors.
    Random,
}

impl DecayMode {
    fn factor(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            DecayMode::WorstCase => 1.0,
            DecayMode::Random => 1.0 - rng.random::<f64>(),
        }
    }
}

fn envelope_exponent(params: &DecayParams, dt: usize, dx: usize) -> f64 {
    -params.alpha * dt as f64 - params.beta * dx as f64
}

/// One score row anchored at `(query_frame, query_pos)` with anchor score 1.
pub fn synth_decay_row(
    shape: &GridShape,
    query_frame: usize,
    query_pos: usize,
    params: &DecayParams,
    mode: DecayMode,
    seed: u64,
) -> Result<ScoreRow> {
    params.validate()?;
    shape.check_frame("query_frame", query_frame)?;
    shape.check_position("query_pos", query_pos)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = shape.tokens_per_frame();
    let anchor = shape.token(query_frame, query_pos);
    let scores = (0..shape.total_tokens())
        .map(|v| {
            let factor = mode.factor(&mut rng);
            if v == anchor {
                return 1.0;
            }
            let (j, l) = (v / s, v % s);
            let e = envelope_exponent(params, j.abs_diff(query_frame), l.abs_diff(query_pos));
            params.c_rel * e.exp() * factor
        })
        .collect();
    ScoreRow::new(*shape, query_frame, query_pos, scores)
}

/// A full instance whose every row is a decay row anchored at its own query.
///
/// Logits are written directly (`ln(c_rel) - alpha dt - beta dx + ln(noise)`,
/// zero on the diagonal) rather than factored through Q and K. V is a seeded
/// standard normal `n x head_dim` matrix.
pub fn synth_decay_instance(
    shape: &GridShape,
    params: &DecayParams,
    mode: DecayMode,
    head_dim: usize,
    seed: u64,
) -> Result<AttentionInstance> {
    params.validate()?;
    if head_dim == 0 {
        return Err(crate::error::Error::param("head_dim", "must be at least 1"));
    }
    let n = shape.total_tokens();
    let s = shape.tokens_per_frame();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_c = params.c_rel.ln();
    let mut logits = Vec::with_capacity(n * n);
    for u in 0..n {
        let (i, k) = (u / s, u % s);
        for v in 0..n {
            let factor = mode.factor(&mut rng);
            if u == v {
                logits.push(0.0);
                continue;
            }
            let (j, l) = (v / s, v % s);
            logits.push(log_c + envelope_exponent(params, i.abs_diff(j), k.abs_diff(l)) + factor.ln());
        }
    }
    let logits = Matrix::new(n, n, logits)?;
    let mut v_rng = ChaCha8Rng::seed_from_u64(seed);
    v_rng.set_stream(1);
    let v = Matrix::standard_normal(n, head_dim, v_rng.random());
    AttentionInstance::from_logits(*shape, logits, v)
}
