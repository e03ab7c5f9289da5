//! The ℓ1 bound on the radial mask's softmax error under exponential decay,
//! and an empirical check of it on synthetic rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::DecayParams;
use crate::attention::{synth_decay_row, DecayMode};
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::mask::PatternMask;
use crate::pattern::PatternSpec;

/// `C_rel [ 8 e^{-beta (s/2 + 1)} / ((1 - e^{-alpha})(1 - e^{-beta}))
///        + 4 (1 + e^{-beta}) / (1 - e^{-beta}) * e^{-alpha (s + 1)} / (1 - e^{-alpha}) ]`
///
/// Decays like `C_rel e^{-min(beta/2, alpha) s}`. `c_rel` may be zero here.
pub fn error_bound(alpha: f64, beta: f64, c_rel: f64, tokens_per_frame: usize) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    if !(c_rel.is_finite() && c_rel >= 0.0) {
        return Err(Error::param("c_rel", format!("must be nonnegative, got {c_rel}")));
    }
    if tokens_per_frame == 0 {
        return Err(Error::param("s", "must be at least 1"));
    }
    let s = tokens_per_frame as f64;
    // 1 - e^{-x} without cancellation for small rates
    let one_minus_ea = -(-alpha).exp_m1();
    let one_minus_eb = -(-beta).exp_m1();
    let spatial = 8.0 * (-beta * (s / 2.0 + 1.0)).exp() / (one_minus_ea * one_minus_eb);
    let temporal =
        4.0 * (1.0 + (-beta).exp()) / one_minus_eb * (-alpha * (s + 1.0)).exp() / one_minus_ea;
    Ok(c_rel * (spatial + temporal))
}

/// Random-trial setup: rates drawn uniformly from the given ranges, anchor
/// drawn uniformly over the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundConfig {
    pub shape: GridShape,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub c_rel: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ErrorBoundConfig {
    pub fn new(shape: GridShape, trials: usize, seed: u64) -> Self {
        Self {
            shape,
            alpha_range: (0.1, 2.0),
            beta_range: (0.1, 2.0),
            c_rel: 1.0,
            trials,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub mode: DecayMode,
    pub alpha: f64,
    pub beta: f64,
    pub query_frame: usize,
    pub query_pos: usize,
    pub measured: f64,
    pub bound: f64,
    /// `|direct - 2 Z_out / Z|`.
    pub discrepancy: f64,
}

impl TrialOutcome {
    pub fn ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.measured / self.bound
        } else if self.measured == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within_bound(&self) -> bool {
        self.measured <= self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSummary {
    pub rows: usize,
    pub violations: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Largest ratio observed, with its parameters.
    pub worst: Option<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundReport {
    pub trials: usize,
    pub worst_case: ModeSummary,
    pub random: ModeSummary,
    pub max_discrepancy: f64,
    pub outcomes: Vec<TrialOutcome>,
}

impl ErrorBoundReport {
    pub fn violations(&self) -> usize {
        self.worst_case.violations + self.random.violations
    }

    pub fn all_within_bound(&self) -> bool {
        self.violations() == 0
    }
}

fn summarize(outcomes: &[TrialOutcome], mode: DecayMode) -> ModeSummary {
    let rows: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.mode == mode).collect();
    let violations = rows.iter().filter(|o| !o.within_bound()).count();
    let worst = rows
        .iter()
        .max_by(|a, b| a.ratio().total_cmp(&b.ratio()))
        .map(|o| **o);
    let mean_ratio = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|o| o.ratio()).sum::<f64>() / rows.len() as f64
    };
    ModeSummary {
        rows: rows.len(),
        violations,
        max_ratio: worst.map_or(0.0, |o| o.ratio()),
        mean_ratio,
        worst,
    }
}

/// Measures the radial mask (with sink) on random decay rows and compares
/// each measured ℓ1 error with [`error_bound`].
///
/// Trial `t` draws from stream `t` of a generator seeded with `seed`, so
/// results do not depend on thread scheduling.
pub fn verify_error_bound(config: &ErrorBoundConfig) -> Result<ErrorBoundReport> {
    if config.trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    for (name, (lo, hi)) in [("alpha_range", config.alpha_range), ("beta_range", config.beta_range)] {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::param(name, format!("invalid range [{lo}, {hi}]")));
        }
    }
    let shape = config.shape;
    let mask = PatternMask::new(shape, PatternSpec::radial())?;
    let per_trial: Vec<[TrialOutcome; 2]> = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<[TrialOutcome; 2]> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let (alo, ahi) = config.alpha_range;
            let (blo, bhi) = config.beta_range;
            let alpha = alo + (ahi - alo) * rng.random::<f64>();
            let beta = blo + (bhi - blo) * rng.random::<f64>();
            let query_frame = rng.random_range(0..shape.frames());
            let query_pos = rng.random_range(0..shape.tokens_per_frame());
            let row_seed: u64 = rng.random();
            let params = DecayParams::new(alpha, beta, config.c_rel)?;
            let bound = params.error_bound(shape.tokens_per_frame());
            let run = |mode| -> Result<TrialOutcome> {
                let row = synth_decay_row(&shape, query_frame, query_pos, &params, mode, row_seed)?;
                let e = row.l1_error(&mask)?;
                Ok(TrialOutcome {
                    trial,
                    mode,
                    alpha,
                    beta,
                    query_frame,
                    query_pos,
                    measured: e.value(),
                    bound,
                    discrepancy: e.discrepancy(),
                })
            };
            Ok([run(DecayMode::WorstCase)?, run(DecayMode::Random)?])
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<TrialOutcome> = per_trial.into_iter().flatten().collect();
    let max_discrepancy = outcomes.iter().map(|o| o.discrepancy).fold(0.0, f64::max);
    Ok(ErrorBoundReport {
        trials: config.trials,
        worst_case: summarize(&outcomes, DecayMode::WorstCase),
        random: summarize(&outcomes, DecayMode::Random),
        max_discrepancy,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The bound written out term by term, as printed.
    fn printed_formula(alpha: f64, beta: f64, c: f64, s: f64) -> f64 {
        let ea = (-alpha).exp();
        let eb = (-beta).exp();
        c * (8.0 * (-beta * (s / 2.0 + 1.0)).exp() / ((1.0 - ea) * (1.0 - eb))
            + 4.0 * (1.0 + eb) / (1.0 - eb) * (-alpha * (s + 1.0)).exp() / (1.0 - ea))
    }

    #[test]
    fn point_value() {
        let b = error_bound(1.0, 1.0, 1.0, 8).unwrap();
        assert!((b - 0.1366).abs() < 1e-3, "{b}");
        assert!((b - printed_formula(1.0, 1.0, 1.0, 8.0)).abs() < 1e-14);
    }

    #[test]
    fn vanishes_with_resolution_and_scales_with_c_rel() {
        assert_eq!(error_bound(0.7, 0.4, 0.0, 16).unwrap(), 0.0);
        let b1 = error_bound(0.7, 0.4, 1.0, 16).unwrap();
        let b3 = error_bound(0.7, 0.4, 3.0, 16).unwrap();
        assert!((b3 - 3.0 * b1).abs() < 1e-12 * b3);
        let tail = error_bound(0.5, 0.5, 1.0, 400).unwrap();
        assert!(tail < 1e-40);
        // asymptotic rate e^{-min(beta/2, alpha) s}
        let (a, b) = (0.9, 1.0);
        let r = error_bound(a, b, 1.0, 201).unwrap() / error_bound(a, b, 1.0, 200).unwrap();
        assert!((r.ln() + 0.5).abs() < 1e-3, "{}", r.ln());
    }

    #[test]
    fn monotone_in_every_argument() {
        let grid = [0.1, 0.3, 0.7, 1.2, 2.0];
        for &a in &grid {
            for &b in &grid {
                for s in [1, 2, 5, 8, 16, 33] {
                    let x = error_bound(a, b, 1.0, s).unwrap();
                    assert!(error_bound(a * 1.1, b, 1.0, s).unwrap() < x);
                    assert!(error_bound(a, b * 1.1, 1.0, s).unwrap() < x);
                    assert!(error_bound(a, b, 1.0, s + 1).unwrap() < x);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(error_bound(0.0, 1.0, 1.0, 4).is_err());
        assert!(error_bound(1.0, -0.5, 1.0, 4).is_err());
        assert!(error_bound(1.0, 1.0, -1.0, 4).is_err());
    }

    #[test]
    fn trials_are_reproducible() {
        let cfg = ErrorBoundConfig::new(GridShape::new(16, 8).unwrap(), 20, 3);
        let a = verify_error_bound(&cfg).unwrap();
        let b = verify_error_bound(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outcomes.len(), 40);
        assert!(a.max_discrepancy < 1e-10);
    }

    #[test]
    fn steep_decay_is_nearly_exact() {
        let mut cfg = ErrorBoundConfig::new(GridShape::new(64, 16).unwrap(), 50, 11);
        cfg.alpha_range = (10.0, 10.0);
        cfg.beta_range = (10.0, 10.0);
        let r = verify_error_bound(&cfg).unwrap();
        assert!(r.outcomes.iter().all(|o| o.measured < 1e-8));
    }

    #[test]
    fn envelope_rows_lose_more_mass() {
        let cfg = ErrorBoundConfig::new(GridShape::new(64, 16).unwrap(), 200, 5);
        let r = verify_error_bound(&cfg).unwrap();
        assert!(r.worst_case.mean_ratio > r.random.mean_ratio);
    }
}
