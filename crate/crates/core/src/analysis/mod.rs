//! Executable forms of the mask's guarantees: region-wise complexity
//! bounds, the softmax approximation bound under exponential decay, decay
//! regression and budget matching between patterns.

mod budget;
mod compare;
mod complexity;
mod curves;
mod error_bound;
mod fit;

pub use budget::{budget_match, BudgetMatch};
pub use compare::{compare_patterns, mask_error, match_budgets, ComparisonRow, MaskError, MatchedPattern};
pub use complexity::{
    doubling_profile, region_zero_bounds, verify_complexity, ComplexityReport, GrowthStep,
    RegionBounds,
};
pub use curves::{decay_curves, decay_curves_of, DecayCurves};
pub use error_bound::{
    error_bound, verify_error_bound, ErrorBoundConfig, ErrorBoundReport, ModeSummary, TrialOutcome,
};
pub use fit::{fit_exponential, DecayFit};

use crate::error::{Error, Result};

/// Temporal rate `alpha`, spatial rate `beta` and relative constant `c_rel`
/// of the decay envelope `c_rel * exp(-alpha * dt - beta * dx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    pub alpha: f64,
    pub beta: f64,
    pub c_rel: f64,
}

impl DecayParams {
    pub fn new(alpha: f64, beta: f64, c_rel: f64) -> Result<Self> {
        let p = Self { alpha, beta, c_rel };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("alpha", self.alpha), ("beta", self.beta), ("c_rel", self.c_rel)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::param(name, format!("must be finite and positive, got {x}")));
            }
        }
        Ok(())
    }

    /// The ℓ1 bound for a grid with `s` tokens per frame.
    pub fn error_bound(&self, tokens_per_frame: usize) -> f64 {
        error_bound(self.alpha, self.beta, self.c_rel, tokens_per_frame)
            .expect("validated parameters")
    }
}
