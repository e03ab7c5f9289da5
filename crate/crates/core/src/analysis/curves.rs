//! Average attention probability as a function of temporal and spatial
//! distance.

use crate::attention::{attention_probabilities, AttentionInstance, Matrix};
use crate::error::{Error, Result};
use crate::grid::GridShape;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurves {
    /// `(dt, mean p)` over pairs at the same position `dt` frames apart.
    pub temporal: Vec<(usize, f64)>,
    /// `(dx, mean p)` over pairs in one frame `dx` positions apart.
    pub spatial: Vec<(usize, f64)>,
}

impl DecayCurves {
    /// Points with positive mean, as `(x, y)` pairs ready for
    /// [`fit_exponential`](super::fit_exponential).
    pub fn temporal_points(&self) -> Vec<(f64, f64)> {
        positive_points(&self.temporal)
    }

    pub fn spatial_points(&self) -> Vec<(f64, f64)> {
        positive_points(&self.spatial)
    }
}

fn positive_points(curve: &[(usize, f64)]) -> Vec<(f64, f64)> {
    curve
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|&(x, y)| (x as f64, y))
        .collect()
}

/// Curves of a row-stochastic `n x n` probability matrix laid out on `shape`.
pub fn decay_curves(probs: &Matrix, shape: &GridShape) -> Result<DecayCurves> {
    let n = shape.total_tokens();
    if probs.rows() != n || probs.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "probability matrix is {}x{}, grid has {n} tokens",
            probs.rows(),
            probs.cols()
        )));
    }
    if !probs.is_finite() {
        return Err(Error::NonFinite("probability matrix"));
    }
    let f = shape.frames();
    let s = shape.tokens_per_frame();

    let mut t_sum = vec![0.0; f];
    let mut t_count = vec![0u64; f];
    for i in 0..f {
        for j in 0..f {
            let dt = i.abs_diff(j);
            for k in 0..s {
                t_sum[dt] += probs.get(shape.token(i, k), shape.token(j, k));
            }
            t_count[dt] += s as u64;
        }
    }

    let mut x_sum = vec![0.0; s];
    let mut x_count = vec![0u64; s];
    for i in 0..f {
        for k in 0..s {
            let row = probs.row(shape.token(i, k));
            for l in 0..s {
                x_sum[k.abs_diff(l)] += row[shape.token(i, l)];
            }
        }
    }
    for k in 0..s {
        for l in 0..s {
            x_count[k.abs_diff(l)] += f as u64;
        }
    }

    let curve = |sum: Vec<f64>, count: Vec<u64>| {
        sum.into_iter()
            .zip(count)
            .enumerate()
            .map(|(d, (total, c))| (d, total / c as f64))
            .collect()
    };
    Ok(DecayCurves {
        temporal: curve(t_sum, t_count),
        spatial: curve(x_sum, x_count),
    })
}

/// Curves of the softmax probabilities of `inst`.
pub fn decay_curves_of(inst: &AttentionInstance) -> Result<DecayCurves> {
    decay_curves(&attention_probabilities(inst), inst.shape())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_exponential, DecayParams};
    use crate::attention::{synth_decay_instance, DecayMode};

    #[test]
    fn uniform_attention_is_flat() {
        let g = GridShape::new(3, 4).unwrap();
        let inst = AttentionInstance::from_logits(g, Matrix::zeros(12, 12), Matrix::zeros(12, 1)).unwrap();
        let c = decay_curves_of(&inst).unwrap();
        assert_eq!(c.temporal.len(), 3);
        assert_eq!(c.spatial.len(), 4);
        for (_, y) in c.temporal.iter().chain(&c.spatial) {
            assert!((y - 1.0 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_token() {
        let g = GridShape::new(1, 1).unwrap();
        let c = decay_curves(&Matrix::new(1, 1, vec![1.0]).unwrap(), &g).unwrap();
        assert_eq!(c.temporal, vec![(0, 1.0)]);
        assert_eq!(c.spatial, vec![(0, 1.0)]);
    }

    #[test]
    fn worst_case_curves_are_nonincreasing() {
        let g = GridShape::new(10, 8).unwrap();
        let p = DecayParams::new(0.4, 0.6, 1.0).unwrap();
        let inst = synth_decay_instance(&g, &p, DecayMode::WorstCase, 2, 0).unwrap();
        let c = decay_curves_of(&inst).unwrap();
        for w in c.temporal.windows(2).chain(c.spatial.windows(2)) {
            assert!(w[1].1 <= w[0].1, "{w:?}");
        }
    }

    #[test]
    fn generator_rates_are_recovered() {
        let g = GridShape::new(16, 16).unwrap();
        let p = DecayParams::new(0.5, 0.8, 1.0).unwrap();
        let inst = synth_decay_instance(&g, &p, DecayMode::WorstCase, 2, 0).unwrap();
        let c = decay_curves_of(&inst).unwrap();
        let ta = fit_exponential(&c.temporal_points()).unwrap().a;
        let sa = fit_exponential(&c.spatial_points()).unwrap().a;
        assert!((ta - 0.5).abs() < 0.05, "{ta}");
        assert!((sa - 0.8).abs() < 0.08, "{sa}");
    }

    #[test]
    fn rejects_wrong_size() {
        let g = GridShape::new(2, 2).unwrap();
        assert!(decay_curves(&Matrix::zeros(3, 3), &g).is_err());
    }
}
