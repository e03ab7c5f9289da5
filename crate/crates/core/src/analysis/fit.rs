//! Least-squares fit of `y = exp(-a x + b)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub a: f64,
    pub b: f64,
    /// Coefficient of determination of the line fit to `ln y`.
    pub r2: f64,
    /// Coefficient of determination of `exp(-a x + b)` against `y`.
    pub r2_linear: f64,
}

impl DecayFit {
    pub fn predict(&self, x: f64) -> f64 {
        (-self.a * x + self.b).exp()
    }
}

fn coefficient_of_determination(ss_res: f64, ss_tot: f64) -> f64 {
    // constant ordinates leave nothing to explain; count a perfect fit as 1
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Fits by ordinary least squares on `(x, ln y)`.
///
/// Every `y` must be positive and every `x` finite and nonnegative; at least
/// two distinct `x` are required. Errors name the offending point's index.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<DecayFit> {
    for (row, &(x, y)) in points.iter().enumerate() {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::BadSample {
                row,
                reason: format!("x must be finite and nonnegative, got {x}"),
            });
        }
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::BadSample {
                row,
                reason: format!("y must be finite and positive, got {y}"),
            });
        }
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let logs: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mean_l = logs.iter().sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return Err(Error::param("points", "need at least two distinct x values"));
    }
    let sxl: f64 = points
        .iter()
        .zip(&logs)
        .map(|(p, l)| (p.0 - mean_x) * (l - mean_l))
        .sum();
    let slope = sxl / sxx;
    // + 0.0 turns a -0.0 slope into 0.0
    let a = -slope + 0.0;
    let b = mean_l - slope * mean_x;

    let ss_tot: f64 = logs.iter().map(|l| (l - mean_l).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .zip(&logs)
        .map(|(p, l)| (l - (b - a * p.0)).powi(2))
        .sum();
    let r2 = coefficient_of_determination(ss_res, ss_tot);

    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let lin_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let lin_res: f64 = points
        .iter()
        .map(|p| (p.1 - (b - a * p.0).exp()).powi(2))
        .sum();
    let r2_linear = coefficient_of_determination(lin_res, lin_tot);

    Ok(DecayFit {
        a,
        b,
        r2: r2.min(1.0),
        r2_linear: r2_linear.min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_recovery() {
        let pts: Vec<_> = (0..20).map(|x| (x as f64, (-0.5 * x as f64 + 1.0).exp())).collect();
        let fit = fit_exponential(&pts).unwrap();
        assert!((fit.a - 0.5).abs() < 1e-12);
        assert!((fit.b - 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.r2_linear - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_data() {
        let fit = fit_exponential(&[(0.0, 3.0), (1.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_eq!(fit.a, 0.0);
        assert!(fit.a.is_sign_positive());
        assert!((fit.b - 3f64.ln()).abs() < 1e-15);
        assert_eq!(fit.r2, 1.0);
        assert_eq!(fit.r2_linear, 1.0);
    }

    #[test]
    fn noisy_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<_> = (0..40)
            .map(|x| {
                let noise = 1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0);
                (x as f64, (-0.3 * x as f64 + 2.0).exp() * noise)
            })
            .collect();
        let fit = fit_exponential(&pts).unwrap();
        assert!((fit.a - 0.3).abs() < 0.05 * 0.3, "{fit:?}");
        assert!(fit.r2 >= 0.98);
    }

    #[test]
    fn rejects_bad_points() {
        assert_eq!(
            fit_exponential(&[(0.0, 1.0), (1.0, 0.0)]),
            Err(Error::BadSample {
                row: 1,
                reason: "y must be finite and positive, got 0".into()
            })
        );
        assert!(matches!(
            fit_exponential(&[(-1.0, 1.0), (1.0, 1.0)]),
            Err(Error::BadSample { row: 0, .. })
        ));
        assert!(fit_exponential(&[(2.0, 1.0), (2.0, 3.0)]).is_err());
        assert!(fit_exponential(&[(2.0, 1.0)]).is_err());
        assert!(fit_exponential(&[]).is_err());
    }
}
