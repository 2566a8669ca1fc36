//! Linear trend removal by ordinary least squares against the timestep index.

use crate::error::{Error, Result};
use crate::features::{FeatureSeries, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearFit {
    pub fn at(&self, i: usize) -> f64 {
        self.intercept + self.slope * i as f64
    }
}

/// OLS fit of `y` against `x = 0, 1, ..., n-1`.
pub fn linear_fit(y: &[f64]) -> Result<LinearFit> {
    let n = y.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "a linear fit needs at least 2 points, got {n}"
        )));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite value {bad} in series"
        )));
    }
    let x_mean = (n - 1) as f64 / 2.0;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &yi) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (yi - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: y_mean - slope * x_mean,
    })
}

/// Residuals of `y` after subtracting its OLS line.
pub fn detrend_values(y: &[f64]) -> Result<Vec<f64>> {
    let fit = linear_fit(y)?;
    Ok(y.iter().enumerate().map(|(i, &v)| v - fit.at(i)).collect())
}

/// Fill `detrended` with each feature column detrended independently.
pub fn detrend(mut series: FeatureSeries) -> Result<FeatureSeries> {
    let degree = detrend_values(&series.avg_degree())?;
    let clustering = detrend_values(&series.avg_clustering())?;
    series.detrended = Some(
        degree
            .into_iter()
            .zip(clustering)
            .map(|(d, c)| FeatureVector::new(d, c))
            .collect(),
    );
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fit_examples() {
        assert_eq!(
            linear_fit(&[3.0, 5.0, 7.0, 9.0]).unwrap(),
            LinearFit {
                slope: 2.0,
                intercept: 3.0
            }
        );
        assert_eq!(
            linear_fit(&[4.0, 4.0, 4.0]).unwrap(),
            LinearFit {
                slope: 0.0,
                intercept: 4.0
            }
        );
        // x = 0,1,2; x̄ = 1, ȳ = 2/3; Sxy = (-1)(-2/3) + 0 + (1)(1/3) = 1; Sxx = 2
        let fit = linear_fit(&[0.0, 1.0, 1.0]).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-15);
        assert!((fit.intercept - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn fit_needs_two_points() {
        assert!(linear_fit(&[1.0]).is_err());
        assert!(linear_fit(&[]).is_err());
        assert!(linear_fit(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn detrend_exact_line_and_keeps_raw() {
        let raw = vec![
            FeatureVector::new(3.0, 0.1),
            FeatureVector::new(5.0, 0.2),
            FeatureVector::new(7.0, 0.3),
            FeatureVector::new(9.0, 0.4),
        ];
        let out = detrend(FeatureSeries::from_raw(raw.clone())).unwrap();
        assert_eq!(out.raw, raw);
        for f in out.detrended.unwrap() {
            assert_eq!(f.avg_degree, 0.0);
            assert!(f.avg_clustering.abs() < 1e-15);
        }
        assert!(detrend(FeatureSeries::from_raw(raw[..1].to_vec())).is_err());
    }

    fn scale(y: &[f64]) -> f64 {
        y.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }

    proptest! {
        #[test]
        fn residuals_have_zero_mean_and_slope(y in prop::collection::vec(-1e3f64..1e3, 2..200)) {
            let r = detrend_values(&y).unwrap();
            let tol = 1e-9 * scale(&y);
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            prop_assert!(mean.abs() <= tol);
            prop_assert!(linear_fit(&r).unwrap().slope.abs() <= tol);
        }

        #[test]
        fn detrend_is_idempotent(y in prop::collection::vec(-1e3f64..1e3, 2..200)) {
            let once = detrend_values(&y).unwrap();
            let twice = detrend_values(&once).unwrap();
            let tol = 1e-9 * scale(&y);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= tol);
            }
        }

        #[test]
        fn added_line_is_removed(
            y in prop::collection::vec(-1e3f64..1e3, 2..200),
            a in -1e3f64..1e3,
            b in -10f64..10.0,
        ) {
            let shifted: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + a + b * i as f64).collect();
            let r1 = detrend_values(&y).unwrap();
            let r2 = detrend_values(&shifted).unwrap();
            let tol = 1e-9 * scale(&shifted);
            for (p, q) in r1.iter().zip(&r2) {
                prop_assert!((p - q).abs() <= tol);
            }
        }
    }
}
