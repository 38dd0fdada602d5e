//! Log-log slope fits for convergence studies.

use crate::error::Error;
use crate::Result;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Result of an ordinary least-squares fit of log e against log h.
#[derive(Copy, Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// Symmetric 95% half-width from the regression residuals.
    pub half_width: f64,
}

/// Fit log e = slope · log h + const over the rows (h, e).
pub fn fit_slope(rows: &[(f64, f64)]) -> Result<SlopeFit> {
    if rows.len() < 4 {
        return Err(Error::invalid(format!(
            "slope fit needs at least 4 rows, got {}",
            rows.len()
        )));
    }
    for &(h, e) in rows {
        if !(h.is_finite() && h > 0.0 && e.is_finite() && e > 0.0) {
            return Err(Error::invalid(format!(
                "slope fit rows must be positive and finite, got ({h}, {e})"
            )));
        }
    }
    let m = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|&(h, _)| h.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|&(_, e)| e.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid(
            "slope fit needs at least two distinct abscissae",
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = m - 2.0;
    let sigma2 = (ssr / dof).max(0.0);
    let se = (sigma2 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .expect("valid Student-t parameters")
        .inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        half_width: t * se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_has_zero_width() {
        let rows: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&h: &f64| (h, h * h))
            .collect();
        let fit = fit_slope(&rows).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.half_width < 1e-10);
    }

    #[test]
    fn inverse_law() {
        let rows: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|&h: &f64| (h, 3.0 / h))
            .collect();
        let fit = fit_slope(&rows).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_three_halves_law() {
        // fixed multiplicative perturbation pattern, no RNG needed
        let noise = [0.01, -0.008, 0.006, -0.01, 0.009, -0.004];
        let rows: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let h = 0.5_f64.powi(k);
                (h, h.powf(1.5) * (1.0 + noise[k as usize]))
            })
            .collect();
        let fit = fit_slope(&rows).unwrap();
        assert!(
            fit.slope > 1.4 && fit.slope < 1.6,
            "slope {} ± {}",
            fit.slope,
            fit.half_width
        );
    }

    #[test]
    fn rejections() {
        assert!(fit_slope(&[(1.0, 1.0), (0.5, 0.5), (0.25, 0.25)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (0.5, 0.5), (0.25, 0.25), (0.1, -0.1)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (1.0, 0.5), (1.0, 0.25), (1.0, 0.1)]).is_err());
    }
}
