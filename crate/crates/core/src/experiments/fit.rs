//! Ordinary least-squares exponent fits in log-log coordinates.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{EdgeError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% interval on the slope.
    pub slope_ci: f64,
    pub points: usize,
}

impl LineFit {
    pub fn contains(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol
    }
}

/// Fit `y = intercept + slope x`. Needs at least three points with distinct `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(EdgeError::FitDegenerate { needed: 3, got: n });
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(EdgeError::FitDegenerate { needed: 3, got: 1 });
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (ssr / (n - 2) as f64 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 2) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Ok(LineFit {
        slope,
        intercept,
        slope_ci: t * se,
        points: n,
    })
}

/// Fit `log y = c + slope log x` over positive pairs.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [0.2, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(0.5)).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.slope_ci < 1e-10);
    }

    #[test]
    fn interval_uses_student_t() {
        // residuals +-1 around y = x on four points
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 0.0, 3.0, 2.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-12);
        // ssr = 3.2, sxx = 5, t(0.975, 2) = 4.302653
        let want = 4.302652729911275 * (3.2f64 / 2.0 / 5.0).sqrt();
        assert!((f.slope_ci - want).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            fit_line(&[1.0, 2.0], &[1.0, 2.0]),
            Err(EdgeError::FitDegenerate { needed: 3, got: 2 })
        ));
        assert!(fit_line(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_power_law(&[0.1, 0.2, 0.3], &[0.0, 1.0, 2.0]).is_err());
    }
}
