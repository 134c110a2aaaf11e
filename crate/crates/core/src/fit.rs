//! Log-log power-law fitting shared by the spectral and time-domain modules.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Fitted power law `y = amplitude * x^exponent` over a stated window.
#[derive(Debug, Clone)]
pub struct DecayFit<T: Real> {
    pub exponent: T,
    pub amplitude: T,
    pub window: (T, T),
    /// Largest absolute log-log deviation from the fit.
    pub residual: T,
}

/// Least-squares line through `(x, y)`; returns (slope, intercept, max |dev|).
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> Result<(T, T, T)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::contract("fit needs at least two matched points"));
    }
    let n = real::<T>(x.len() as f64);
    let mut sx = T::zero();
    let mut sy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sx += a;
        sy += b;
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == T::zero() {
        return Err(Error::contract("fit abscissae are all identical"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut max_dev = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        max_dev = max_dev.max((b - slope * a - intercept).abs());
    }
    Ok((slope, intercept, max_dev))
}

/// Power-law fit of positive samples `y_i ~ C x_i^p` by regression in
/// log-log coordinates.
pub fn power_law_fit<T: Real>(x: &[T], y: &[T]) -> Result<DecayFit<T>> {
    if x.iter().any(|&v| v <= T::zero()) || y.iter().any(|&v| v <= T::zero()) {
        return Err(Error::contract("power-law fit needs positive samples"));
    }
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&lx, &ly)?;
    let lo = x.iter().cloned().fold(T::infinity(), T::min);
    let hi = x.iter().cloned().fold(T::neg_infinity(), T::max);
    Ok(DecayFit {
        exponent: slope,
        amplitude: intercept.exp(),
        window: (lo, hi),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law_is_recovered() {
        let x: Vec<f64> = (1..40).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 4.0 * t.powi(-2)).collect();
        let fit = power_law_fit(&x, &y).unwrap();
        assert_relative_eq!(fit.exponent, -2.0, epsilon = 1e-12);
        assert_relative_eq!(fit.amplitude, 4.0, epsilon = 1e-10);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.window, (1.0, 39.0));
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(power_law_fit(&[1.0f64], &[1.0]).is_err());
        assert!(power_law_fit(&[1.0f64, 2.0], &[0.0, 1.0]).is_err());
        assert!(linear_fit(&[1.0f64, 1.0], &[0.0, 1.0]).is_err());
    }
}
