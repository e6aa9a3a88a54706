use std::f64::consts::LN_2;

use nalgebra::DVector;

use super::linalg::{SpdFactor, SymMatrix};
use super::normal::{ln_normal_cdf, LN_SQRT_2PI};
use crate::error::{Error, Result};

/// A multivariate normal with its covariance already factored.
#[derive(Debug, Clone)]
pub struct NormalDensity {
    mean: DVector<f64>,
    factor: SpdFactor,
}

impl NormalDensity {
    pub fn new(mean: DVector<f64>, cov: &SymMatrix) -> Result<Self> {
        check_dim(mean.len(), cov.dim())?;
        Ok(Self {
            mean,
            factor: cov.factor()?,
        })
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.mean;
        gaussian_ln_pdf(&self.factor, &d)
    }
}

/// `-0.5 (p ln 2pi + ln|S| + d' S^-1 d)`
pub(crate) fn gaussian_ln_pdf(factor: &SpdFactor, centered: &DVector<f64>) -> f64 {
    let p = centered.len() as f64;
    -p * LN_SQRT_2PI - 0.5 * factor.log_det() - 0.5 * factor.mahalanobis_sq(centered)
}

/// Restricted multivariate skew-normal with location `xi`, scale `sigma` and
/// skewness `delta`, held in its `Omega = Sigma + delta delta'` form.
#[derive(Debug, Clone)]
pub struct SkewNormalDensity {
    xi: DVector<f64>,
    omega: SpdFactor,
    omega_inv_delta: DVector<f64>,
    skew_sd: f64,
}

impl SkewNormalDensity {
    pub fn new(xi: DVector<f64>, sigma: &SymMatrix, delta: &DVector<f64>) -> Result<Self> {
        check_dim(xi.len(), sigma.dim())?;
        check_dim(delta.len(), sigma.dim())?;
        let omega = sigma.plus_outer(delta).factor()?;
        let omega_inv_delta = omega.solve_vec(delta);
        let s2 = 1.0 - delta.dot(&omega_inv_delta);
        if !(s2 > 0.0) {
            return Err(Error::SkewInfeasible {
                value: s2,
                row: None,
                component: None,
            });
        }
        Ok(Self {
            xi,
            omega,
            omega_inv_delta,
            skew_sd: s2.sqrt(),
        })
    }

    pub fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.xi;
        let arg = self.omega_inv_delta.dot(&d) / self.skew_sd;
        LN_2 + gaussian_ln_pdf(&self.omega, &d) + ln_normal_cdf(arg)
    }
}

fn check_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("vector of length {a} vs matrix of dim {b}")));
    }
    Ok(())
}

pub fn mn_ln_pdf(x: &DVector<f64>, mu: &DVector<f64>, sigma: &SymMatrix) -> Result<f64> {
    check_dim(x.len(), sigma.dim())?;
    Ok(NormalDensity::new(mu.clone(), sigma)?.ln_pdf(x))
}

pub fn mn_pdf(x: &DVector<f64>, mu: &DVector<f64>, sigma: &SymMatrix) -> Result<f64> {
    mn_ln_pdf(x, mu, sigma).map(f64::exp)
}

pub fn msn_ln_pdf(
    x: &DVector<f64>,
    xi: &DVector<f64>,
    sigma: &SymMatrix,
    delta: &DVector<f64>,
) -> Result<f64> {
    check_dim(x.len(), sigma.dim())?;
    Ok(SkewNormalDensity::new(xi.clone(), sigma, delta)?.ln_pdf(x))
}

pub fn msn_pdf(
    x: &DVector<f64>,
    xi: &DVector<f64>,
    sigma: &SymMatrix,
    delta: &DVector<f64>,
) -> Result<f64> {
    msn_ln_pdf(x, xi, sigma, delta).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn standard_bivariate_at_mean() {
        let got = mn_pdf(&v(&[0.3, -2.0]), &v(&[0.3, -2.0]), &SymMatrix::identity(2)).unwrap();
        assert!((got - 0.159_154_943_091_895_34).abs() < 1e-15);
    }

    #[test]
    fn scalar_variance_four() {
        let s = SymMatrix::from_diagonal(&[4.0]);
        let got = mn_pdf(&v(&[0.0]), &v(&[0.0]), &s).unwrap();
        assert!((got - 0.199_471_140_200_716_34).abs() < 1e-15);
    }

    #[test]
    fn far_tail_is_zero_not_nan() {
        let s = SymMatrix::identity(2);
        let x = v(&[50.0, 50.0]); // Mahalanobis^2 = 5000
        let got = mn_pdf(&x, &v(&[0.0, 0.0]), &s).unwrap();
        assert!(got >= 0.0 && got.is_finite());
        let ln = mn_ln_pdf(&x, &v(&[0.0, 0.0]), &s).unwrap();
        assert!((ln + 2500.0 + 2.0 * LN_SQRT_2PI).abs() < 1e-9);
    }

    #[test]
    fn singular_covariance_errors() {
        let s = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            mn_pdf(&v(&[0.0, 0.0]), &v(&[0.0, 0.0]), &s),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn zero_skew_reduces_to_normal() {
        let s = SymMatrix::from_rows(&[vec![1.5, 0.2], vec![0.2, 0.7]]).unwrap();
        let x = v(&[0.4, 1.1]);
        let mu = v(&[-0.2, 0.5]);
        let a = msn_pdf(&x, &mu, &s, &v(&[0.0, 0.0])).unwrap();
        let b = mn_pdf(&x, &mu, &s).unwrap();
        assert!(((a - b) / b).abs() < 1e-14);
    }

    #[test]
    fn univariate_skew_normal_at_location() {
        // xi = 0, Sigma = 1, delta = 1: Omega = 2 and Phi(0) = 1/2.
        let got = msn_pdf(&v(&[0.0]), &v(&[0.0]), &SymMatrix::identity(1), &v(&[1.0])).unwrap();
        assert!((got - 0.282_094_791_773_878_14).abs() < 1e-15);
    }

    #[test]
    fn extreme_skew_side_is_finite() {
        let d = SkewNormalDensity::new(v(&[0.0]), &SymMatrix::identity(1), &v(&[5.0])).unwrap();
        let ln = d.ln_pdf(&v(&[-30.0]));
        assert!(ln.is_finite());
    }
}
