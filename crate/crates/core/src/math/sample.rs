//! Samplers used by tests, oracles and the simulator.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::SymMatrix;
use crate::error::Result;

/// Draws from N(mean, cov) through the Cholesky factor.
#[derive(Debug, Clone)]
pub struct NormalSampler {
    mean: DVector<f64>,
    lower: DMatrix<f64>,
}

impl NormalSampler {
    pub fn new(mean: DVector<f64>, cov: &SymMatrix) -> Result<Self> {
        let lower = cov.factor()?.lower();
        Ok(Self { mean, lower })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.lower * z
    }
}

/// Draws from the restricted skew-normal via `X = xi + delta |U| + V`,
/// `U ~ N(0, 1)`, `V ~ N(0, Sigma)`.
#[derive(Debug, Clone)]
pub struct SkewNormalSampler {
    delta: DVector<f64>,
    base: NormalSampler,
}

impl SkewNormalSampler {
    pub fn new(xi: DVector<f64>, sigma: &SymMatrix, delta: DVector<f64>) -> Result<Self> {
        Ok(Self {
            delta,
            base: NormalSampler::new(xi, sigma)?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let u: f64 = rng.sample(StandardNormal);
        self.base.sample(rng) + &self.delta * u.abs()
    }
}
