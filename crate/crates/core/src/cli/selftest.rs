//! Oracle checks shipped with the binary: quadrature for the truncated
//! moments, Monte Carlo for the skew-normal conditional mean, and finite
//! differences for the network gradient.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::em::{e_step, Component, Family, IncompleteDataset, MixtureModel};
use crate::error::Result;
use crate::math::{truncated_normal_moments, SymMatrix};
use crate::net::{mse, mse_and_grad, Topology};
use crate::oracle::{central_difference, truncated_moments_by_quadrature, ConditionalSampler};
use crate::seed::rng_for;
use crate::sim::{eta_for_fraction, overall_missing_fraction};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// `1 - (1 - eta)^d` at the headline point and its inverse over a contour grid.
pub fn check_missing_fraction() -> Result<Check> {
    let headline = overall_missing_fraction(0.001, 100)?;
    let mut worst: f64 = 0.0;
    for f in [0.1, 0.2, 0.3, 0.4] {
        for d in 2..=10u32 {
            let eta = eta_for_fraction(f, d)?;
            worst = worst.max((1.0 - (1.0 - eta).powi(d as i32) - f).abs());
        }
    }
    let passed = (headline - 0.0952).abs() <= 1e-4 && worst <= 1e-10;
    Ok(Check::new(
        "missing fraction",
        passed,
        format!("f(0.001, 100) = {headline:.6}, contour residual {worst:.1e}"),
    ))
}

/// Closed-form truncated-normal moments against adaptive quadrature.
pub fn check_truncated_moments(tol: f64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for sigma in [0.5, 1.0, 2.0] {
        for t in [-8.0, -5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0, 8.0] {
            let mu = t * sigma;
            let m = truncated_normal_moments(mu, sigma)?;
            let (q1, q2) = truncated_moments_by_quadrature(mu, sigma);
            worst = worst.max((m.e1 - q1).abs()).max((m.e2 - q2).abs());
        }
    }
    Ok(Check::new(
        "truncated moments vs quadrature",
        worst <= tol,
        format!("max abs difference {worst:.2e} (tolerance {tol:.0e})"),
    ))
}

/// A random bivariate skew-normal, an observed value and the missing index.
pub fn random_conditional_problem(seed: u64) -> (Vec<f64>, DMatrix<f64>, Vec<f64>, Vec<f64>, usize) {
    let mut rng = rng_for(seed, &[0x6d63]);
    let xi: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a: DMatrix<f64> = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
    let sigma = &a * a.transpose() + DMatrix::identity(2, 2) * 0.3;
    let delta: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
    let j = (seed % 2) as usize;
    let o = 1 - j;
    let mut x = vec![0.0; 2];
    x[o] = xi[o] + delta[o] * 0.8 + rng.random_range(-0.5..0.5f64) * sigma[(o, o)].sqrt();
    (xi, sigma, delta, x, j)
}

/// Closed-form `E(x_j | x_o)` from the E-step.
pub fn closed_form_conditional_mean(xi: &[f64], sigma: &DMatrix<f64>, delta: &[f64], x: &[f64], j: usize) -> Result<f64> {
    let model = MixtureModel::new(
        Family::Msn,
        vec![1.0],
        vec![Component::skew_normal(
            DVector::from_column_slice(xi),
            SymMatrix::new(sigma.clone())?,
            DVector::from_column_slice(delta),
        )],
    )?;
    let row: Vec<Option<f64>> = (0..xi.len()).map(|i| (i != j).then_some(x[i])).collect();
    let data = IncompleteDataset::from_options(&[row])?;
    Ok(e_step(&data, &model)?.rows[0].components[0].xhat[j])
}

/// Conditional mean against rejection-sampling Monte Carlo, `n_configs`
/// problems with `draws` accepted draws each.
pub fn check_conditional_mc(n_configs: u64, draws: usize, n_se: f64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for s in 0..n_configs {
        let (xi, sigma, delta, x, j) = random_conditional_problem(s);
        let exact = closed_form_conditional_mean(&xi, &sigma, &delta, &x, j)?;
        let sampler = ConditionalSampler::new(&xi, &sigma, &delta, &x, j);
        let (mc, se) = sampler.estimate(draws, &mut rng_for(s, &[0x6472_6177]));
        worst = worst.max((exact - mc).abs() / se);
    }
    Ok(Check::new(
        "conditional mean vs Monte Carlo",
        worst <= n_se,
        format!("{n_configs} configs x {draws} draws, worst |diff| = {worst:.2} SE (limit {n_se})"),
    ))
}

/// Relative difference `|a - b| / max(|a|, |b|)` in the Euclidean norm.
pub fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(f64::MIN_POSITIVE)
}

/// Backpropagated gradient against central differences on random networks.
pub fn check_gradients(n_nets: u64, tol: f64) -> Result<Check> {
    let topo = Topology::default();
    let mut worst: f64 = 0.0;
    for s in 0..n_nets {
        let mut rng = rng_for(s, &[0x6772_6164]);
        let params: Vec<f64> = topo.init_params(&mut rng).iter().map(|w| 2.0 * w).collect();
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..topo.n_inputs()).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let targets: Vec<f64> = (0..rows.len()).map(|_| rng.random_range(1..=3) as f64).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let (_, grad) = mse_and_grad(&topo, &params, &refs, &targets);
        let numeric = central_difference(|p| mse(&topo, p, &refs, &targets), &params, 1e-5);
        worst = worst.max(relative_gap(&grad, &numeric));
    }
    Ok(Check::new(
        "network gradient vs finite differences",
        worst <= tol,
        format!("{n_nets} nets, worst relative gap {worst:.2e} (tolerance {tol:.0e})"),
    ))
}

/// Every check at its default size.
pub fn run_all(draws: usize) -> Result<Vec<Check>> {
    Ok(vec![
        check_missing_fraction()?,
        check_truncated_moments(1e-8)?,
        check_conditional_mc(5, draws, 4.0)?,
        check_gradients(10, 1e-6)?,
    ])
}
