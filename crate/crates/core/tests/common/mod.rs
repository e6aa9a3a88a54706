#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use skewimpute::em::{Component, Family, IncompleteDataset, MixtureModel};
use skewimpute::math::{SkewNormalSampler, SymMatrix};
use skewimpute::seed::rng_for;

/// Random K-component mixture in p dimensions with well separated centers.
/// For `Family::Mn` the skewness is zero.
pub fn random_mixture(seed: u64, family: Family, p: usize, k: usize) -> MixtureModel {
    let mut rng = rng_for(seed, &[0x6669_78]);
    let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.3..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let components = (0..k)
        .map(|c| {
            let center = DVector::from_fn(p, |_, _| 3.0 * c as f64 + rng.random_range(-0.5..0.5));
            let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-0.5..0.5));
            let sigma = SymMatrix::symmetrize(&a * a.transpose() + DMatrix::identity(p, p) * 0.3);
            match family {
                Family::Mn => Component::normal(center, sigma),
                Family::Msn => {
                    let delta = DVector::from_fn(p, |_, _| rng.random_range(-1.2..1.2));
                    Component::skew_normal(center, sigma, delta)
                }
            }
        })
        .collect();
    MixtureModel::new(family, weights, components).expect("valid mixture")
}

/// `n` draws from `model` with their component labels.
pub fn sample_mixture(model: &MixtureModel, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = rng_for(seed, &[0x6472_6177]);
    // A zero skewness vector makes the skew-normal sampler a normal one.
    let samplers: Vec<SkewNormalSampler> = model
        .components()
        .iter()
        .map(|c| SkewNormalSampler::new(c.location.clone(), &c.scale, c.skew.clone()).unwrap())
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = model.k() - 1;
        for (j, w) in model.weights().iter().enumerate() {
            acc += w;
            if u < acc {
                k = j;
                break;
            }
        }
        rows.push(samplers[k].sample(&mut rng).iter().copied().collect());
        labels.push(k);
    }
    (rows, labels)
}

/// Drops every cell independently with probability `eta`.
pub fn mask_mcar(rows: &[Vec<f64>], eta: f64, seed: u64) -> IncompleteDataset {
    let mut rng = rng_for(seed, &[0x6d61_736b]);
    let masked: Vec<Vec<Option<f64>>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| (rng.random::<f64>() >= eta).then_some(v)).collect())
        .collect();
    IncompleteDataset::from_options(&masked).expect("rectangular")
}

/// Seeded incomplete sample from a random mixture of the given family.
pub fn problem(seed: u64, family: Family, n: usize, p: usize, k: usize, eta: f64) -> (MixtureModel, IncompleteDataset) {
    let truth = random_mixture(seed, family, p, k);
    let (rows, _) = sample_mixture(&truth, n, seed);
    (truth, mask_mcar(&rows, eta, seed))
}
