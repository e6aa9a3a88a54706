//! Fits normal and skew-normal mixtures to skewed two-cluster data with 20%
//! of the cells missing completely at random.
//!
//!     cargo run --release --example fit_mixture

use nalgebra::DVector;
use rand::Rng;
use skewimpute::em::{fit, Family, FitOptions, IncompleteDataset, InitPolicy};
use skewimpute::math::{SkewNormalSampler, SymMatrix};
use skewimpute::seed::rng_for;

fn main() -> skewimpute::Result<()> {
    let mut rng = rng_for(11, &[]);
    let a = SkewNormalSampler::new(
        DVector::from_vec(vec![0.0, 0.0, 0.0]),
        &SymMatrix::from_diagonal(&[0.5, 0.5, 0.5]),
        DVector::from_vec(vec![1.5, 1.0, 0.5]),
    )?;
    let b = SkewNormalSampler::new(
        DVector::from_vec(vec![4.0, 3.0, -2.0]),
        &SymMatrix::from_diagonal(&[0.4, 0.6, 0.5]),
        DVector::from_vec(vec![-1.0, 0.0, 1.2]),
    )?;
    let rows: Vec<Vec<Option<f64>>> = (0..2000)
        .map(|i| {
            let x = if i % 3 == 0 { b.sample(&mut rng) } else { a.sample(&mut rng) };
            x.iter().map(|&v| (rng.random::<f64>() >= 0.2).then_some(v)).collect()
        })
        .collect();
    let data = IncompleteDataset::from_options(&rows)?;
    println!("{} rows, {} missing cells", data.n_rows(), data.n_missing_cells());

    for family in [Family::Mn, Family::Msn] {
        let model = fit(&data, family, 2, &InitPolicy::KMeansPlusPlus { seed: 3 }, &FitOptions::default())?;
        let d = model.diagnostics().expect("fit sets diagnostics");
        println!(
            "\n{family:?}: log-likelihood {:.3} after {} iterations (converged: {})",
            d.log_likelihood, d.iterations, d.converged
        );
        for (w, c) in model.weights().iter().zip(model.components()) {
            let fmt = |v: &DVector<f64>| v.iter().map(|x| format!("{x:6.3}")).collect::<Vec<_>>().join(" ");
            println!("  pi {w:.3}  location [{}]  skew [{}]", fmt(&c.location), fmt(&c.skew));
        }
    }
    Ok(())
}
