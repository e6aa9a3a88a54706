//! Moments of N(mu, sigma^2) truncated to [0, inf), checked against
//! quadrature, plus the normal and skew-normal densities at a few points.
//!
//!     cargo run --example truncated_moments

use nalgebra::DVector;
use skewimpute::math::{msn_pdf, mn_pdf, normal_pdf_cdf_ratio, truncated_normal_moments, SymMatrix};
use skewimpute::oracle::truncated_moments_by_quadrature;

fn main() -> skewimpute::Result<()> {
    println!("{:>6} {:>6} {:>12} {:>12} {:>10}", "mu", "sigma", "E[W]", "E[W^2]", "|quad|");
    for sigma in [0.5, 1.0, 2.0] {
        for t in [-8.0, -5.0, -2.0, 0.0, 2.0, 5.0] {
            let mu = t * sigma;
            let m = truncated_normal_moments(mu, sigma)?;
            let (q1, q2) = truncated_moments_by_quadrature(mu, sigma);
            let gap = (m.e1 - q1).abs().max((m.e2 - q2).abs());
            println!("{mu:>6.2} {sigma:>6.2} {:>12.8} {:>12.8} {gap:>10.1e}", m.e1, m.e2);
        }
    }

    println!("\nphi(t)/Phi(t) in the lower tail:");
    for t in [-2.0, -6.0, -8.0, -20.0] {
        println!("  t = {t:>5}: {:.7}", normal_pdf_cdf_ratio(t));
    }

    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 0.5]])?;
    let mu = DVector::from_vec(vec![0.0, 0.0]);
    let delta = DVector::from_vec(vec![1.5, -0.5]);
    println!("\n{:>12} {:>10} {:>10}", "x", "MN", "MSN");
    for x in [[0.0, 0.0], [1.0, -0.5], [-1.0, 0.5], [2.0, 0.0]] {
        let x = DVector::from_column_slice(&x);
        println!(
            "{:>12} {:>10.5} {:>10.5}",
            format!("({}, {})", x[0], x[1]),
            mn_pdf(&x, &mu, &sigma)?,
            msn_pdf(&x, &mu, &sigma, &delta)?
        );
    }
    Ok(())
}
