//! Starting values: k-means++ seeding and Lloyd refinement on mean-filled
//! rows, then per-cluster moments.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::IncompleteDataset;
use super::model::{Component, Family, MixtureModel};
use crate::error::{Error, Result};
use crate::math::normal::SQRT_2_OVER_PI;
use crate::math::SymMatrix;
use crate::seed::rng_for;

const LLOYD_MAX_ITER: usize = 100;
const VAR_FLOOR: f64 = 1e-10;

/// How the skewness vectors of a skew-normal fit are started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewInit {
    /// Method of moments on each cluster's observed third central moments.
    #[default]
    Moments,
    /// delta = 0. Note that delta = 0 is a fixed point of the skew update, so
    /// a fit started here stays normal.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitPolicy {
    KMeansPlusPlus { seed: u64 },
    Given(MixtureModel),
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Assigns each point to its nearest center; ties go to the lower index.
fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|x| {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(x, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect()
}

/// k-means++ seeding followed by Lloyd iterations. Returns the cluster label
/// of every point.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    if points.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} rows for {k} clusters",
            points.len()
        )));
    }
    let mut rng = rng_for(seed, &[0x6b6d_6561_6e73]);
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[pick].clone());
        for (d, x) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(x, &centers[centers.len() - 1]));
        }
    }

    let p = points[0].len();
    let mut labels = assign(points, &centers);
    for _ in 0..LLOYD_MAX_ITER {
        let mut sums = vec![vec![0.0; p]; k];
        let mut counts = vec![0usize; k];
        for (x, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseed with the point farthest from its current center.
                let far = points
                    .iter()
                    .zip(&labels)
                    .map(|(x, &l)| sq_dist(x, &centers[l]))
                    .enumerate()
                    .fold((0, -1.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc })
                    .0;
                centers[c] = points[far].clone();
            } else {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next = assign(points, &centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(labels)
}

/// Moment-matched skewness of one column given its variance and third
/// central moment; zero when the sample skewness is not significant.
fn moment_skew(var: f64, m3: f64, n: usize) -> f64 {
    if n < 3 || var <= 0.0 {
        return 0.0;
    }
    let skewness = m3 / var.powf(1.5);
    if skewness.abs() < 2.0 * (6.0 / n as f64).sqrt() {
        return 0.0;
    }
    let b = SQRT_2_OVER_PI;
    let half_var = 1.0 - b * b;
    let delta = (m3 / (b * (4.0 / std::f64::consts::PI - 1.0))).cbrt();
    let cap = (0.8 * var / half_var).sqrt();
    delta.clamp(-cap, cap)
}

/// Initial mixture from seeded k-means on the rows that have at least one
/// observed cell (missing cells filled with column means).
pub fn initial_model(
    data: &IncompleteDataset,
    family: Family,
    k: usize,
    seed: u64,
    skew: SkewInit,
) -> Result<MixtureModel> {
    if k == 0 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    data.check_columns_observed()?;
    let p = data.n_cols();
    let means = data.column_means();
    let rows: Vec<usize> = (0..data.n_rows()).filter(|&i| !data.is_all_missing(i)).collect();
    let points: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| (0..p).map(|j| data.value(i, j).unwrap_or(means[j])).collect())
        .collect();
    let labels = kmeans(&points, k, seed)?;
    let n = points.len() as f64;

    let mut counts = vec![0usize; k];
    let mut centers = vec![vec![0.0; p]; k];
    for (x, &l) in points.iter().zip(&labels) {
        counts[l] += 1;
        for (c, v) in centers[l].iter_mut().zip(x) {
            *c += v;
        }
    }
    for (c, &m) in centers.iter_mut().zip(&counts) {
        c.iter_mut().for_each(|v| *v /= m.max(1) as f64);
    }
    let mut pooled = vec![0.0; p];
    for (x, &l) in points.iter().zip(&labels) {
        for j in 0..p {
            pooled[j] += (x[j] - centers[l][j]).powi(2) / n;
        }
    }
    pooled.iter_mut().for_each(|v| *v = v.max(VAR_FLOOR));

    let mut components = Vec::with_capacity(k);
    for c in 0..k {
        let mut delta = vec![0.0; p];
        if family == Family::Msn && skew == SkewInit::Moments {
            for j in 0..p {
                let vals: Vec<f64> = rows
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == c)
                    .filter_map(|(&i, _)| data.value(i, j))
                    .collect();
                let m = vals.len() as f64;
                if vals.len() < 3 {
                    continue;
                }
                let mean = vals.iter().sum::<f64>() / m;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
                let m3 = vals.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / m;
                delta[j] = moment_skew(var, m3, vals.len());
            }
        }
        let b = SQRT_2_OVER_PI;
        let diag: Vec<f64> = (0..p)
            .map(|j| (pooled[j] - (1.0 - b * b) * delta[j] * delta[j]).max(0.2 * pooled[j]))
            .collect();
        let location: Vec<f64> = (0..p).map(|j| centers[c][j] - b * delta[j]).collect();
        let delta = DVector::from_vec(delta);
        components.push(Component {
            location: DVector::from_vec(location),
            scale: SymMatrix::from_diagonal(&diag),
            skew: delta,
        });
    }
    let weights = counts.iter().map(|&m| m as f64 / n).collect();
    MixtureModel::new(family, weights, components)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kmeans_separates_obvious_clusters() {
        let mut pts = Vec::new();
        for i in 0..20 {
            pts.push(vec![i as f64 * 0.01, 0.0]);
            pts.push(vec![10.0 + i as f64 * 0.01, 5.0]);
        }
        let labels = kmeans(&pts, 2, 3).unwrap();
        for pair in labels.chunks(2) {
            assert_ne!(pair[0], pair[1]);
        }
        assert!(labels.iter().step_by(2).all(|&l| l == labels[0]));
    }

    #[test]
    fn kmeans_is_seed_deterministic() {
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![((i * 37) % 11) as f64, (i % 7) as f64]).collect();
        assert_eq!(kmeans(&pts, 3, 9).unwrap(), kmeans(&pts, 3, 9).unwrap());
    }

    #[test]
    fn moment_skew_recovers_sign_and_zero() {
        assert_eq!(moment_skew(1.0, 0.0, 1000), 0.0);
        assert!(moment_skew(1.0, 0.5, 1000) > 0.0);
        assert!(moment_skew(1.0, -0.5, 1000) < 0.0);
        // capped so the implied scale variance stays positive
        let d = moment_skew(1.0, 50.0, 1000);
        assert!((1.0 - 2.0 / std::f64::consts::PI) * d * d <= 0.8 + 1e-12);
    }

    #[test]
    fn zero_skew_init_is_normal_shaped() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos()]).collect();
        let data = IncompleteDataset::complete(&rows).unwrap();
        let m = initial_model(&data, Family::Msn, 2, 1, SkewInit::Zero).unwrap();
        assert!(m.components().iter().all(|c| c.skew.iter().all(|d| *d == 0.0)));
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
