//! Momentum binning, train/validation/test splits and test-sample drawing.

use rand::seq::{index, SliceRandom};

use super::missing::{apply_missingness, MissingnessSpec};
use super::Event;
use crate::em::{CompletedDataset, IncompleteDataset};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_for};

const SPLIT_TAG: u64 = 0x7370_6c69_74;
const SAMPLE_TAG: u64 = 0x7361_6d70;

/// Tolerance, in units of the bin width, for momenta that sit on an edge.
const EDGE_EPS: f64 = 1e-9;

fn round_edge(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Half-open momentum interval `[lo, hi)` and the rows that fall in it.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumBin {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub rows: Vec<usize>,
}

impl MomentumBin {
    /// Short label such as `0.250-0.300`.
    pub fn label(&self) -> String {
        format!("{:.3}-{:.3}", self.lo, self.hi)
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lo && p < self.hi
    }
}

/// Index of the bin holding `p`, for bins of width `w` starting at `origin`.
pub fn bin_index(p: f64, origin: f64, w: f64) -> i64 {
    ((p - origin) / w + EDGE_EPS).floor() as i64
}

/// Splits `momenta` into `n_bins` bins of width `bin_width` starting at
/// `origin`. Every momentum lands in exactly one bin; empty bins are kept.
pub fn bin_by_momentum(
    momenta: &[f64],
    origin: f64,
    bin_width: f64,
    n_bins: usize,
) -> Result<Vec<MomentumBin>> {
    if !(bin_width > 0.0) {
        return Err(Error::Domain(format!("bin width {bin_width} must be positive")));
    }
    let mut bins: Vec<MomentumBin> = (0..n_bins)
        .map(|k| MomentumBin {
            index: k,
            lo: round_edge(origin + k as f64 * bin_width),
            hi: round_edge(origin + (k + 1) as f64 * bin_width),
            rows: Vec::new(),
        })
        .collect();
    for (i, &p) in momenta.iter().enumerate() {
        let k = bin_index(p, origin, bin_width);
        if k < 0 || k as usize >= n_bins {
            return Err(Error::MomentumOutOfRange(p));
        }
        bins[k as usize].rows.push(i);
    }
    Ok(bins)
}

/// Disjoint row sets of one bin: half for training (80%) and validation
/// (20%), the rest as the pool test samples are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test_pool: Vec<usize>,
}

pub fn split_bin(n_rows: usize, seed: u64, bin: usize) -> BinSplit {
    let mut perm: Vec<usize> = (0..n_rows).collect();
    perm.shuffle(&mut rng_for(seed, &[SPLIT_TAG, bin as u64]));
    let half = n_rows / 2;
    let n_train = (half * 4) / 5;
    let mut train = perm[..n_train].to_vec();
    let mut validation = perm[n_train..half].to_vec();
    let mut test_pool = perm[half..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    test_pool.sort_unstable();
    BinSplit {
        train,
        validation,
        test_pool,
    }
}

#[derive(Debug, Clone)]
pub struct TestSample {
    /// Indices into the pool the sample was drawn from.
    pub rows: Vec<usize>,
    pub truth: CompletedDataset,
    pub data: IncompleteDataset,
}

/// Draws `n_samples` samples of `sample_size` distinct rows from `pool` and
/// masks each one. Row selection depends only on `spec.seed` and the sample
/// index, so samples drawn under different mechanisms with the same seed
/// share rows.
pub fn make_test_samples(
    pool: &[Event],
    n_samples: usize,
    sample_size: usize,
    spec: &MissingnessSpec,
) -> Result<Vec<TestSample>> {
    if n_samples == 0 || sample_size == 0 {
        return Err(Error::Domain("need at least one sample of at least one row".into()));
    }
    if sample_size > pool.len() {
        return Err(Error::InsufficientData(format!(
            "sample size {sample_size} exceeds pool of {} rows",
            pool.len()
        )));
    }
    (0..n_samples)
        .map(|s| {
            let mut rng = rng_for(spec.seed, &[SAMPLE_TAG, s as u64]);
            let rows = index::sample(&mut rng, pool.len(), sample_size).into_vec();
            let events: Vec<Event> = rows.iter().map(|&i| pool[i].clone()).collect();
            let sample_spec = MissingnessSpec {
                seed: derive_seed(spec.seed, &[s as u64]),
                ..*spec
            };
            let data = apply_missingness(&events, &sample_spec)?;
            let p = data.n_cols();
            let truth_values = events.iter().flat_map(|e| e.e.iter().copied()).collect();
            Ok(TestSample {
                rows,
                truth: CompletedDataset::new(p, truth_values)?,
                data,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_half_open() {
        let bins = bin_by_momentum(&[0.275, 0.30, 0.0, 0.999_999], 0.0, 0.05, 20).unwrap();
        assert_eq!(bins[5].rows, vec![0]);
        assert_eq!(bins[6].rows, vec![1]);
        assert_eq!(bins[0].rows, vec![2]);
        assert_eq!(bins[19].rows, vec![3]);
        assert_eq!(bins[5].label(), "0.250-0.300");
        assert_eq!(bins[6].lo, 0.3);
        assert!(bin_by_momentum(&[1.0], 0.0, 0.05, 20).is_err());
    }

    #[test]
    fn split_is_disjoint_and_complete() {
        let s = split_bin(1001, 3, 7);
        assert_eq!(s.train.len(), 400);
        assert_eq!(s.validation.len(), 100);
        assert_eq!(s.test_pool.len(), 501);
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test_pool).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1001).collect::<Vec<_>>());
        assert_eq!(s, split_bin(1001, 3, 7));
        assert_ne!(s, split_bin(1001, 3, 8));
    }
}
