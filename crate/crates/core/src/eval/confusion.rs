use serde::{Deserialize, Serialize};

use crate::em::CompletedDataset;
use crate::species::Species;

/// Counts indexed by `[true species][assigned species]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionTable {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionTable {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Species, Species)>) -> Self {
        let mut t = Self::default();
        for (truth, assigned) in pairs {
            t.add(truth, assigned);
        }
        t
    }

    pub fn add(&mut self, truth: Species, assigned: Species) {
        self.counts[truth.index()][assigned.index()] += 1;
    }

    pub fn true_count(&self, s: Species) -> u64 {
        self.counts[s.index()].iter().sum()
    }

    pub fn assigned_count(&self, s: Species) -> u64 {
        self.counts.iter().map(|row| row[s.index()]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    /// Correct / true count; `None` when the species is absent.
    pub fn efficiency(&self, s: Species) -> Option<f64> {
        let n = self.true_count(s);
        (n > 0).then(|| self.counts[s.index()][s.index()] as f64 / n as f64)
    }

    /// Correct / assigned count; `None` when nothing was assigned to `s`.
    pub fn purity(&self, s: Species) -> Option<f64> {
        let n = self.assigned_count(s);
        (n > 0).then(|| self.counts[s.index()][s.index()] as f64 / n as f64)
    }

    pub fn accuracy(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| self.correct() as f64 / n as f64)
    }
}

/// How squared imputation errors are aggregated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorAggregation {
    /// Square root of the mean squared difference.
    #[default]
    Rms,
    MeanSquare,
}

/// Aggregate difference between `truth` and `imputed` over the cells flagged
/// in `missing` (row-major). Zero when no cell is flagged.
pub fn quadratic_diff(
    truth: &CompletedDataset,
    imputed: &CompletedDataset,
    missing: &[bool],
    how: ErrorAggregation,
) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((t, v), m) in truth.values().iter().zip(imputed.values()).zip(missing) {
        if *m {
            sum += (t - v) * (t - v);
            n += 1;
        }
    }
    if n == 0 {
        return 0.0;
    }
    let ms = sum / n as f64;
    match how {
        ErrorAggregation::Rms => ms.sqrt(),
        ErrorAggregation::MeanSquare => ms,
    }
}

/// RMS difference over originally missing cells.
pub fn avg_quadratic_diff(truth: &CompletedDataset, imputed: &CompletedDataset, missing: &[bool]) -> f64 {
    quadratic_diff(truth, imputed, missing, ErrorAggregation::Rms)
}
