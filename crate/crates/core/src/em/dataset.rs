use std::collections::HashMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::math::BlockPartition;
use crate::species::Species;

/// Per-row labels carried alongside the measurements.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RowMeta {
    pub species: Option<Species>,
    /// GeV/c
    pub momentum: Option<f64>,
}

/// An N x p table with a per-cell observed mask. Missing cells hold NaN and
/// are never read by the fitting code.
#[derive(Debug, Clone)]
pub struct IncompleteDataset {
    n_cols: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    meta: Option<Vec<RowMeta>>,
    patterns: Vec<BlockPartition>,
    row_pattern: Vec<usize>,
}

impl IncompleteDataset {
    /// `values` and `mask` are row-major. Values under a `false` mask are
    /// replaced by NaN.
    pub fn new(n_cols: usize, mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::Dimension("dataset needs at least one column".into()));
        }
        if values.len() != mask.len() || values.len() % n_cols != 0 {
            return Err(Error::Dimension(format!(
                "values ({}) and mask ({}) must both be N x {n_cols}",
                values.len(),
                mask.len()
            )));
        }
        for (v, &m) in values.iter_mut().zip(&mask) {
            if !m {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(Error::Domain("observed cells must be finite".into()));
            }
        }
        let mut index: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut patterns = Vec::new();
        let row_pattern = mask
            .chunks(n_cols)
            .map(|m| {
                *index.entry(m.to_vec()).or_insert_with(|| {
                    patterns.push(BlockPartition::from_mask(m));
                    patterns.len() - 1
                })
            })
            .collect();
        Ok(Self {
            n_cols,
            values,
            mask,
            meta: None,
            patterns,
            row_pattern,
        })
    }

    pub fn complete(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        let mask = vec![true; values.len()];
        Self::new(p, values, mask)
    }

    /// Rows of optional cells; `None` marks a missing cell.
    pub fn from_options(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let values = rows.iter().flatten().map(|c| c.unwrap_or(f64::NAN)).collect();
        let mask = rows.iter().flatten().map(Option::is_some).collect();
        Self::new(p, values, mask)
    }

    pub fn with_meta(mut self, meta: Vec<RowMeta>) -> Result<Self> {
        if meta.len() != self.n_rows() {
            return Err(Error::Dimension(format!(
                "{} metadata rows for {} data rows",
                meta.len(),
                self.n_rows()
            )));
        }
        self.meta = Some(meta);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.n_cols
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mask(&self, i: usize) -> &[bool] {
        &self.mask[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n_cols + j]
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.is_observed(i, j).then(|| self.values[i * self.n_cols + j])
    }

    pub fn meta(&self) -> Option<&[RowMeta]> {
        self.meta.as_deref()
    }

    pub fn partition(&self, i: usize) -> &BlockPartition {
        &self.patterns[self.row_pattern[i]]
    }

    pub fn patterns(&self) -> &[BlockPartition] {
        &self.patterns
    }

    pub fn pattern_index(&self, i: usize) -> usize {
        self.row_pattern[i]
    }

    /// Observed sub-vector of row `i`.
    pub fn observed_vec(&self, i: usize) -> DVector<f64> {
        let row = self.row(i);
        let o = self.partition(i).observed();
        DVector::from_fn(o.len(), |a, _| row[o[a]])
    }

    pub fn is_all_missing(&self, i: usize) -> bool {
        self.partition(i).observed().is_empty()
    }

    pub fn is_complete_row(&self, i: usize) -> bool {
        self.partition(i).is_complete()
    }

    pub fn n_missing_cells(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    /// Number of observed cells per column.
    pub fn observed_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols];
        for row in self.mask.chunks(self.n_cols) {
            for (c, &m) in counts.iter_mut().zip(row) {
                *c += m as usize;
            }
        }
        counts
    }

    /// Errors on the first column with no observed cell.
    pub fn check_columns_observed(&self) -> Result<()> {
        match self.observed_counts().iter().position(|&c| c == 0) {
            Some(column) => Err(Error::UnobservedColumn { column }),
            None => Ok(()),
        }
    }

    /// Mean of the observed cells in each column (NaN for never-observed).
    pub fn column_means(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.n_cols];
        let mut count = vec![0usize; self.n_cols];
        for i in 0..self.n_rows() {
            for j in 0..self.n_cols {
                if let Some(v) = self.value(i, j) {
                    sum[j] += v;
                    count[j] += 1;
                }
            }
        }
        sum.iter()
            .zip(&count)
            .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
            .collect()
    }

    /// New dataset made of the listed rows, in order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        let mut mask = Vec::with_capacity(rows.len() * self.n_cols);
        for &i in rows {
            values.extend_from_slice(self.row(i));
            mask.extend_from_slice(self.row_mask(i));
        }
        let mut out = Self::new(self.n_cols, values, mask).expect("rows taken from a valid dataset");
        out.meta = self.meta.as_ref().map(|m| rows.iter().map(|&i| m[i]).collect());
        out
    }

    /// Dataset with the same values and metadata but a different mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        let mut out = Self::new(self.n_cols, self.values.clone(), mask)?;
        out.meta = self.meta.clone();
        Ok(out)
    }
}

/// A fully observed N x p table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedDataset {
    n_cols: usize,
    values: Vec<f64>,
}

impl CompletedDataset {
    pub fn new(n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_cols == 0 || values.len() % n_cols != 0 {
            return Err(Error::Dimension("completed table must be N x p".into()));
        }
        Ok(Self { n_cols, values })
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.n_cols
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patterns_are_shared() {
        let d = IncompleteDataset::from_options(&[
            vec![Some(1.0), None],
            vec![Some(2.0), Some(3.0)],
            vec![Some(4.0), None],
        ])
        .unwrap();
        assert_eq!(d.patterns().len(), 2);
        assert_eq!(d.pattern_index(0), d.pattern_index(2));
        assert_eq!(d.partition(0).missing(), &[1]);
        assert_eq!(d.value(0, 1), None);
        assert!(d.row(0)[1].is_nan());
    }

    #[test]
    fn column_means_skip_missing() {
        let d = IncompleteDataset::from_options(&[
            vec![Some(1.0), Some(5.0)],
            vec![Some(3.0), None],
        ])
        .unwrap();
        assert_eq!(d.column_means(), vec![2.0, 5.0]);
    }

    #[test]
    fn unobserved_column_detected() {
        let d = IncompleteDataset::from_options(&[vec![Some(1.0), None], vec![Some(3.0), None]])
            .unwrap();
        assert!(matches!(
            d.check_columns_observed(),
            Err(Error::UnobservedColumn { column: 1 })
        ));
    }
}
