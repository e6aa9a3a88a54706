//! The five missing-data treatments behind one interface: listwise deletion,
//! mean imputation, bootstrap-EM multiple imputation, and maximum-likelihood
//! imputation from a normal or skew-normal mixture.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{
    e_step, fit, impute_from_record, CompletedDataset, Family, FitOptions, IncompleteDataset,
    InitPolicy, MixtureModel,
};
use crate::error::{Error, Result};
use crate::math::SpdFactor;
use crate::seed::{derive_seed, rng_for};

/// Bootstrap replicates that fail to fit are redrawn this many times.
pub const MI_MAX_RETRIES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputerKind {
    Listwise,
    Mean,
    Mi,
    MlMn,
    MlMsn,
}

impl ImputerKind {
    pub const ALL: [ImputerKind; 5] = [
        ImputerKind::Listwise,
        ImputerKind::Mean,
        ImputerKind::Mi,
        ImputerKind::MlMn,
        ImputerKind::MlMsn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImputerKind::Listwise => "listwise",
            ImputerKind::Mean => "mean",
            ImputerKind::Mi => "mi",
            ImputerKind::MlMn => "ml_mn",
            ImputerKind::MlMsn => "ml_msn",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Stable small integer used when deriving per-strategy seeds.
    pub fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for ImputerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_m() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImputerSpec {
    pub kind: ImputerKind,
    /// Number of imputations for `mi`.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Mixture size for `ml_*`; defaults to the number of species present
    /// in the row labels.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub seed: u64,
}

impl ImputerSpec {
    pub fn new(kind: ImputerKind, seed: u64) -> Self {
        Self {
            kind,
            m: default_m(),
            k: None,
            fit: FitOptions::default(),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ImputerKind::Mi && self.m < 2 {
            return Err(Error::Domain(format!("mi needs m >= 2, got {}", self.m)));
        }
        if self.k == Some(0) {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImputationDiagnostics {
    Listwise { empty: bool },
    Mean { fills: Vec<f64> },
    Multiple { replicates: Vec<CompletedDataset>, retries: usize },
    MaximumLikelihood { model: MixtureModel },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    pub kind: ImputerKind,
    pub completed: CompletedDataset,
    /// Source row of every completed row.
    pub kept_rows: Vec<usize>,
    /// Row-major flags over `completed`: true where the cell was imputed.
    pub imputed: Vec<bool>,
    pub diagnostics: ImputationDiagnostics,
}

impl ImputationResult {
    fn full(
        kind: ImputerKind,
        data: &IncompleteDataset,
        completed: CompletedDataset,
        diagnostics: ImputationDiagnostics,
    ) -> Self {
        let imputed = (0..data.n_rows())
            .flat_map(|i| data.row_mask(i).iter().map(|o| !o))
            .collect();
        Self {
            kind,
            completed,
            kept_rows: (0..data.n_rows()).collect(),
            imputed,
            diagnostics,
        }
    }

    pub fn is_imputed(&self, row: usize, col: usize) -> bool {
        self.imputed[row * self.completed.n_cols() + col]
    }

    /// Writes the provenance sidecar: one line per completed row with its
    /// source row and `o`/`i` (observed/imputed) per column.
    pub fn write_provenance<W: Write>(&self, mut w: W) -> Result<()> {
        let p = self.completed.n_cols();
        let cols: Vec<String> = (1..=p).map(|j| format!("c{j}")).collect();
        writeln!(w, "row,source_row,{}", cols.join(","))?;
        for (r, &src) in self.kept_rows.iter().enumerate() {
            let flags: Vec<&str> = (0..p)
                .map(|j| if self.is_imputed(r, j) { "i" } else { "o" })
                .collect();
            writeln!(w, "{r},{src},{}", flags.join(","))?;
        }
        Ok(())
    }
}

/// Keeps the rows with no missing cell.
pub fn listwise(data: &IncompleteDataset) -> ImputationResult {
    let kept: Vec<usize> = (0..data.n_rows()).filter(|&i| data.is_complete_row(i)).collect();
    let values: Vec<f64> = kept.iter().flat_map(|&i| data.row(i).iter().copied()).collect();
    ImputationResult {
        kind: ImputerKind::Listwise,
        completed: CompletedDataset::new(data.n_cols(), values).expect("whole rows"),
        imputed: vec![false; kept.len() * data.n_cols()],
        diagnostics: ImputationDiagnostics::Listwise { empty: kept.is_empty() },
        kept_rows: kept,
    }
}

/// Replaces each missing cell with its column's observed mean.
pub fn mean_impute(data: &IncompleteDataset) -> Result<ImputationResult> {
    data.check_columns_observed()?;
    let fills = data.column_means();
    let mut values = Vec::with_capacity(data.n_rows() * data.n_cols());
    for i in 0..data.n_rows() {
        values.extend((0..data.n_cols()).map(|j| data.value(i, j).unwrap_or(fills[j])));
    }
    let completed = CompletedDataset::new(data.n_cols(), values)?;
    Ok(ImputationResult::full(
        ImputerKind::Mean,
        data,
        completed,
        ImputationDiagnostics::Mean { fills },
    ))
}

/// Lower Cholesky factor of a conditional covariance, tolerating the
/// semi-definite case with a tiny jitter.
fn draw_factor(c: &DMatrix<f64>) -> DMatrix<f64> {
    if let Ok(f) = SpdFactor::new(c.clone()) {
        return f.lower();
    }
    let jitter = 1e-12 * (c.trace() / c.nrows() as f64).max(f64::MIN_POSITIVE);
    let mut bumped = c.clone();
    for d in 0..bumped.nrows() {
        bumped[(d, d)] += jitter;
    }
    SpdFactor::new(bumped)
        .map(|f| f.lower())
        .unwrap_or_else(|_| DMatrix::zeros(c.nrows(), c.ncols()))
}

/// One bootstrap-EM replicate: fit K=1 on a resample, then draw every missing
/// block from its conditional normal.
fn mi_replicate(
    data: &IncompleteDataset,
    options: &FitOptions,
    seed: u64,
    j: usize,
) -> Result<(CompletedDataset, usize)> {
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let mut last_err = None;
    for attempt in 0..=MI_MAX_RETRIES {
        let mut rng = rng_for(seed, &[j as u64, attempt as u64]);
        let sample: Vec<usize> = (0..rows.len()).map(|_| *rows.choose(&mut rng).expect("non-empty")).collect();
        let boot = data.select_rows(&sample);
        let model = match fit(
            &boot,
            Family::Mn,
            1,
            &InitPolicy::KMeansPlusPlus { seed: derive_seed(seed, &[j as u64, attempt as u64, 1]) },
            options,
        ) {
            Ok(m) => m,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let record = e_step(data, &model)?;
        let mut out = impute_from_record(data, &record).values().to_vec();
        let p = data.n_cols();
        for (i, row) in record.rows.iter().enumerate() {
            let missing = data.partition(i).missing();
            if missing.is_empty() {
                continue;
            }
            let ce = &row.components[0];
            let lower = draw_factor(&ce.chat_mm);
            let z = DVector::from_fn(missing.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let noise = lower * z;
            for (a, &col) in missing.iter().enumerate() {
                out[i * p + col] = ce.xhat[col] + noise[a];
            }
        }
        return Ok((CompletedDataset::new(p, out)?, attempt));
    }
    Err(last_err.unwrap_or_else(|| Error::InsufficientData("bootstrap replicate failed".into())))
}

/// Bootstrap-EM multiple imputation under a single multivariate normal. The
/// completed output is the cell-wise average of the `m` imputations.
pub fn multiple_impute(data: &IncompleteDataset, spec: &ImputerSpec) -> Result<ImputationResult> {
    spec.validate()?;
    data.check_columns_observed()?;
    let p = data.n_cols();
    if data.n_missing_cells() == 0 {
        let completed = CompletedDataset::new(p, data_values(data))?;
        return Ok(ImputationResult::full(
            ImputerKind::Mi,
            data,
            completed.clone(),
            ImputationDiagnostics::Multiple { replicates: vec![completed; spec.m], retries: 0 },
        ));
    }
    let results: Vec<(CompletedDataset, usize)> = (0..spec.m)
        .into_par_iter()
        .map(|j| mi_replicate(data, &spec.fit, spec.seed, j))
        .collect::<Result<_>>()?;
    let mut avg = vec![0.0; data.n_rows() * p];
    for (rep, _) in &results {
        for (a, v) in avg.iter_mut().zip(rep.values()) {
            *a += v;
        }
    }
    let m = spec.m as f64;
    avg.iter_mut().for_each(|a| *a /= m);
    // Observed cells are copied rather than averaged so they stay bit-exact.
    for i in 0..data.n_rows() {
        for j in 0..p {
            if let Some(v) = data.value(i, j) {
                avg[i * p + j] = v;
            }
        }
    }
    let retries = results.iter().map(|r| r.1).sum();
    Ok(ImputationResult::full(
        ImputerKind::Mi,
        data,
        CompletedDataset::new(p, avg)?,
        ImputationDiagnostics::Multiple {
            replicates: results.into_iter().map(|r| r.0).collect(),
            retries,
        },
    ))
}

fn data_values(data: &IncompleteDataset) -> Vec<f64> {
    (0..data.n_rows()).flat_map(|i| data.row(i).iter().copied()).collect()
}

/// Mixture size to use: explicit, or the number of distinct labelled species.
pub fn resolve_k(data: &IncompleteDataset, k: Option<usize>) -> Result<usize> {
    if let Some(k) = k {
        return Ok(k);
    }
    let species: BTreeSet<_> = data
        .meta()
        .into_iter()
        .flatten()
        .filter_map(|m| m.species)
        .collect();
    if species.is_empty() {
        return Err(Error::Domain(
            "mixture size not given and rows carry no species labels".into(),
        ));
    }
    Ok(species.len())
}

/// Fits a normal (`ml_mn`) or skew-normal (`ml_msn`) mixture and imputes
/// from it.
pub fn ml_impute(data: &IncompleteDataset, spec: &ImputerSpec) -> Result<ImputationResult> {
    spec.validate()?;
    let family = match spec.kind {
        ImputerKind::MlMn => Family::Mn,
        ImputerKind::MlMsn => Family::Msn,
        other => return Err(Error::Domain(format!("ml_impute called with kind {other}"))),
    };
    let k = resolve_k(data, spec.k)?;
    let model = fit(data, family, k, &InitPolicy::KMeansPlusPlus { seed: spec.seed }, &spec.fit)?;
    let record = e_step(data, &model)?;
    let completed = impute_from_record(data, &record);
    Ok(ImputationResult::full(
        spec.kind,
        data,
        completed,
        ImputationDiagnostics::MaximumLikelihood { model },
    ))
}

/// Runs the strategy named by `spec.kind`.
pub fn run_imputer(data: &IncompleteDataset, spec: &ImputerSpec) -> Result<ImputationResult> {
    spec.validate()?;
    match spec.kind {
        ImputerKind::Listwise => Ok(listwise(data)),
        ImputerKind::Mean => mean_impute(data),
        ImputerKind::Mi => multiple_impute(data, spec),
        ImputerKind::MlMn | ImputerKind::MlMsn => ml_impute(data, spec),
    }
}
