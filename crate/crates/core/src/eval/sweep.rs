//! The (bin, strategy, missing fraction) sweep: draw test samples, mask,
//! impute, classify, aggregate over samples.

use rayon::prelude::*;
use serde::Serialize;

use super::confusion::{quadratic_diff, ConfusionTable, ErrorAggregation};
use crate::error::{Error, Result};
use crate::imputers::{mean_impute, run_imputer, ImputationResult, ImputerKind, ImputerSpec};
use crate::net::TrainedNet;
use crate::seed::derive_seed;
use crate::sim::{make_test_samples, Event, Mechanism, MissingnessSpec, TestSample};
use crate::species::Species;

const SAMPLE_TAG: u64 = 0x7377_6565_70;
const STRATEGY_TAG: u64 = 0x7374_7261_74;

/// Mean and sample standard deviation of the defined values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        let n = v.len();
        if n == 0 {
            return Self::default();
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = (n >= 2).then(|| {
            (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Self {
            mean: Some(mean),
            sd,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesStats {
    pub species: Species,
    pub efficiency: Stat,
    pub purity: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub bin_index: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub strategy: ImputerKind,
    /// Per-cell missing probability; for non-MCAR mechanisms the realized
    /// fraction of missing cells.
    pub eta: f64,
    pub species: Vec<SpeciesStats>,
    /// Imputation error over missing cells; absent for listwise deletion.
    pub rms: Stat,
    pub n_samples: usize,
    pub tables: Vec<ConfusionTable>,
}

impl SweepResult {
    pub fn stats(&self, s: Species) -> &SpeciesStats {
        &self.species[s.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub strategy: ImputerKind,
    pub eta: Option<f64>,
    pub sample: Option<usize>,
    pub message: String,
}

/// One momentum bin ready for evaluation.
#[derive(Debug, Clone)]
pub struct SweepBin {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Rows test samples are drawn from.
    pub pool: Vec<Event>,
    pub net: TrainedNet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub strategies: Vec<ImputerSpec>,
    /// Missingness mechanism; for MCAR the `eta` field is replaced by each
    /// grid value, other mechanisms run once per (bin, strategy).
    pub mechanism: Mechanism,
    pub etas: Vec<f64>,
    pub n_samples: usize,
    pub sample_size: usize,
    pub master_seed: u64,
    pub aggregation: ErrorAggregation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub bin: usize,
    pub eta: Option<f64>,
    pub strategy: usize,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Domain("no strategies to sweep".into()));
        }
        for s in &self.strategies {
            s.validate()?;
        }
        if self.n_samples < 2 {
            return Err(Error::Domain("need at least 2 test samples per cell".into()));
        }
        if self.sample_size == 0 {
            return Err(Error::Domain("sample size must be positive".into()));
        }
        if matches!(self.mechanism, Mechanism::Mcar { .. }) {
            if self.etas.is_empty() {
                return Err(Error::Domain("empty missing-fraction grid".into()));
            }
            if let Some(e) = self.etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
                return Err(Error::Domain(format!("missing fraction {e} outside [0, 1]")));
            }
        } else {
            self.mechanism.validate()?;
        }
        Ok(())
    }

    fn eta_grid(&self) -> Vec<Option<f64>> {
        match self.mechanism {
            Mechanism::Mcar { .. } => self.etas.iter().map(|e| Some(*e)).collect(),
            _ => vec![None],
        }
    }

    /// Cells in output order: bins, then missing fractions, then strategies.
    pub fn cells(&self, n_bins: usize) -> Vec<SweepCell> {
        let etas = self.eta_grid();
        let mut out = Vec::new();
        for bin in 0..n_bins {
            for &eta in &etas {
                for strategy in 0..self.strategies.len() {
                    out.push(SweepCell { bin, eta, strategy });
                }
            }
        }
        out
    }

    fn missingness(&self, bin: &SweepBin, eta: Option<f64>) -> MissingnessSpec {
        let mechanism = match eta {
            Some(eta) => Mechanism::Mcar { eta },
            None => self.mechanism,
        };
        MissingnessSpec {
            mechanism,
            seed: derive_seed(self.master_seed, &[SAMPLE_TAG, bin.index as u64]),
        }
    }

    fn strategy_seed(&self, bin: &SweepBin, kind: ImputerKind, eta: Option<f64>, sample: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &[
                STRATEGY_TAG,
                bin.index as u64,
                kind.tag(),
                eta.map_or(u64::MAX, f64::to_bits),
                sample as u64,
            ],
        )
    }
}

struct SampleOutcome {
    table: ConfusionTable,
    rms: Option<f64>,
}

fn evaluate_sample(
    plan: &SweepPlan,
    bin: &SweepBin,
    spec: &ImputerSpec,
    sample: &TestSample,
) -> Result<SampleOutcome> {
    let data = &sample.data;
    let result: ImputationResult = if data.n_missing_cells() == 0 && spec.kind != ImputerKind::Listwise {
        mean_impute(data)?
    } else {
        run_imputer(data, spec)?
    };
    let meta = data.meta().ok_or_else(|| Error::Schema("test sample has no labels".into()))?;
    let mut table = ConfusionTable::default();
    for (r, &src) in result.kept_rows.iter().enumerate() {
        let truth = meta[src]
            .species
            .ok_or_else(|| Error::Schema(format!("row {src} has no species")))?;
        table.add(truth, bin.net.classify(result.completed.row(r)));
    }
    let rms = (spec.kind != ImputerKind::Listwise).then(|| {
        let missing: Vec<bool> = (0..data.n_rows())
            .flat_map(|i| data.row_mask(i).iter().map(|o| !o))
            .collect();
        quadratic_diff(&sample.truth, &result.completed, &missing, plan.aggregation)
    });
    Ok(SampleOutcome { table, rms })
}

fn run_group(plan: &SweepPlan, bin: &SweepBin, eta: Option<f64>) -> Vec<std::result::Result<SweepResult, CellFailure>> {
    let fail = |kind: ImputerKind, sample: Option<usize>, e: &Error| CellFailure {
        bin_lo: bin.lo,
        bin_hi: bin.hi,
        strategy: kind,
        eta,
        sample,
        message: e.to_string(),
    };
    let samples = match make_test_samples(&bin.pool, plan.n_samples, plan.sample_size, &plan.missingness(bin, eta)) {
        Ok(s) => s,
        Err(e) => return plan.strategies.iter().map(|s| Err(fail(s.kind, None, &e))).collect(),
    };
    let realized = {
        let cells: usize = samples.iter().map(|s| s.data.n_rows() * s.data.n_cols()).sum();
        let missing: usize = samples.iter().map(|s| s.data.n_missing_cells()).sum();
        missing as f64 / cells as f64
    };
    plan.strategies
        .par_iter()
        .map(|strategy| {
            let outcomes: Vec<Result<SampleOutcome>> = samples
                .par_iter()
                .enumerate()
                .map(|(s, sample)| {
                    let spec = strategy.with_seed(plan.strategy_seed(bin, strategy.kind, eta, s));
                    evaluate_sample(plan, bin, &spec, sample)
                })
                .collect();
            let mut ok = Vec::with_capacity(outcomes.len());
            for (s, o) in outcomes.into_iter().enumerate() {
                ok.push(o.map_err(|e| fail(strategy.kind, Some(s), &e))?);
            }
            let species = Species::ALL
                .iter()
                .map(|&sp| SpeciesStats {
                    species: sp,
                    efficiency: Stat::of(ok.iter().map(|o| o.table.efficiency(sp))),
                    purity: Stat::of(ok.iter().map(|o| o.table.purity(sp))),
                })
                .collect();
            Ok(SweepResult {
                bin_index: bin.index,
                bin_lo: bin.lo,
                bin_hi: bin.hi,
                strategy: strategy.kind,
                eta: eta.unwrap_or(realized),
                species,
                rms: Stat::of(ok.iter().map(|o| o.rms)),
                n_samples: ok.len(),
                tables: ok.iter().map(|o| o.table).collect(),
            })
        })
        .collect()
}

/// Runs every cell of `plan` over `bins`. Results come back in
/// [`SweepPlan::cells`] order; failed cells are returned separately.
pub fn run_sweep(bins: &[SweepBin], plan: &SweepPlan) -> Result<(Vec<SweepResult>, Vec<CellFailure>)> {
    plan.validate()?;
    let groups: Vec<(usize, Option<f64>)> = (0..bins.len())
        .flat_map(|b| plan.eta_grid().into_iter().map(move |e| (b, e)))
        .collect();
    let outcomes: Vec<_> = groups
        .par_iter()
        .map(|&(b, eta)| run_group(plan, &bins[b], eta))
        .collect();
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes.into_iter().flatten() {
        match o {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok((results, failures))
}
