use serde::{Deserialize, Serialize};

use super::dataset::IncompleteDataset;
use super::estep::{e_step, EStepRecord};
use super::init::{initial_model, InitPolicy, SkewInit};
use super::model::{Family, FitDiagnostics, MixtureModel};
use super::mstep::{m_step_mn, m_step_msn_with};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop when |logL_t - logL_{t-1}| / |logL_t| falls below this.
    pub rel_tol: f64,
    pub skew_init: SkewInit,
    /// Keep every skewness vector at its starting value.
    pub freeze_skew: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_tol: 1e-8,
            skew_init: SkewInit::default(),
            freeze_skew: false,
        }
    }
}

impl FitOptions {
    /// Runs exactly `n` EM iterations.
    pub fn fixed_iterations(n: usize) -> Self {
        Self {
            max_iter: n,
            rel_tol: 0.0,
            ..Self::default()
        }
    }
}

fn m_step_for(
    data: &IncompleteDataset,
    record: &EStepRecord,
    freeze_skew: bool,
) -> Result<MixtureModel> {
    match record.family {
        Family::Mn => m_step_mn(data, record),
        Family::Msn => m_step_msn_with(data, record, freeze_skew),
    }
}

/// One EM iteration. Returns the updated model and the observed
/// log-likelihood of the model that was passed in.
pub fn em_step(data: &IncompleteDataset, model: &MixtureModel) -> Result<(MixtureModel, f64)> {
    let record = e_step(data, model)?;
    Ok((m_step_for(data, &record, false)?, record.log_likelihood))
}

/// Fits a K-component mixture by EM.
///
/// The returned model carries [`FitDiagnostics`]; `trace[t]` is the observed
/// log-likelihood after `t` M-steps, and `log_likelihood` is the last entry,
/// i.e. that of the returned parameters.
pub fn fit(
    data: &IncompleteDataset,
    family: Family,
    k: usize,
    init: &InitPolicy,
    options: &FitOptions,
) -> Result<MixtureModel> {
    if k == 0 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    if data.n_rows() == 0 {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    data.check_columns_observed()?;
    let mut model = match init {
        InitPolicy::KMeansPlusPlus { seed } => {
            initial_model(data, family, k, *seed, options.skew_init)?
        }
        InitPolicy::Given(m) => {
            if m.family() != family || m.k() != k {
                return Err(Error::Schema(format!(
                    "initial model is {:?} with K={}, fit requested {family:?} with K={k}",
                    m.family(),
                    m.k()
                )));
            }
            m.clone()
        }
    };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let record = e_step(data, &model)?;
        let ll = record.log_likelihood;
        if let Some(&prev) = trace.last() {
            let change: f64 = ll - prev;
            if change.abs() / ll.abs() < options.rel_tol {
                converged = true;
            }
        }
        trace.push(ll);
        if converged || iterations >= options.max_iter {
            break;
        }
        model = m_step_for(data, &record, options.freeze_skew)?;
        iterations += 1;
    }
    model.set_diagnostics(FitDiagnostics {
        log_likelihood: *trace.last().expect("at least one E-step"),
        iterations,
        converged,
        trace,
    });
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_normal_on_complete_data_converges_fast() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos() + 0.1 * i as f64])
            .collect();
        let data = IncompleteDataset::complete(&rows).unwrap();
        let m = fit(&data, Family::Mn, 1, &InitPolicy::KMeansPlusPlus { seed: 1 }, &FitOptions::default())
            .unwrap();
        let d = m.diagnostics().unwrap();
        assert!(d.converged);
        assert!(d.iterations <= 2, "{} iterations", d.iterations);
    }

    #[test]
    fn fixed_iterations_never_report_convergence() {
        let data = IncompleteDataset::complete(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let m = fit(&data, Family::Mn, 1, &InitPolicy::KMeansPlusPlus { seed: 0 }, &FitOptions::fixed_iterations(4))
            .unwrap();
        let d = m.diagnostics().unwrap();
        assert_eq!(d.iterations, 4);
        assert_eq!(d.trace.len(), 5);
        assert!(!d.converged);
    }

    #[test]
    fn k_zero_is_rejected() {
        let data = IncompleteDataset::complete(&[vec![0.0]]).unwrap();
        assert!(fit(&data, Family::Mn, 0, &InitPolicy::KMeansPlusPlus { seed: 0 }, &FitOptions::default()).is_err());
    }
}
