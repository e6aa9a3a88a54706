//! E-step for normal and restricted skew-normal mixtures with arbitrary
//! missing patterns.
//!
//! Everything that depends only on (pattern, component) is computed once per
//! iteration in a [`PatternKernel`]; rows then only do vector arithmetic.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dataset::IncompleteDataset;
use super::model::{Family, MixtureModel};
use crate::error::{Error, Result};
use crate::math::density::gaussian_ln_pdf;
use crate::math::linalg::{select_block, select_vec, SpdFactor};
use crate::math::normal::ln_normal_cdf;
use crate::math::{truncated_normal_moments, BlockPartition};

/// Lower clamp for the conditional skew variance `sigma^2_{ik,o}`.
pub const SKEW_VARIANCE_FLOOR: f64 = 1e-12;

const PAR_MIN_ROWS: usize = 64;

/// Latent-skew expectations for one (row, component).
#[derive(Debug, Clone, PartialEq)]
pub struct SkewExpectation {
    /// E(u | x_o)
    pub e1: f64,
    /// E(u^2 | x_o)
    pub e2: f64,
    /// E(x u | x_o) / e1, equal to x on observed coordinates.
    pub xtilde: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentExpectation {
    /// E(x | x_o, component), equal to x on observed coordinates.
    pub xhat: DVector<f64>,
    /// Conditional covariance of the missing block (empty if none missing).
    pub chat_mm: DMatrix<f64>,
    pub skew: Option<SkewExpectation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowExpectation {
    pub tau: Vec<f64>,
    pub components: Vec<ComponentExpectation>,
    /// ln sum_k pi_k f_k(x_o); zero for rows with no observed cell.
    pub ln_density: f64,
    /// Rows with no observed cell are excluded from fitting.
    pub excluded: bool,
}

/// Output of one E-step.
#[derive(Debug, Clone)]
pub struct EStepRecord {
    pub family: Family,
    pub rows: Vec<RowExpectation>,
    /// Observed-data log-likelihood of the model the expectations came from.
    pub log_likelihood: f64,
    /// Number of rows that enter the M-step.
    pub n_fitted: usize,
    /// Skewness vectors of the model the expectations came from.
    pub skews: Vec<DVector<f64>>,
}

impl EStepRecord {
    pub fn tau(&self, i: usize, k: usize) -> f64 {
        self.rows[i].tau[k]
    }
}

/// Per-(pattern, component) quantities.
#[derive(Debug, Clone)]
pub(crate) struct PatternKernel {
    loc_o: DVector<f64>,
    loc_m: DVector<f64>,
    /// Factor of the observed-marginal matrix: Sigma_oo (normal) or Omega_oo (skew).
    marginal: Option<SpdFactor>,
    /// Sigma_mo Sigma_oo^-1
    regression: DMatrix<f64>,
    /// Sigma_mm - Sigma_mo Sigma_oo^-1 Sigma_om
    conditional_cov: DMatrix<f64>,
    skew: Option<SkewKernel>,
}

#[derive(Debug, Clone)]
struct SkewKernel {
    /// Omega_oo^-1 delta_o
    omega_inv_delta: DVector<f64>,
    /// sigma_{ik,o}
    sd: f64,
    /// delta_m - Sigma_mo Sigma_oo^-1 delta_o
    delta_resid: DVector<f64>,
}

impl PatternKernel {
    pub(crate) fn build(
        model: &MixtureModel,
        k: usize,
        part: &BlockPartition,
        first_row: usize,
    ) -> Result<Self> {
        let c = model.component(k);
        let (o, m) = (part.observed(), part.missing());
        let singular = || Error::SingularBlock {
            row: first_row,
            component: k,
            pattern: o.to_vec(),
        };
        let sigma = c.scale.matrix();
        let loc_o = select_vec(&c.location, o);
        let loc_m = select_vec(&c.location, m);
        let s_om = select_block(sigma, o, m);
        let s_mm = select_block(sigma, m, m);
        let (sigma_oo_factor, regression, conditional_cov) = if o.is_empty() {
            (None, DMatrix::zeros(m.len(), 0), s_mm)
        } else {
            let f = SpdFactor::new(select_block(sigma, o, o)).map_err(|_| singular())?;
            let reg = f.solve_mat(&s_om).transpose();
            let cond = &s_mm - &reg * &s_om;
            (Some(f), reg, cond)
        };
        match model.family() {
            Family::Mn => Ok(Self {
                loc_o,
                loc_m,
                marginal: sigma_oo_factor,
                regression,
                conditional_cov,
                skew: None,
            }),
            Family::Msn => {
                let delta_o = select_vec(&c.skew, o);
                let delta_m = select_vec(&c.skew, m);
                let (marginal, omega_inv_delta) = if o.is_empty() {
                    (None, DVector::zeros(0))
                } else {
                    let omega_oo = select_block(sigma, o, o) + &delta_o * delta_o.transpose();
                    let f = SpdFactor::new(omega_oo).map_err(|_| singular())?;
                    let v = f.solve_vec(&delta_o);
                    (Some(f), v)
                };
                let mut s2 = 1.0 - delta_o.dot(&omega_inv_delta);
                if !(s2 > 0.0) {
                    return Err(Error::SkewInfeasible {
                        value: s2,
                        row: Some(first_row),
                        component: Some(k),
                    });
                }
                if s2 < SKEW_VARIANCE_FLOOR {
                    s2 = SKEW_VARIANCE_FLOOR;
                }
                let delta_resid = &delta_m - &regression * &delta_o;
                Ok(Self {
                    loc_o,
                    loc_m,
                    marginal,
                    regression,
                    conditional_cov,
                    skew: Some(SkewKernel {
                        omega_inv_delta,
                        sd: s2.sqrt(),
                        delta_resid,
                    }),
                })
            }
        }
    }

    /// ln f_k(x_o), plus the standardized skew argument for the skew family.
    fn ln_marginal(&self, resid: &DVector<f64>) -> (f64, Option<f64>) {
        let ln_phi = match &self.marginal {
            Some(f) => gaussian_ln_pdf(f, resid),
            None => 0.0,
        };
        match &self.skew {
            None => (ln_phi, None),
            Some(s) => {
                let mu = s.omega_inv_delta.dot(resid);
                let ln = if resid.is_empty() {
                    // 2 * Phi(0) = 1 exactly
                    ln_phi
                } else {
                    LN_2 + ln_phi + ln_normal_cdf(mu / s.sd)
                };
                (ln, Some(mu))
            }
        }
    }

    fn expectation(
        &self,
        x: &[f64],
        part: &BlockPartition,
        resid: &DVector<f64>,
        skew_mu: Option<f64>,
    ) -> Result<ComponentExpectation> {
        let m = part.missing();
        let mut xhat = DVector::from_column_slice(x);
        // Normal-part conditional mean xi_m + B r; the skew terms shift it
        // along delta_m - B delta_o.
        let mut base = self.loc_m.clone();
        if !m.is_empty() && !resid.is_empty() {
            base.gemv(1.0, &self.regression, resid, 1.0);
        }
        match (&self.skew, skew_mu) {
            (Some(s), Some(mu)) => {
                let tm = truncated_normal_moments(mu, s.sd)?;
                let (e1, e2) = (tm.e1, tm.e2);
                let ratio = e2 / e1;
                let mut xtilde = xhat.clone();
                for (a, &j) in m.iter().enumerate() {
                    xhat[j] = base[a] + e1 * s.delta_resid[a];
                    xtilde[j] = base[a] + ratio * s.delta_resid[a];
                }
                let var_u = (e2 - e1 * e1).max(0.0);
                let mut chat_mm = self.conditional_cov.clone();
                chat_mm.ger(var_u, &s.delta_resid, &s.delta_resid, 1.0);
                Ok(ComponentExpectation {
                    xhat,
                    chat_mm,
                    skew: Some(SkewExpectation { e1, e2, xtilde }),
                })
            }
            _ => {
                for (a, &j) in m.iter().enumerate() {
                    xhat[j] = base[a];
                }
                Ok(ComponentExpectation {
                    xhat,
                    chat_mm: self.conditional_cov.clone(),
                    skew: None,
                })
            }
        }
    }
}

pub(crate) fn build_kernels(
    data: &IncompleteDataset,
    model: &MixtureModel,
) -> Result<Vec<Vec<PatternKernel>>> {
    if data.n_cols() != model.dim() {
        return Err(Error::Schema(format!(
            "dataset has {} columns, model has dimension {}",
            data.n_cols(),
            model.dim()
        )));
    }
    let mut first_row = vec![usize::MAX; data.patterns().len()];
    for i in (0..data.n_rows()).rev() {
        first_row[data.pattern_index(i)] = i;
    }
    data.patterns()
        .iter()
        .zip(&first_row)
        .map(|(part, &row)| {
            (0..model.k())
                .map(|k| PatternKernel::build(model, k, part, row))
                .collect()
        })
        .collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn row_weights(ln_weights: &[f64], ln_joint: &[f64]) -> (Vec<f64>, f64) {
    let lw: Vec<f64> = ln_weights.iter().zip(ln_joint).map(|(a, b)| a + b).collect();
    let lse = log_sum_exp(&lw);
    let mut tau: Vec<f64> = lw.iter().map(|l| (l - lse).exp()).collect();
    let s: f64 = tau.iter().sum();
    tau.iter_mut().for_each(|t| *t /= s);
    (tau, lse)
}

fn residual(data: &IncompleteDataset, i: usize, kernel: &PatternKernel) -> DVector<f64> {
    let mut r = data.observed_vec(i);
    r -= &kernel.loc_o;
    r
}

fn ln_weights(model: &MixtureModel) -> Vec<f64> {
    model.weights().iter().map(|w| w.ln()).collect()
}

/// Full E-step; dispatches on the model family.
pub fn e_step(data: &IncompleteDataset, model: &MixtureModel) -> Result<EStepRecord> {
    let kernels = build_kernels(data, model)?;
    let lnw = ln_weights(model);
    let rows: Vec<RowExpectation> = (0..data.n_rows())
        .into_par_iter()
        .with_min_len(PAR_MIN_ROWS)
        .map(|i| {
            let part = data.partition(i);
            let ks = &kernels[data.pattern_index(i)];
            let mut ln_f = Vec::with_capacity(ks.len());
            let mut comps = Vec::with_capacity(ks.len());
            for (k, kernel) in ks.iter().enumerate() {
                let resid = residual(data, i, kernel);
                let (lf, mu) = kernel.ln_marginal(&resid);
                ln_f.push(lf);
                comps.push(kernel.expectation(data.row(i), part, &resid, mu).map_err(|e| {
                    match e {
                        Error::Domain(msg) => Error::Domain(format!("row {i}, component {k}: {msg}")),
                        other => other,
                    }
                })?);
            }
            let excluded = part.observed().is_empty();
            let (tau, lse) = row_weights(&lnw, &ln_f);
            Ok(RowExpectation {
                tau,
                components: comps,
                ln_density: if excluded { 0.0 } else { lse },
                excluded,
            })
        })
        .collect::<Result<_>>()?;
    let log_likelihood = rows.iter().filter(|r| !r.excluded).map(|r| r.ln_density).sum();
    let n_fitted = rows.iter().filter(|r| !r.excluded).count();
    Ok(EStepRecord {
        family: model.family(),
        rows,
        log_likelihood,
        n_fitted,
        skews: model.components().iter().map(|c| c.skew.clone()).collect(),
    })
}

/// E-step for a normal mixture.
pub fn e_step_mn(data: &IncompleteDataset, model: &MixtureModel) -> Result<EStepRecord> {
    if model.family() != Family::Mn {
        return Err(Error::Schema("e_step_mn called with a skew-normal model".into()));
    }
    e_step(data, model)
}

/// E-step for a restricted skew-normal mixture.
pub fn e_step_msn(data: &IncompleteDataset, model: &MixtureModel) -> Result<EStepRecord> {
    if model.family() != Family::Msn {
        return Err(Error::Schema("e_step_msn called with a normal model".into()));
    }
    e_step(data, model)
}

/// Observed-data log-likelihood `sum_i ln sum_k pi_k f_k(x_io)`, using the
/// observed marginal of each component. Rows with nothing observed contribute
/// nothing.
pub fn observed_loglik(data: &IncompleteDataset, model: &MixtureModel) -> Result<f64> {
    let kernels = build_kernels(data, model)?;
    let lnw = ln_weights(model);
    let per_row: Vec<f64> = (0..data.n_rows())
        .into_par_iter()
        .with_min_len(PAR_MIN_ROWS)
        .map(|i| {
            if data.is_all_missing(i) {
                return 0.0;
            }
            let ks = &kernels[data.pattern_index(i)];
            let lw: Vec<f64> = ks
                .iter()
                .zip(&lnw)
                .map(|(kernel, w)| w + kernel.ln_marginal(&residual(data, i, kernel)).0)
                .collect();
            log_sum_exp(&lw)
        })
        .collect();
    Ok(per_row.iter().sum())
}
