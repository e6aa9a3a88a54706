//! M-step updates. All sums over rows run in row order so the result does
//! not depend on how the E-step was scheduled.

use nalgebra::{DMatrix, DVector};

use super::dataset::IncompleteDataset;
use super::estep::{ComponentExpectation, EStepRecord};
use super::model::{Component, Family, MixtureModel};
use crate::error::{Error, Result};
use crate::math::SymMatrix;

/// Relative ridge added to every updated scale matrix: `eps * trace / p`.
pub const RIDGE_EPS: f64 = 1e-8;
/// A component whose responsibility mass falls below this fraction of the
/// fitted rows is declared degenerate.
pub const COMPONENT_FLOOR: f64 = 1e-6;
/// Floor on `sum_i tau_ik e2_ik` relative to the component mass.
pub const SKEW_FLOOR: f64 = 1e-6;

fn check(data: &IncompleteDataset, record: &EStepRecord, family: Family) -> Result<()> {
    if record.family != family {
        return Err(Error::Schema(format!(
            "E-step record is for {:?}, M-step requested for {family:?}",
            record.family
        )));
    }
    if record.rows.len() != data.n_rows() {
        return Err(Error::Schema(format!(
            "E-step record has {} rows, dataset has {}",
            record.rows.len(),
            data.n_rows()
        )));
    }
    if record.n_fitted == 0 {
        return Err(Error::InsufficientData("no row has an observed cell".into()));
    }
    data.check_columns_observed()
}

/// Component masses `n_k = sum_i tau_ik` over fitted rows, with the floor check.
fn masses(record: &EStepRecord, k: usize) -> Result<Vec<f64>> {
    let mut n = vec![0.0; k];
    for row in record.rows.iter().filter(|r| !r.excluded) {
        for (acc, t) in n.iter_mut().zip(&row.tau) {
            *acc += t;
        }
    }
    let floor = COMPONENT_FLOOR * record.n_fitted as f64;
    for (idx, &mass) in n.iter().enumerate() {
        if !(mass >= floor) {
            return Err(Error::DegenerateComponent { component: idx, mass });
        }
    }
    Ok(n)
}

/// Adds `w * (c c' + Chat)` to `acc`, scattering Chat into the missing block.
fn add_second_moment(
    acc: &mut DMatrix<f64>,
    w: f64,
    centered: &DVector<f64>,
    ce: &ComponentExpectation,
    missing: &[usize],
) {
    acc.ger(w, centered, centered, 1.0);
    for (a, &r) in missing.iter().enumerate() {
        for (b, &c) in missing.iter().enumerate() {
            acc[(r, c)] += w * ce.chat_mm[(a, b)];
        }
    }
}

fn finish_scale(acc: DMatrix<f64>, mass: f64, component: usize) -> Result<SymMatrix> {
    let s = SymMatrix::symmetrize(acc / mass);
    let p = s.dim() as f64;
    let out = s.with_ridge(RIDGE_EPS * s.trace() / p);
    out.factor()
        .map_err(|_| Error::NotPositiveDefinite { component: Some(component) })?;
    Ok(out)
}

fn weights(n: &[f64], n_fitted: usize) -> Vec<f64> {
    let mut w: Vec<f64> = n.iter().map(|m| m / n_fitted as f64).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// M-step for a normal mixture.
pub fn m_step_mn(data: &IncompleteDataset, record: &EStepRecord) -> Result<MixtureModel> {
    check(data, record, Family::Mn)?;
    let k = record.rows[0].tau.len();
    let p = data.n_cols();
    let n = masses(record, k)?;
    let mut components = Vec::with_capacity(k);
    for c in 0..k {
        let mut sum = DVector::zeros(p);
        for row in record.rows.iter().filter(|r| !r.excluded) {
            sum.axpy(row.tau[c], &row.components[c].xhat, 1.0);
        }
        let mu = sum / n[c];
        let mut acc = DMatrix::zeros(p, p);
        for (i, row) in record.rows.iter().enumerate().filter(|(_, r)| !r.excluded) {
            let ce = &row.components[c];
            let centered = &ce.xhat - &mu;
            add_second_moment(&mut acc, row.tau[c], &centered, ce, data.partition(i).missing());
        }
        components.push(Component::normal(mu, finish_scale(acc, n[c], c)?));
    }
    Ok(MixtureModel::new_unchecked(
        Family::Mn,
        weights(&n, record.n_fitted),
        components,
    ))
}

/// M-step for a restricted skew-normal mixture. `xi` is updated with the
/// skewness the expectations were computed under; `delta` and `Sigma` then
/// use the new `xi` and new `delta`.
pub fn m_step_msn(data: &IncompleteDataset, record: &EStepRecord) -> Result<MixtureModel> {
    m_step_msn_with(data, record, false)
}

pub(crate) fn m_step_msn_with(
    data: &IncompleteDataset,
    record: &EStepRecord,
    freeze_skew: bool,
) -> Result<MixtureModel> {
    check(data, record, Family::Msn)?;
    let k = record.rows[0].tau.len();
    let p = data.n_cols();
    let n = masses(record, k)?;
    let fitted = || record.rows.iter().enumerate().filter(|(_, r)| !r.excluded);
    let mut components = Vec::with_capacity(k);
    for c in 0..k {
        let delta_old = &record.skews[c];
        let mut xi_sum = DVector::zeros(p);
        let mut e1_sum = 0.0;
        let mut e2_sum = 0.0;
        for (_, row) in fitted() {
            let ce = &row.components[c];
            let s = ce.skew.as_ref().ok_or_else(|| Error::Schema("missing skew expectations".into()))?;
            let t = row.tau[c];
            xi_sum.axpy(t, &ce.xhat, 1.0);
            e1_sum += t * s.e1;
            e2_sum += t * s.e2;
        }
        let xi = (xi_sum - delta_old * e1_sum) / n[c];

        // sum_i tau e1 (xtilde - xi)
        let mut cross = DVector::zeros(p);
        for (_, row) in fitted() {
            let ce = &row.components[c];
            let s = ce.skew.as_ref().expect("checked above");
            cross.axpy(row.tau[c] * s.e1, &(&s.xtilde - &xi), 1.0);
        }
        let delta = if freeze_skew {
            delta_old.clone()
        } else {
            if !(e2_sum >= SKEW_FLOOR * n[c]) {
                return Err(Error::DegenerateSkew { component: c, mass: e2_sum });
            }
            &cross / e2_sum
        };

        let mut acc = DMatrix::zeros(p, p);
        for (i, row) in fitted() {
            let ce = &row.components[c];
            let centered = &ce.xhat - &xi;
            add_second_moment(&mut acc, row.tau[c], &centered, ce, data.partition(i).missing());
        }
        acc.ger(-1.0, &delta, &cross, 1.0);
        acc.ger(-1.0, &cross, &delta, 1.0);
        acc.ger(e2_sum, &delta, &delta, 1.0);
        let sigma = finish_scale(acc, n[c], c)?;
        components.push(Component::skew_normal(xi, sigma, delta));
    }
    Ok(MixtureModel::new_unchecked(
        Family::Msn,
        weights(&n, record.n_fitted),
        components,
    ))
}

/// Dispatches on the record's family.
pub fn m_step(data: &IncompleteDataset, record: &EStepRecord) -> Result<MixtureModel> {
    match record.family {
        Family::Mn => m_step_mn(data, record),
        Family::Msn => m_step_msn(data, record),
    }
}
