use super::dataset::{CompletedDataset, IncompleteDataset};
use super::estep::{e_step, EStepRecord};
use super::model::MixtureModel;
use crate::error::Result;

/// Fills every missing cell with `sum_k tau_ik xhat_ik,m`. Observed cells are
/// copied unchanged. Rows with nothing observed get the mixture mean.
pub fn impute(data: &IncompleteDataset, model: &MixtureModel) -> Result<CompletedDataset> {
    let record = e_step(data, model)?;
    Ok(impute_from_record(data, &record))
}

pub fn impute_from_record(data: &IncompleteDataset, record: &EStepRecord) -> CompletedDataset {
    let p = data.n_cols();
    let mut values = Vec::with_capacity(data.n_rows() * p);
    for (i, row) in record.rows.iter().enumerate() {
        let x = data.row(i);
        let missing = data.partition(i).missing();
        let start = values.len();
        values.extend_from_slice(x);
        for &j in missing {
            values[start + j] = row
                .tau
                .iter()
                .zip(&row.components)
                .map(|(t, c)| t * c.xhat[j])
                .sum();
        }
    }
    CompletedDataset::new(p, values).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::*;
    use crate::em::model::{Component, Family};
    use crate::math::SymMatrix;

    #[test]
    fn complete_data_is_returned_unchanged() {
        let rows = vec![vec![1.5, -2.0], vec![0.1, 0.2]];
        let data = IncompleteDataset::complete(&rows).unwrap();
        let model = MixtureModel::new(
            Family::Mn,
            vec![1.0],
            vec![Component::normal(DVector::zeros(2), SymMatrix::identity(2))],
        )
        .unwrap();
        let out = impute(&data, &model).unwrap();
        assert_eq!(out.row(0), &rows[0][..]);
        assert_eq!(out.row(1), &rows[1][..]);
    }

    #[test]
    fn correlated_pair_hand_value() {
        let data = IncompleteDataset::from_options(&[vec![Some(1.0), None]]).unwrap();
        let model = MixtureModel::new(
            Family::Mn,
            vec![1.0],
            vec![Component::normal(
                DVector::zeros(2),
                SymMatrix::from_rows(&[vec![1.0, 0.8], vec![0.8, 1.0]]).unwrap(),
            )],
        )
        .unwrap();
        let out = impute(&data, &model).unwrap();
        assert!((out.row(0)[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn all_missing_row_gets_mixture_mean() {
        let data = IncompleteDataset::from_options(&[vec![None], vec![Some(0.0)]]).unwrap();
        let model = MixtureModel::new(
            Family::Msn,
            vec![0.25, 0.75],
            vec![
                Component::skew_normal(DVector::from_vec(vec![0.0]), SymMatrix::identity(1), DVector::from_vec(vec![1.0])),
                Component::skew_normal(DVector::from_vec(vec![4.0]), SymMatrix::identity(1), DVector::from_vec(vec![0.0])),
            ],
        )
        .unwrap();
        let out = impute(&data, &model).unwrap();
        let want = 0.25 * model.component(0).mean()[0] + 0.75 * 4.0;
        assert!((out.row(0)[0] - want).abs() < 1e-14);
    }
}
