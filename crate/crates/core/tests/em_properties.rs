mod common;

use approx::assert_relative_eq;
use nalgebra::DVector;
use proptest::prelude::*;
use skewimpute::em::{e_step, fit, impute, Family, FitOptions, IncompleteDataset, InitPolicy};

use common::{mask_mcar, problem, random_mixture, sample_mixture};

fn family_strategy() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Mn), Just(Family::Msn)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn loglik_never_decreases(seed in 0u64..10_000, family in family_strategy(), eta in 0.0f64..0.35) {
        let (_, data) = problem(seed, family, 200, 3, 2, eta);
        let model = fit(&data, family, 2, &InitPolicy::KMeansPlusPlus { seed }, &FitOptions::fixed_iterations(25)).unwrap();
        let trace = &model.diagnostics().unwrap().trace;
        for w in trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn responsibilities_are_a_distribution(seed in 0u64..10_000, family in family_strategy(), k in 1usize..4) {
        let truth = random_mixture(seed, family, 3, k);
        let (rows, _) = sample_mixture(&truth, 60, seed);
        let data = mask_mcar(&rows, 0.3, seed);
        let record = e_step(&data, &truth).unwrap();
        for (i, row) in record.rows.iter().enumerate() {
            if data.is_all_missing(i) {
                prop_assert!(row.excluded);
                continue;
            }
            let total: f64 = row.tau.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(row.tau.iter().all(|t| (0.0..=1.0).contains(t)));
        }
    }

    #[test]
    fn imputation_keeps_observed_cells(seed in 0u64..10_000, family in family_strategy()) {
        let truth = random_mixture(seed, family, 4, 2);
        let (rows, _) = sample_mixture(&truth, 80, seed);
        let data = mask_mcar(&rows, 0.25, seed);
        let done = impute(&data, &truth).unwrap();
        for i in 0..data.n_rows() {
            for j in 0..data.n_cols() {
                let v = done.row(i)[j];
                prop_assert!(v.is_finite());
                if let Some(x) = data.value(i, j) {
                    prop_assert_eq!(v.to_bits(), x.to_bits());
                }
            }
        }
    }

    #[test]
    fn e_step_is_permutation_equivariant(seed in 0u64..10_000, family in family_strategy()) {
        let truth = random_mixture(seed, family, 3, 3);
        let (rows, _) = sample_mixture(&truth, 50, seed);
        let data = mask_mcar(&rows, 0.2, seed);
        let order = [2, 0, 1];
        let a = e_step(&data, &truth).unwrap();
        let b = e_step(&data, &truth.permuted(&order)).unwrap();
        prop_assert!((a.log_likelihood - b.log_likelihood).abs() <= 1e-9 * a.log_likelihood.abs().max(1.0));
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            for (new, &old) in order.iter().enumerate() {
                prop_assert!((ra.tau[old] - rb.tau[new]).abs() < 1e-12);
                let (xa, xb) = (&ra.components[old].xhat, &rb.components[new].xhat);
                prop_assert!((xa - xb).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_skew_matches_normal_e_step(seed in 0u64..10_000) {
        let mn = random_mixture(seed, Family::Mn, 3, 2);
        let (rows, _) = sample_mixture(&mn, 60, seed);
        let data = mask_mcar(&rows, 0.3, seed);
        let a = e_step(&data, &mn).unwrap();
        let b = e_step(&data, &mn.as_skew_normal()).unwrap();
        prop_assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-8);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            for k in 0..2 {
                prop_assert!((ra.tau[k] - rb.tau[k]).abs() < 1e-10);
                prop_assert!((&ra.components[k].xhat - &rb.components[k].xhat).amax() < 1e-10);
                prop_assert!((&ra.components[k].chat_mm - &rb.components[k].chat_mm).amax() < 1e-10);
            }
        }
    }
}

#[test]
fn one_normal_component_on_complete_data_is_the_sample_moments() {
    let truth = random_mixture(3, Family::Mn, 3, 1);
    let (rows, _) = sample_mixture(&truth, 400, 3);
    let data = IncompleteDataset::complete(&rows).unwrap();
    let model = fit(&data, Family::Mn, 1, &InitPolicy::KMeansPlusPlus { seed: 1 }, &FitOptions::default()).unwrap();
    let n = rows.len() as f64;
    let mean = rows.iter().fold(DVector::zeros(3), |acc, r| acc + DVector::from_column_slice(r)) / n;
    let mut cov = nalgebra::DMatrix::zeros(3, 3);
    for r in &rows {
        let d = DVector::from_column_slice(r) - &mean;
        cov += &d * d.transpose();
    }
    cov /= n;
    let c = &model.components()[0];
    assert_relative_eq!(c.location, mean, epsilon = 1e-9);
    // The fitted scale carries a ridge of 1e-8 * tr / p on the diagonal.
    assert_relative_eq!(c.scale.matrix(), &cov, epsilon = 1e-7);
}

#[test]
fn rows_with_nothing_observed_do_not_move_the_fit() {
    let (_, data) = problem(21, Family::Msn, 150, 3, 2, 0.1);
    let mut rows: Vec<Vec<Option<f64>>> = (0..data.n_rows())
        .map(|i| (0..3).map(|j| data.value(i, j)).collect())
        .collect();
    rows.push(vec![None; 3]);
    rows.push(vec![None; 3]);
    let padded = IncompleteDataset::from_options(&rows).unwrap();
    let init = InitPolicy::Given(random_mixture(0, Family::Msn, 3, 2));
    let a = fit(&data, Family::Msn, 2, &init, &FitOptions::fixed_iterations(10)).unwrap();
    let b = fit(&padded, Family::Msn, 2, &init, &FitOptions::fixed_iterations(10)).unwrap();
    assert_relative_eq!(a.diagnostics().unwrap().log_likelihood, b.diagnostics().unwrap().log_likelihood, max_relative = 1e-12);
    for (ca, cb) in a.components().iter().zip(b.components()) {
        assert_relative_eq!(ca.location, cb.location, epsilon = 1e-10);
        assert_relative_eq!(ca.skew, cb.skew, epsilon = 1e-10);
    }
}

#[test]
fn zero_skew_start_stays_normal() {
    let (_, data) = problem(8, Family::Msn, 300, 3, 2, 0.2);
    let opts = FitOptions {
        skew_init: skewimpute::em::SkewInit::Zero,
        ..FitOptions::fixed_iterations(15)
    };
    let model = fit(&data, Family::Msn, 2, &InitPolicy::KMeansPlusPlus { seed: 2 }, &opts).unwrap();
    for c in model.components() {
        assert!(c.skew.amax() < 1e-10, "skew moved to {}", c.skew);
    }
}

#[test]
fn model_json_round_trip() {
    let (_, data) = problem(5, Family::Msn, 200, 3, 2, 0.1);
    let model = fit(&data, Family::Msn, 2, &InitPolicy::KMeansPlusPlus { seed: 5 }, &FitOptions::fixed_iterations(5)).unwrap();
    let back = skewimpute::em::MixtureModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
}
