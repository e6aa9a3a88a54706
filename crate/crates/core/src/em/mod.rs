//! EM fitting of normal and restricted skew-normal mixtures on incomplete
//! data, and imputation from a fitted mixture.

pub mod dataset;
pub mod estep;
pub mod fit;
pub mod impute;
pub mod init;
pub mod model;
pub mod mstep;

pub use dataset::{CompletedDataset, IncompleteDataset, RowMeta};
pub use estep::{e_step, e_step_mn, e_step_msn, observed_loglik, EStepRecord};
pub use fit::{em_step, fit, FitOptions};
pub use impute::{impute, impute_from_record};
pub use init::{initial_model, kmeans, InitPolicy, SkewInit};
pub use model::{Component, Family, FitDiagnostics, MixtureModel};
pub use mstep::{m_step, m_step_mn, m_step_msn};
