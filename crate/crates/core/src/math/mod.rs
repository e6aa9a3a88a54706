//! Numerical kernels: normal CDF/ratio, truncated-normal moments, normal and
//! restricted skew-normal densities, and observed/missing block partitioning.

pub mod density;
pub mod linalg;
pub mod normal;
pub mod sample;
pub mod truncated;

pub use density::{mn_ln_pdf, mn_pdf, msn_ln_pdf, msn_pdf, NormalDensity, SkewNormalDensity};
pub use linalg::{partition_gaussian, BlockPartition, GaussianBlocks, SpdFactor, SymMatrix};
pub use normal::{inverse_mills as normal_pdf_cdf_ratio, ln_normal_cdf, normal_cdf, normal_pdf};
pub use sample::{NormalSampler, SkewNormalSampler};
pub use truncated::{truncated_normal_moments, TruncMoments};
