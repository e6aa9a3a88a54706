//! Efficiency, purity and imputation-error surfaces across momentum bins,
//! strategies and missing fractions.

pub mod confusion;
pub mod results;
pub mod sweep;

pub use confusion::{avg_quadratic_diff, quadratic_diff, ConfusionTable, ErrorAggregation};
pub use results::{read_results_csv, result_rows, write_failures_csv, write_results_csv, ResultRow};
pub use sweep::{run_sweep, CellFailure, SpeciesStats, Stat, SweepBin, SweepCell, SweepPlan, SweepResult};
