//! Masks one momentum bin at 20% MCAR and compares every imputation
//! strategy by the RMS error over the masked cells.
//!
//!     cargo run --release --example compare_imputers

use skewimpute::eval::{quadratic_diff, ErrorAggregation};
use skewimpute::imputers::{run_imputer, ImputerKind, ImputerSpec};
use skewimpute::pipeline::bin_events;
use skewimpute::sim::{generate_events, make_test_samples, MissingnessSpec, SimConfig};

fn main() -> skewimpute::Result<()> {
    let cfg = SimConfig {
        n_events: 60_000,
        seed: 3,
        ..SimConfig::default()
    };
    let bins = bin_events(&cfg, &generate_events(&cfg)?)?;
    let bin = &bins[6];
    let sample = make_test_samples(&bin.events, 1, 1000, &MissingnessSpec::mcar(0.2, 17))?.remove(0);
    let data = &sample.data;
    println!(
        "bin {}: {} rows, {} of {} cells missing",
        bin.label(),
        data.n_rows(),
        data.n_missing_cells(),
        data.n_rows() * data.n_cols()
    );

    for kind in ImputerKind::ALL {
        let result = run_imputer(data, &ImputerSpec::new(kind, 42))?;
        if kind == ImputerKind::Listwise {
            println!("{:<9} keeps {} complete rows", kind.name(), result.kept_rows.len());
            continue;
        }
        let rms = quadratic_diff(&sample.truth, &result.completed, &result.imputed, ErrorAggregation::Rms);
        println!("{:<9} rms error {rms:.4}", kind.name());
    }
    Ok(())
}
