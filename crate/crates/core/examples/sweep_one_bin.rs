//! A reduced evaluation sweep over one momentum bin: several missing
//! fractions, every imputation strategy, a few test samples per cell.
//!
//!     cargo run --release --example sweep_one_bin

use skewimpute::eval::{run_sweep, ErrorAggregation, SweepPlan};
use skewimpute::imputers::{ImputerKind, ImputerSpec};
use skewimpute::net::NetConfig;
use skewimpute::pipeline::{bin_events, sweep_bin, train_bin};
use skewimpute::sim::{generate_events, Mechanism, SimConfig};
use skewimpute::species::Species;

fn main() -> skewimpute::Result<()> {
    let master_seed = 4;
    let cfg = SimConfig {
        n_events: 60_000,
        seed: 2,
        ..SimConfig::default()
    };
    let bins = bin_events(&cfg, &generate_events(&cfg)?)?;
    let bin = &bins[5];
    let (net, split) = train_bin(bin, &NetConfig::default(), master_seed)?;
    let plan = SweepPlan {
        strategies: [ImputerKind::Mean, ImputerKind::Mi, ImputerKind::MlMn, ImputerKind::MlMsn]
            .into_iter()
            .map(|k| ImputerSpec::new(k, 0))
            .collect(),
        mechanism: Mechanism::Mcar { eta: 0.0 },
        etas: vec![0.05, 0.2, 0.4],
        n_samples: 3,
        sample_size: 500,
        master_seed,
        aggregation: ErrorAggregation::Rms,
    };
    let (results, failures) = run_sweep(&[sweep_bin(bin, net, &split)], &plan)?;

    println!("bin {}", bin.label());
    println!("{:>5} {:<7} {:>8} {:>8} {:>8} {:>8}", "eta", "method", "rms", "eff pi", "eff K", "eff p");
    for r in &results {
        let eff = |s: Species| r.stats(s).efficiency.mean.unwrap_or(f64::NAN);
        println!(
            "{:>5} {:<7} {:>8.4} {:>8.3} {:>8.3} {:>8.3}",
            r.eta,
            r.strategy.name(),
            r.rms.mean.unwrap_or(f64::NAN),
            eff(Species::Pion),
            eff(Species::Kaon),
            eff(Species::Proton)
        );
    }
    for f in &failures {
        println!("failed: {} eta {:?}: {}", f.strategy, f.eta, f.message);
    }
    Ok(())
}
