//! Trains the 6:6:6:1 identification network on one momentum bin, tunes
//! the two output cuts and prints the confusion table on held-out events.
//!
//!     cargo run --release --example train_pid_net

use skewimpute::eval::ConfusionTable;
use skewimpute::net::NetConfig;
use skewimpute::pipeline::{bin_events, train_bin};
use skewimpute::sim::{generate_events, SimConfig};
use skewimpute::species::Species;

fn main() -> skewimpute::Result<()> {
    let cfg = SimConfig {
        n_events: 60_000,
        seed: 8,
        ..SimConfig::default()
    };
    let bins = bin_events(&cfg, &generate_events(&cfg)?)?;
    for bin in [&bins[4], &bins[14]] {
        let (net, split) = train_bin(bin, &NetConfig::default(), 1)?;
        println!(
            "bin {}: {} training events, best iteration {}, cuts {:.3} / {:.3}",
            bin.label(),
            split.train.len(),
            net.best_iteration,
            net.cuts.t_low,
            net.cuts.t_high
        );
        let table = ConfusionTable::from_pairs(split.test_pool.iter().map(|&i| {
            let ev = &bin.events[i];
            (ev.species, net.classify(&ev.e))
        }));
        for s in Species::ALL {
            println!(
                "  {:<6} efficiency {:.3}  purity {:.3}",
                s.name(),
                table.efficiency(s).unwrap_or(f64::NAN),
                table.purity(s).unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
