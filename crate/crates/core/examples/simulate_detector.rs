//! Simulates a silicon tracker: per-layer energy loss of pions, kaons and
//! protons, binned in momentum, and the cell drop rates of the three
//! missing-data mechanisms.
//!
//!     cargo run --release --example simulate_detector

use skewimpute::pipeline::bin_events;
use skewimpute::sim::{apply_missingness, generate_events, Mechanism, MissingnessSpec, SimConfig};
use skewimpute::species::Species;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    v[v.len() / 2]
}

fn main() -> skewimpute::Result<()> {
    let cfg = SimConfig {
        n_events: 50_000,
        seed: 5,
        ..SimConfig::default()
    };
    let events = generate_events(&cfg)?;
    let bins = bin_events(&cfg, &events)?;

    println!("median normalized loss of layer 1 (0 = kaon mean)");
    println!("{:>12} {:>7} {:>8} {:>8} {:>8}", "bin GeV/c", "events", "pion", "kaon", "proton");
    for bin in bins.iter().step_by(3) {
        let med = |s: Species| median(bin.events.iter().filter(|e| e.species == s).map(|e| e.e[0]).collect());
        println!(
            "{:>12} {:>7} {:>8.3} {:>8.3} {:>8.3}",
            bin.label(),
            bin.events.len(),
            med(Species::Pion),
            med(Species::Kaon),
            med(Species::Proton)
        );
    }

    let bin = &bins[5];
    println!("\ndrop rates in bin {}", bin.label());
    for mechanism in [
        Mechanism::Mcar { eta: 0.2 },
        Mechanism::Mar { a: 2.0, b: -2.0 },
        Mechanism::Mnar { threshold: 0.15, width: 0.03 },
    ] {
        let data = apply_missingness(&bin.events, &MissingnessSpec { mechanism, seed: 9 })?;
        let cells = data.n_rows() * data.n_cols();
        println!(
            "  {:<5} {:.3} of cells missing",
            mechanism.name(),
            data.n_missing_cells() as f64 / cells as f64
        );
    }
    Ok(())
}
