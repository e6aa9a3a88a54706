//! Parametric six-layer silicon telescope: per-layer energy losses for
//! pions, kaons and protons, the kaon-normalized log-loss transform, and
//! missing-data injection.

pub mod bethe;
pub mod bins;
pub mod io;
pub mod missing;
pub mod moyal;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::species::Species;

pub use bethe::mean_dedx;
pub use bins::{bin_by_momentum, make_test_samples, split_bin, BinSplit, MomentumBin, TestSample};
pub use missing::{apply_missingness, Mechanism, MissingnessSpec};
pub use moyal::MoyalLoss;

const EVENT_TAG: u64 = 0x6576_656e_74;

/// Fraction of d-variable rows with at least one missing cell when each cell
/// is missing independently with probability `eta`.
pub fn overall_missing_fraction(eta: f64, d: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) || d == 0 {
        return Err(Error::Domain(format!("need 0 <= eta <= 1 and d >= 1, got ({eta}, {d})")));
    }
    Ok(-(d as f64 * (-eta).ln_1p()).exp_m1())
}

/// Per-cell probability giving an overall row-level missing fraction `f`.
pub fn eta_for_fraction(f: f64, d: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) || d == 0 {
        return Err(Error::Domain(format!("need 0 <= f <= 1 and d >= 1, got ({f}, {d})")));
    }
    Ok(-((-f).ln_1p() / d as f64).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Abundances {
    pub pion: f64,
    pub kaon: f64,
    pub proton: f64,
}

impl Default for Abundances {
    fn default() -> Self {
        Self {
            pion: 0.80,
            kaon: 0.15,
            proton: 0.05,
        }
    }
}

impl Abundances {
    pub fn get(&self, s: Species) -> f64 {
        match s {
            Species::Pion => self.pion,
            Species::Kaon => self.kaon,
            Species::Proton => self.proton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n_layers: usize,
    pub layer_thickness_um: f64,
    pub abundances: Abundances,
    /// GeV/c
    pub momentum_range: [f64; 2],
    /// GeV/c
    pub bin_width: f64,
    pub n_events: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_layers: 6,
            layer_thickness_um: 500.0,
            abundances: Abundances::default(),
            momentum_range: [0.0, 1.0],
            bin_width: 0.05,
            n_events: 1_000_000,
            seed: 1,
        }
    }
}

impl SimConfig {
    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| Error::Config {
            path: path.to_string(),
            message,
        };
        if self.n_layers == 0 {
            return Err(bad("sim.n_layers", "must be at least 1".into()));
        }
        if !(self.layer_thickness_um > 0.0 && self.layer_thickness_um.is_finite()) {
            return Err(bad("sim.layer_thickness_um", "must be positive".into()));
        }
        if self.n_events == 0 {
            return Err(bad("sim.n_events", "must be positive".into()));
        }
        let a = &self.abundances;
        if [a.pion, a.kaon, a.proton].iter().any(|v| !(*v >= 0.0)) {
            return Err(bad("sim.abundances", "must be non-negative".into()));
        }
        let total = a.pion + a.kaon + a.proton;
        if (total - 1.0).abs() > 1e-9 {
            return Err(bad("sim.abundances", format!("sum to {total}, not 1")));
        }
        let [lo, hi] = self.momentum_range;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(bad("sim.momentum_range", format!("invalid interval [{lo}, {hi}]")));
        }
        if hi <= bethe::MIN_MOMENTUM {
            return Err(bad(
                "sim.momentum_range",
                format!("must extend above {} GeV/c", bethe::MIN_MOMENTUM),
            ));
        }
        if !(self.bin_width > 0.0) {
            return Err(bad("sim.bin_width", "must be positive".into()));
        }
        let n = (hi - lo) / self.bin_width;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(bad("sim.bin_width", format!("does not divide [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        ((self.momentum_range[1] - self.momentum_range[0]) / self.bin_width).round() as usize
    }

    pub fn thickness_cm(&self) -> f64 {
        self.layer_thickness_um * 1e-4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub species: Species,
    /// GeV/c
    pub momentum: f64,
    /// Energy deposited per layer, MeV.
    pub raw_losses: Vec<f64>,
    /// ln(dE/dx_j) - ln(<dE/dx>_kaon(p)) per layer.
    pub e: Vec<f64>,
}

/// Normalized log-loss of a deposit `loss` (MeV) in a layer of
/// `thickness_cm` at momentum `p`.
pub fn normalized_loss(loss: f64, thickness_cm: f64, p: f64) -> Result<f64> {
    Ok((loss / thickness_cm).ln() - mean_dedx(Species::Kaon, p)?.ln())
}

fn sample_species<R: Rng + ?Sized>(a: &Abundances, rng: &mut R) -> Species {
    let u: f64 = rng.random();
    if u < a.pion {
        Species::Pion
    } else if u < a.pion + a.kaon {
        Species::Kaon
    } else {
        Species::Proton
    }
}

/// Draws one event. Momenta at or below the Bethe-Bloch validity limit are
/// redrawn, so the distribution is uniform on the valid part of the range.
pub fn sample_event<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<Event> {
    let species = sample_species(&cfg.abundances, rng);
    let [lo, hi] = cfg.momentum_range;
    let momentum = loop {
        let p = lo + (hi - lo) * rng.random::<f64>();
        if p > bethe::MIN_MOMENTUM {
            break p;
        }
    };
    let t = cfg.thickness_cm();
    let (beta, _) = bethe::beta_gamma(momentum, species.mass());
    let law = MoyalLoss::new(mean_dedx(species, momentum)? * t, moyal::landau_xi(beta, t));
    let raw_losses: Vec<f64> = (0..cfg.n_layers).map(|_| law.sample(rng)).collect();
    let e = raw_losses
        .iter()
        .map(|&l| normalized_loss(l, t, momentum))
        .collect::<Result<_>>()?;
    Ok(Event {
        species,
        momentum,
        raw_losses,
        e,
    })
}

/// Generates `cfg.n_events` events. Event `i` uses its own stream derived
/// from `(cfg.seed, i)`, so the output does not depend on thread count.
pub fn generate_events(cfg: &SimConfig) -> Result<Vec<Event>> {
    cfg.validate()?;
    (0..cfg.n_events)
        .into_par_iter()
        .with_min_len(256)
        .map(|i| sample_event(cfg, &mut rng_for(cfg.seed, &[EVENT_TAG, i as u64])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_fraction_formula() {
        assert!((overall_missing_fraction(0.001, 100).unwrap() - 0.0952).abs() < 1e-4);
        assert_eq!(overall_missing_fraction(0.0, 6).unwrap(), 0.0);
        assert!((overall_missing_fraction(0.37, 1).unwrap() - 0.37).abs() < 1e-15);
        assert!(overall_missing_fraction(1.2, 3).is_err());
        assert!(overall_missing_fraction(0.1, 0).is_err());
    }

    #[test]
    fn eta_inverts_fraction() {
        for f in [0.1, 0.2, 0.3, 0.4] {
            for d in 2..=10 {
                let eta = eta_for_fraction(f, d).unwrap();
                assert!((overall_missing_fraction(eta, d).unwrap() - f).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn default_config_is_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.n_bins(), 20);
        let bad = SimConfig { n_events: 0, ..c.clone() };
        assert!(matches!(bad.validate(), Err(Error::Config { .. })));
        let uneven = SimConfig { bin_width: 0.03, ..c };
        assert!(uneven.validate().is_err());
    }

    #[test]
    fn exactly_mean_kaon_normalizes_to_zero() {
        let t = 0.05;
        for p in [0.1, 0.3, 0.77, 1.0] {
            let mean = mean_dedx(Species::Kaon, p).unwrap() * t;
            assert!(normalized_loss(mean, t, p).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn events_are_reproducible_and_positive() {
        let cfg = SimConfig { n_events: 500, seed: 9, ..SimConfig::default() };
        let a = generate_events(&cfg).unwrap();
        let b = generate_events(&cfg).unwrap();
        assert_eq!(a, b);
        for ev in &a {
            assert!(ev.momentum > 0.05 && ev.momentum < 1.0);
            assert!(ev.raw_losses.iter().all(|l| *l > 0.0 && l.is_finite()));
            assert_eq!(ev.e.len(), 6);
        }
    }
}
