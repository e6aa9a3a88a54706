//! Bethe-Bloch mean stopping power in silicon, without density-effect or
//! shell corrections.

use crate::error::{Error, Result};
use crate::species::Species;

/// 4 pi N_A r_e^2 m_e c^2, MeV cm^2 / mol.
pub const K_BETHE: f64 = 0.307_075;
/// Electron mass, MeV.
pub const ELECTRON_MASS: f64 = 0.510_998_95;
pub const SILICON_Z_OVER_A: f64 = 0.498_48;
/// Mean excitation energy of silicon, MeV.
pub const SILICON_I: f64 = 173e-6;
/// g / cm^3
pub const SILICON_DENSITY: f64 = 2.329;
/// Momenta at or below this (GeV/c) are outside the surrogate's range.
pub const MIN_MOMENTUM: f64 = 0.05;

/// (beta, gamma) for momentum `p` (GeV/c) and mass `m` (GeV).
pub fn beta_gamma(p: f64, m: f64) -> (f64, f64) {
    let e = (p * p + m * m).sqrt();
    (p / e, e / m)
}

/// Mean energy loss per unit length, MeV / cm, as a function of beta*gamma
/// for a singly charged particle of mass `m` (GeV).
pub fn dedx_of_betagamma(bg: f64, m: f64) -> f64 {
    let bg2 = bg * bg;
    let gamma = (1.0 + bg2).sqrt();
    let beta2 = bg2 / (1.0 + bg2);
    let ratio = ELECTRON_MASS / (m * 1e3);
    let wmax = 2.0 * ELECTRON_MASS * bg2 / (1.0 + 2.0 * gamma * ratio + ratio * ratio);
    let log_term = 0.5 * (2.0 * ELECTRON_MASS * bg2 * wmax / (SILICON_I * SILICON_I)).ln();
    K_BETHE * SILICON_Z_OVER_A * SILICON_DENSITY / beta2 * (log_term - beta2)
}

/// Mean dE/dx (MeV / cm) of `species` at momentum `p` (GeV/c) in silicon.
pub fn mean_dedx(species: Species, p: f64) -> Result<f64> {
    if !(p > MIN_MOMENTUM) || !p.is_finite() {
        return Err(Error::MomentumOutOfRange(p));
    }
    let m = species.mass();
    Ok(dedx_of_betagamma(p / m, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heavier_species_lose_more_at_fixed_momentum() {
        let p = 0.3;
        let pi = mean_dedx(Species::Pion, p).unwrap();
        let k = mean_dedx(Species::Kaon, p).unwrap();
        let pr = mean_dedx(Species::Proton, p).unwrap();
        assert!(pr > k && k > pi);
    }

    #[test]
    fn minimum_ionizing_value_is_plausible() {
        // Silicon minimum is about 1.66 MeV cm^2/g; without the density
        // effect this formula sits slightly below 1.7 at beta*gamma ~ 3.5.
        let min = (10..100)
            .map(|i| dedx_of_betagamma(i as f64 * 0.1, 0.13957) / SILICON_DENSITY)
            .fold(f64::INFINITY, f64::min);
        assert!((1.55..1.75).contains(&min), "{min}");
    }

    #[test]
    fn decreasing_below_minimum() {
        for s in Species::ALL {
            let m = s.mass();
            let mut prev = f64::INFINITY;
            for i in 1..300 {
                let bg = 0.05 + i as f64 * 0.01;
                let v = dedx_of_betagamma(bg, m);
                assert!(v < prev, "{s} at {bg}");
                prev = v;
            }
        }
    }

    #[test]
    fn rejects_low_momentum() {
        assert!(mean_dedx(Species::Pion, 0.05).is_err());
        assert!(mean_dedx(Species::Pion, f64::NAN).is_err());
        assert!(mean_dedx(Species::Pion, 0.0501).is_ok());
    }
}
