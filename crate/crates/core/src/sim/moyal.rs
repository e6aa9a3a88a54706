//! Moyal approximation to thin-layer energy-loss straggling.
//!
//! The standard Moyal variable has density
//! `exp(-(x + exp(-x)) / 2) / sqrt(2 pi)`, mode 0 and mean `gamma_E + ln 2`,
//! and is sampled as `-ln(Z^2)` with `Z` standard normal.

use rand::Rng;
use rand_distr::StandardNormal;

use super::bethe::{K_BETHE, SILICON_DENSITY, SILICON_Z_OVER_A};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Mean of the standard Moyal distribution.
pub const MOYAL_MEAN: f64 = EULER_GAMMA + std::f64::consts::LN_2;

/// Full width at half maximum of the Landau distribution in units of its
/// scale parameter.
pub const LANDAU_FWHM: f64 = 4.018;

/// Solves `x + exp(-x) = 1 + 2 ln 2` on either side of the mode by bisection.
fn half_max_point(lo: f64, hi: f64) -> f64 {
    let target = 1.0 + 2.0 * std::f64::consts::LN_2;
    let g = |x: f64| x + (-x).exp() - target;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (g(mid) > 0.0) == (g(a) > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// FWHM of the standard Moyal density.
pub fn moyal_fwhm() -> f64 {
    half_max_point(0.0, 10.0) - half_max_point(-10.0, 0.0)
}

pub fn sample_standard_moyal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let z2 = z * z;
        if z2 > 0.0 {
            return -z2.ln();
        }
    }
}

/// Landau width parameter `xi` (MeV) for a layer of `thickness_cm` silicon.
pub fn landau_xi(beta: f64, thickness_cm: f64) -> f64 {
    0.5 * K_BETHE * SILICON_Z_OVER_A * SILICON_DENSITY * thickness_cm / (beta * beta)
}

/// Location/scale of a Moyal law whose mean is `mean` and whose FWHM matches
/// the Landau FWHM for width `xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoyalLoss {
    pub loc: f64,
    pub scale: f64,
}

impl MoyalLoss {
    pub fn new(mean: f64, xi: f64) -> Self {
        let scale = xi * LANDAU_FWHM / moyal_fwhm();
        Self {
            loc: mean - MOYAL_MEAN * scale,
            scale,
        }
    }

    pub fn mean(&self) -> f64 {
        self.loc + MOYAL_MEAN * self.scale
    }

    /// Draws a strictly positive loss.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = self.loc + self.scale * sample_standard_moyal(rng);
            if v > 0.0 && v.is_finite() {
                return v;
            }
        }
    }
}
