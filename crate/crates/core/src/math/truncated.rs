use super::normal::standard_truncated_moments;
use crate::error::{Error, Result};

/// First and second raw moments of N(mu, sigma^2) truncated to (0, +inf).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncMoments {
    pub e1: f64,
    pub e2: f64,
}

impl TruncMoments {
    pub fn variance(&self) -> f64 {
        self.e2 - self.e1 * self.e1
    }
}

/// `e1 = mu + sigma r`, `e2 = mu^2 + sigma^2 + mu sigma r` with `r` the
/// inverse Mills ratio at `mu / sigma`.
///
/// Evaluated as `e1 = sigma s`, `e2 = sigma^2 (v + s^2)` where `(s, v)` are the
/// standardized mean and variance, which avoids the cancellation the raw form
/// suffers for strongly negative `mu / sigma`.
pub fn truncated_normal_moments(mu: f64, sigma: f64) -> Result<TruncMoments> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("truncated normal needs sigma > 0, got {sigma}")));
    }
    if !mu.is_finite() {
        return Err(Error::Domain(format!("truncated normal needs finite mu, got {mu}")));
    }
    let (s, v) = standard_truncated_moments(mu / sigma);
    Ok(TruncMoments {
        e1: sigma * s,
        e2: sigma * sigma * (v + s * s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // (mu, sigma, e1, e2) from 40-digit quadrature of the truncated density.
    const REF: &[(f64, f64, f64, f64)] = &[
        (0.0, 1.0, 0.797_884_560_802_865_4, 1.0),
        (1.0, 1.0, 1.287_599_970_939_178_4, 2.287_599_970_939_178_4),
        (-5.0, 1.0, 0.186_503_967_125_842_1, 0.067_480_164_370_789_42),
        (-8.0, 1.0, 0.121_368_112_236_112_68, 0.029_055_102_111_098_555),
        (2.0, 0.5, 2.000_066_917_232_234_3, 4.250_133_834_464_469),
        (-2.0, 3.0, 1.795_534_022_026_132_6, 5.408_931_955_947_735),
    ];

    #[test]
    fn matches_quadrature_reference() {
        for &(mu, sigma, e1, e2) in REF {
            let m = truncated_normal_moments(mu, sigma).unwrap();
            assert!((m.e1 - e1).abs() < 1e-13, "e1 at ({mu},{sigma}): {} vs {e1}", m.e1);
            assert!((m.e2 - e2).abs() < 1e-13, "e2 at ({mu},{sigma}): {} vs {e2}", m.e2);
        }
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(truncated_normal_moments(0.0, 0.0).is_err());
        assert!(truncated_normal_moments(0.0, -1.0).is_err());
        assert!(truncated_normal_moments(0.0, f64::NAN).is_err());
    }

    #[test]
    fn variance_in_range_on_grid() {
        for i in 0..=160 {
            let t = -8.0 + 0.1 * i as f64;
            for sigma in [0.3, 1.0, 2.5] {
                let m = truncated_normal_moments(t * sigma, sigma).unwrap();
                let v = m.variance();
                assert!(m.e1 > 0.0);
                assert!(v > 0.0 && v <= sigma * sigma * (1.0 + 1e-12), "t={t}: var {v}");
            }
        }
    }

    #[test]
    fn deep_truncation_stays_positive() {
        for t in [-50.0, -1e3, -1e6] {
            let m = truncated_normal_moments(t, 1.0).unwrap();
            assert!(m.e1 > 0.0 && m.variance() > 0.0, "t={t}: {m:?}");
            assert!((m.e1 * -t - 1.0).abs() < 1e-3);
        }
    }
}
