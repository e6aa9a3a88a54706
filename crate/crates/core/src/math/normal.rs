//! Scalar standard-normal kernels.
//!
//! `Phi` goes through `erfc`, which keeps full relative accuracy in the lower
//! tail down to about -37. Below [`FAR_TAIL`] the inverse Mills ratio and the
//! truncated-normal moments switch to a continued-fraction route so that
//! nothing is formed as a ratio of two underflowing quantities.

use std::f64::consts::FRAC_1_SQRT_2;

/// ln(sqrt(2 pi))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// 1 / sqrt(2 pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// sqrt(2 / pi), the mean of a standard half-normal.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Arguments below this use the continued-fraction branch.
pub const FAR_TAIL: f64 = -6.0;

// 30 terms already reach full precision at x = 6; convergence is faster further out.
const CF_TERMS: usize = 60;

pub fn normal_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

pub fn ln_normal_pdf(t: f64) -> f64 {
    -0.5 * t * t - LN_SQRT_2PI
}

/// Standard normal CDF.
pub fn normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t * FRAC_1_SQRT_2)
}

/// ln Phi(t), accurate in both tails.
pub fn ln_normal_cdf(t: f64) -> f64 {
    if t < FAR_TAIL {
        ln_normal_pdf(t) - inverse_mills(t).ln()
    } else if t > 5.0 {
        (-0.5 * libm::erfc(t * FRAC_1_SQRT_2)).ln_1p()
    } else {
        normal_cdf(t).ln()
    }
}

/// `k / (x + (k+1) / (x + (k+2) / (x + ...)))`, evaluated backwards.
///
/// With `k = 1` this is `r(-x) - x` where `r` is [`inverse_mills`]; the
/// expansion converges quickly for `x >= 6`.
fn mills_tail(x: f64, k: usize) -> f64 {
    let mut v = 0.0;
    for j in (0..CF_TERMS).rev() {
        v = (k + j) as f64 / (x + v);
    }
    v
}

/// phi(t) / Phi(t), the inverse Mills ratio of the lower truncation point.
pub fn inverse_mills(t: f64) -> f64 {
    if t < FAR_TAIL {
        let x = -t;
        x + mills_tail(x, 1)
    } else {
        // erfc does not underflow here (t >= -6), and for large positive t the
        // numerator underflows gracefully to zero.
        let cdf = normal_cdf(t);
        normal_pdf(t) / cdf
    }
}

/// Standardized moments of a N(t, 1) variable truncated to (0, +inf):
/// returns (mean, variance).
pub(crate) fn standard_truncated_moments(t: f64) -> (f64, f64) {
    if t < FAR_TAIL {
        let x = -t;
        let c = mills_tail(x, 1);
        let d = mills_tail(x, 2);
        (c, c * (d - c))
    } else {
        let r = inverse_mills(t);
        let s = t + r;
        (s, 1.0 - r * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from 40-digit quadrature of phi/Phi.
    const RATIO_REF: &[(f64, f64)] = &[
        (0.0, 0.797_884_560_802_865_4),
        (1.0, 0.287_599_970_939_178_36),
        (-1.0, 1.525_135_276_160_981_2),
        (3.0, 0.004_437_839_042_125_664),
        (8.0, 5.052_271_083_536_895e-15),
        (-5.0, 5.186_503_967_125_842),
        (-6.0, 6.158_482_604_544_599),
        (-6.5, 6.647_301_361_190_491),
        (-8.0, 8.121_368_112_236_113),
        (-10.0, 10.098_093_233_962_512),
        (-30.0, 30.033_259_667_433_677),
    ];

    #[test]
    fn inverse_mills_matches_reference() {
        for &(t, want) in RATIO_REF {
            let got = inverse_mills(t);
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "t={t}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn branches_agree_at_the_switch() {
        let x = -FAR_TAIL;
        let cf = x + mills_tail(x, 1);
        let direct = normal_pdf(FAR_TAIL) / normal_cdf(FAR_TAIL);
        assert!(((cf - direct) / direct).abs() < 1e-13);
    }

    #[test]
    fn ln_cdf_is_finite_far_out() {
        for t in [-200.0, -40.0, -6.01, 0.0, 6.0, 40.0] {
            let v = ln_normal_cdf(t);
            assert!(v.is_finite() && v <= 0.0, "t={t} -> {v}");
        }
        assert!((ln_normal_cdf(0.0) - 0.5f64.ln()).abs() < 1e-15);
        // ln Phi(-40) ~ -804.608...
        assert!((ln_normal_cdf(-40.0) + 804.608_442_013_753_8).abs() < 1e-9);
    }

    #[test]
    fn cdf_symmetry() {
        for t in [-3.0, -0.5, 0.0, 1.2, 4.0] {
            assert!((normal_cdf(t) + normal_cdf(-t) - 1.0).abs() < 1e-15);
        }
    }
}
