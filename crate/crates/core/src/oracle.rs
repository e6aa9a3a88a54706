//! Reference computations that share no code with the fitted-model path:
//! adaptive Gauss-Kronrod quadrature, a rejection sampler for skew-normal
//! conditionals, and central finite differences.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, tol * 0.5, depth - 1) + adapt(f, m, b, tol * 0.5, depth - 1)
}

/// Integral of `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 60)
}

/// First two moments of N(mu, sigma^2) restricted to (0, inf), by quadrature
/// of the unnormalized density. The integrand is rescaled so its value at
/// the origin is one, which keeps deep lower truncation representable.
pub fn truncated_moments_by_quadrature(mu: f64, sigma: f64) -> (f64, f64) {
    let s2 = 2.0 * sigma * sigma;
    let shape = move |u: f64| (-(u * u - 2.0 * u * mu) / s2).exp();
    let upper = mu.max(0.0) + 40.0 * sigma;
    // Pieces of width ~sigma keep the adaptive rule well conditioned.
    let pieces = (upper / sigma).ceil() as usize;
    let w = upper / pieces as f64;
    let mut m = [0.0f64; 3];
    for (k, slot) in m.iter_mut().enumerate() {
        let peak = shape(mu.max(0.0)) * (upper.powi(k as i32)).max(1.0);
        let tol = 1e-15 * peak * sigma;
        *slot = (0..pieces)
            .map(|i| integrate(|u| u.powi(k as i32) * shape(u), i as f64 * w, (i + 1) as f64 * w, tol))
            .sum();
    }
    (m[1] / m[0], m[2] / m[0])
}

/// Monte Carlo estimate of `E(x_j | x_o)` for a restricted skew-normal with
/// one missing coordinate `j`, with its standard error.
///
/// Draws `u ~ |N(0,1)|` and accepts it with probability
/// `exp(-q/2)`, `q` the Mahalanobis distance of `x_o - xi_o - delta_o u`
/// under `Sigma_oo`; that leaves `u | x_o` exactly. `x_j` is then drawn from
/// its Gaussian conditional given `(u, x_o)`.
pub struct ConditionalSampler {
    j: usize,
    obs: Vec<usize>,
    resid_base: DVector<f64>,
    delta_o: DVector<f64>,
    sigma_oo_inv: DMatrix<f64>,
    reg: DVector<f64>,
    xi_j: f64,
    delta_j: f64,
    cond_sd: f64,
}

impl ConditionalSampler {
    pub fn new(xi: &[f64], sigma: &DMatrix<f64>, delta: &[f64], x: &[f64], j: usize) -> Self {
        let p = xi.len();
        let obs: Vec<usize> = (0..p).filter(|&i| i != j).collect();
        let so = DMatrix::from_fn(obs.len(), obs.len(), |a, b| sigma[(obs[a], obs[b])]);
        let sigma_oo_inv = so.try_inverse().expect("observed block invertible");
        let s_jo = DVector::from_fn(obs.len(), |a, _| sigma[(j, obs[a])]);
        let reg = &sigma_oo_inv * &s_jo;
        let cond_var = sigma[(j, j)] - s_jo.dot(&reg);
        Self {
            resid_base: DVector::from_fn(obs.len(), |a, _| x[obs[a]] - xi[obs[a]]),
            delta_o: DVector::from_fn(obs.len(), |a, _| delta[obs[a]]),
            j,
            obs,
            sigma_oo_inv,
            reg,
            xi_j: xi[j],
            delta_j: delta[j],
            cond_sd: cond_var.max(0.0).sqrt(),
        }
    }

    pub fn missing_index(&self) -> usize {
        self.j
    }

    pub fn n_observed(&self) -> usize {
        self.obs.len()
    }

    /// One draw of `x_j | x_o`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u = rng.sample::<f64, _>(StandardNormal).abs();
            let r = &self.resid_base - &self.delta_o * u;
            let q = r.dot(&(&self.sigma_oo_inv * &r));
            if rng.random::<f64>() < (-0.5 * q).exp() {
                let mean = self.xi_j + self.delta_j * u + self.reg.dot(&r);
                return mean + self.cond_sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }

    /// (mean, standard error) over `n` accepted draws.
    pub fn estimate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (f64, f64) {
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let v = self.draw(rng);
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum2 / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut work = x.to_vec();
    (0..x.len())
        .map(|i| {
            work[i] = x[i] + h;
            let up = f(&work);
            work[i] = x[i] - h;
            let down = f(&work);
            work[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_of_polynomials_and_gaussian() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-14) - 9.0).abs() < 1e-12);
        let g = integrate(|x| (-x * x / 2.0).exp(), -12.0, 12.0, 1e-14);
        assert!((g - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn half_normal_moments() {
        let (e1, e2) = truncated_moments_by_quadrature(0.0, 1.0);
        assert!((e1 - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((e2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_of_quadratic() {
        let g = central_difference(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, 5.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }
}
