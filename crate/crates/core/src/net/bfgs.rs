//! Dense BFGS with a backtracking (Armijo) line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop once the largest gradient component falls below this.
    pub grad_tol: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            grad_tol: 1e-9,
            c1: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting at the initial point.
    pub trace: Vec<f64>,
}

const CURVATURE_MIN: f64 = 1e-10;

/// Minimizes `objective`, which returns the value and gradient. `observe` is
/// called with (iteration, x, f) at the start point and after every accepted
/// step. A non-finite value or gradient is reported as divergence at that
/// iteration.
pub fn minimize<F, O>(
    x0: Vec<f64>,
    mut objective: F,
    mut observe: O,
    opts: &BfgsOptions,
) -> Result<BfgsOutcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    O: FnMut(usize, &[f64], f64),
{
    let n = x0.len();
    let mut x = DVector::from_vec(x0);
    let (mut f, g) = objective(x.as_slice());
    let mut g = DVector::from_vec(g);
    let finite = |f: f64, g: &DVector<f64>| f.is_finite() && g.iter().all(|v| v.is_finite());
    if !finite(f, &g) {
        return Err(Error::TrainingDiverged { iteration: 0 });
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first_update = true;
    let mut trace = vec![f];
    observe(0, x.as_slice(), f);
    let mut iterations = 0;
    while iterations < opts.max_iter && g.amax() > opts.grad_tol {
        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            // Lost descent (round-off in H): restart from steepest descent.
            h = DMatrix::identity(n, n);
            first_update = true;
            dir = -g.clone();
            slope = g.dot(&dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = &x + &dir * step;
            let (ft, gt) = objective(trial.as_slice());
            let gt = DVector::from_vec(gt);
            if ft.is_nan() {
                return Err(Error::TrainingDiverged { iteration: iterations + 1 });
            }
            if finite(ft, &gt) && ft <= f + opts.c1 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let ys = y.dot(&s);
        if ys > CURVATURE_MIN {
            if first_update {
                h *= ys / y.dot(&y);
                first_update = false;
            }
            let rho = 1.0 / ys;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hy' + hy s') + (rho^2 y'Hy + rho) s s'
            h.ger(-rho, &s, &hy, 1.0);
            h.ger(-rho, &hy, &s, 1.0);
            h.ger(rho * rho * yhy + rho, &s, &s, 1.0);
        }
        x = x_new;
        f = f_new;
        g = g_new;
        iterations += 1;
        trace.push(f);
        observe(iterations, x.as_slice(), f);
    }
    Ok(BfgsOutcome {
        x: x.as_slice().to_vec(),
        f,
        iterations,
        trace,
    })
}
