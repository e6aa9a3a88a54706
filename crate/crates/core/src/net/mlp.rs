//! Fully connected network with tanh hidden layers and a single linear
//! output, stored as one flat parameter vector.
//!
//! Layout per layer: the `out x in` weight matrix row by row, then the `out`
//! biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub layer_sizes: Vec<usize>,
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            layer_sizes: vec![6, 6, 6, 1],
        }
    }
}

impl Topology {
    pub fn validate(&self) -> Result<()> {
        let s = &self.layer_sizes;
        if s.len() < 2 || s.iter().any(|&n| n == 0) || *s.last().unwrap() != 1 {
            return Err(Error::Domain(format!(
                "topology {s:?} must have at least two layers, no empty layer and one output"
            )));
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Uniform draws in +-1/sqrt(fan_in) for every weight and bias.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for w in self.layer_sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[1] * (w[0] + 1) {
                out.push(rng.random_range(-bound..=bound));
            }
        }
        out
    }
}

/// Network output for one input row.
pub fn forward(topo: &Topology, params: &[f64], x: &[f64]) -> f64 {
    let mut act = x.to_vec();
    let mut off = 0;
    let n_layers = topo.layer_sizes.len() - 1;
    for (l, w) in topo.layer_sizes.windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let bias = off + n_out * n_in;
        let next: Vec<f64> = (0..n_out)
            .map(|o| {
                let row = &params[off + o * n_in..off + (o + 1) * n_in];
                let z = params[bias + o] + row.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>();
                if l + 1 < n_layers {
                    z.tanh()
                } else {
                    z
                }
            })
            .collect();
        off = bias + n_out;
        act = next;
    }
    act[0]
}

/// Mean squared error over `rows` against `targets`.
pub fn mse(topo: &Topology, params: &[f64], rows: &[&[f64]], targets: &[f64]) -> f64 {
    let sum: f64 = rows
        .iter()
        .zip(targets)
        .map(|(x, t)| (forward(topo, params, x) - t).powi(2))
        .sum();
    sum / rows.len() as f64
}

/// Mean squared error and its gradient with respect to every parameter.
pub fn mse_and_grad(topo: &Topology, params: &[f64], rows: &[&[f64]], targets: &[f64]) -> (f64, Vec<f64>) {
    let sizes = &topo.layer_sizes;
    let n_layers = sizes.len() - 1;
    let mut offsets = Vec::with_capacity(n_layers);
    let mut off = 0;
    for w in sizes.windows(2) {
        offsets.push(off);
        off += w[1] * (w[0] + 1);
    }
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let scale = 1.0 / rows.len() as f64;
    let mut acts: Vec<Vec<f64>> = vec![Vec::new(); n_layers + 1];
    for (x, &t) in rows.iter().zip(targets) {
        acts[0].clear();
        acts[0].extend_from_slice(x);
        for l in 0..n_layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let (w0, b0) = (offsets[l], offsets[l] + n_out * n_in);
            let mut next = Vec::with_capacity(n_out);
            for o in 0..n_out {
                let row = &params[w0 + o * n_in..w0 + (o + 1) * n_in];
                let z = params[b0 + o] + row.iter().zip(&acts[l]).map(|(a, b)| a * b).sum::<f64>();
                next.push(if l + 1 < n_layers { z.tanh() } else { z });
            }
            acts[l + 1] = next;
        }
        let r = acts[n_layers][0] - t;
        loss += r * r;
        // delta holds dLoss/dz for the current layer.
        let mut delta = vec![2.0 * r * scale];
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let (w0, b0) = (offsets[l], offsets[l] + n_out * n_in);
            for o in 0..n_out {
                grad[b0 + o] += delta[o];
                for i in 0..n_in {
                    grad[w0 + o * n_in + i] += delta[o] * acts[l][i];
                }
            }
            if l > 0 {
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out).map(|o| params[w0 + o * n_in + i] * delta[o]).sum();
                        let a = acts[l][i];
                        back * (1.0 - a * a)
                    })
                    .collect();
            }
        }
    }
    (loss * scale, grad)
}
