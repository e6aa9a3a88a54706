//! Feed-forward PID classifier: a 6:6:6:1 tanh network regressing the PID
//! code (1 pion, 2 kaon, 3 proton) under squared error, trained with BFGS,
//! followed by two optimized cuts on its output.

pub mod bfgs;
pub mod cuts;
pub mod mlp;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::em::CompletedDataset;
use crate::error::{Error, Result};
use crate::provenance::Provenance;
use crate::seed::rng_for;
use crate::species::Species;

pub use bfgs::{minimize, BfgsOptions, BfgsOutcome};
pub use cuts::{cut_objective, evaluate_cuts, optimize_cuts, CutSearch, CutSet};
pub use mlp::{forward, mse, mse_and_grad, Topology};

pub const NET_FORMAT_VERSION: u32 = 1;
const INIT_TAG: u64 = 0x6e65_74;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub topology: Topology,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            topology: Topology::default(),
            max_iter: 1000,
            grad_tol: 1e-9,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    pub iteration: usize,
    pub loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedNet {
    pub format_version: u32,
    pub topology: Topology,
    pub hidden_activation: String,
    pub output_activation: String,
    /// Flat parameters; see [`mlp`] for the layout.
    pub params: Vec<f64>,
    pub cuts: CutSet,
    #[serde(default)]
    pub cut_objective: Option<f64>,
    #[serde(default)]
    pub degenerate_cuts: bool,
    pub seed: u64,
    /// Iteration whose parameters were kept (lowest validation loss).
    pub best_iteration: usize,
    pub trace: Vec<TraceEntry>,
    #[serde(default)]
    pub provenance: Option<Provenance>,
}

impl TrainedNet {
    pub fn output(&self, x: &[f64]) -> f64 {
        forward(&self.topology, &self.params, x)
    }

    pub fn outputs(&self, data: &CompletedDataset) -> Vec<f64> {
        data.rows().map(|x| self.output(x)).collect()
    }

    pub fn classify(&self, x: &[f64]) -> Species {
        self.cuts.classify(self.output(x))
    }

    /// Optimizes the cuts on a labelled validation set and stores them.
    pub fn fit_cuts(&mut self, data: &CompletedDataset, labels: &[Species]) -> Result<CutSearch> {
        let search = optimize_cuts(&self.outputs(data), labels)?;
        self.cuts = search.cuts;
        self.cut_objective = Some(search.objective);
        self.degenerate_cuts = search.degenerate;
        Ok(search)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(s)?;
        if net.format_version != NET_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "network format version {} (expected {NET_FORMAT_VERSION})",
                net.format_version
            )));
        }
        net.topology.validate()?;
        if net.params.len() != net.topology.n_params() || net.params.iter().any(|w| !w.is_finite()) {
            return Err(Error::Schema("network parameters do not match the topology".into()));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Regression target of a species.
pub fn pid_target(s: Species) -> f64 {
    s.code() as f64
}

fn check_inputs(data: &CompletedDataset, labels: &[Species], topo: &Topology, what: &str) -> Result<()> {
    if data.n_rows() != labels.len() {
        return Err(Error::Dimension(format!("{what}: {} rows, {} labels", data.n_rows(), labels.len())));
    }
    if data.n_rows() == 0 {
        return Err(Error::InsufficientData(format!("{what} set is empty")));
    }
    if data.n_cols() != topo.n_inputs() {
        return Err(Error::Dimension(format!(
            "{what}: {} columns for a network with {} inputs",
            data.n_cols(),
            topo.n_inputs()
        )));
    }
    Ok(())
}

/// Trains by BFGS on the training set, keeping the iterate with the lowest
/// validation loss. Cuts start at (1.5, 2.5); see [`TrainedNet::fit_cuts`].
pub fn train(
    train_x: &CompletedDataset,
    train_y: &[Species],
    val_x: &CompletedDataset,
    val_y: &[Species],
    config: &NetConfig,
) -> Result<TrainedNet> {
    let topo = &config.topology;
    topo.validate()?;
    check_inputs(train_x, train_y, topo, "training")?;
    check_inputs(val_x, val_y, topo, "validation")?;
    let rows: Vec<&[f64]> = train_x.rows().collect();
    let targets: Vec<f64> = train_y.iter().map(|s| pid_target(*s)).collect();
    let val_rows: Vec<&[f64]> = val_x.rows().collect();
    let val_targets: Vec<f64> = val_y.iter().map(|s| pid_target(*s)).collect();

    let x0 = topo.init_params(&mut rng_for(config.seed, &[INIT_TAG]));
    let mut trace = Vec::new();
    let mut best: (f64, usize, Vec<f64>) = (f64::INFINITY, 0, x0.clone());
    let opts = BfgsOptions {
        max_iter: config.max_iter,
        grad_tol: config.grad_tol,
        ..BfgsOptions::default()
    };
    minimize(
        x0,
        |p| mse_and_grad(topo, p, &rows, &targets),
        |it, p, f| {
            let v = mse(topo, p, &val_rows, &val_targets);
            trace.push(TraceEntry {
                iteration: it,
                loss: f,
                validation_loss: v,
            });
            if v < best.0 {
                best = (v, it, p.to_vec());
            }
        },
        &opts,
    )?;
    Ok(TrainedNet {
        format_version: NET_FORMAT_VERSION,
        topology: topo.clone(),
        hidden_activation: "tanh".into(),
        output_activation: "linear".into(),
        params: best.2,
        cuts: CutSet::default(),
        cut_objective: None,
        degenerate_cuts: false,
        seed: config.seed,
        best_iteration: best.1,
        trace,
        provenance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (CompletedDataset, Vec<Species>) {
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let s = Species::ALL[i % 3];
            let centre = s.code() as f64;
            values.push(centre + 0.1 * ((i * 7 % 11) as f64 / 11.0 - 0.5));
            labels.push(s);
        }
        (CompletedDataset::new(1, values).unwrap(), labels)
    }

    #[test]
    fn separable_toy_trains_well() {
        let (x, y) = toy();
        let cfg = NetConfig {
            topology: Topology { layer_sizes: vec![1, 6, 6, 1] },
            max_iter: 200,
            ..NetConfig::default()
        };
        let mut net = train(&x, &y, &x, &y, &cfg).unwrap();
        let rows: Vec<&[f64]> = x.rows().collect();
        let t: Vec<f64> = y.iter().map(|s| pid_target(*s)).collect();
        assert!(mse(&net.topology, &net.params, &rows, &t) < 0.05);
        assert!(net.trace.windows(2).all(|w| w[1].loss <= w[0].loss));
        net.fit_cuts(&x, &y).unwrap();
        assert!(x.rows().zip(&y).all(|(r, s)| net.classify(r) == *s));
        let back = TrainedNet::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_wrong_width() {
        let (x, y) = toy();
        assert!(matches!(train(&x, &y, &x, &y, &NetConfig::default()), Err(Error::Dimension(_))));
    }
}
