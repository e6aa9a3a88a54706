//! Experiment configuration: strict JSON plus dotted-path overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::{ErrorAggregation, SweepPlan};
use crate::imputers::{ImputerKind, ImputerSpec};
use crate::net::NetConfig;
use crate::provenance::Provenance;
use crate::sim::{bethe, Mechanism, SimConfig};

/// Environment variable naming the output directory when neither the
/// command line nor the config sets one.
pub const OUT_ENV: &str = "SKEWIMPUTE_OUT";
pub const DEFAULT_OUT: &str = "skewimpute-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Per-cell missing probabilities, used when the mechanism is MCAR.
    pub etas: Vec<f64>,
    /// `[lo, hi]` momentum bins in GeV/c; all bins above the momentum floor
    /// when absent.
    pub bins: Option<Vec<[f64; 2]>>,
    pub n_samples: usize,
    pub sample_size: usize,
    pub aggregation: ErrorAggregation,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            etas: vec![0.05, 0.1, 0.2, 0.3, 0.4],
            bins: None,
            n_samples: 100,
            sample_size: 1000,
            aggregation: ErrorAggregation::Rms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub sim: SimConfig,
    /// For MCAR the `eta` here is ignored in favour of `sweep.etas`.
    pub missingness: Mechanism,
    pub strategies: Vec<ImputerSpec>,
    pub net: NetConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            output_dir: None,
            sim: SimConfig::default(),
            missingness: Mechanism::Mcar { eta: 0.0 },
            strategies: [ImputerKind::Mean, ImputerKind::Mi, ImputerKind::MlMn, ImputerKind::MlMsn]
                .into_iter()
                .map(|k| ImputerSpec::new(k, 0))
                .collect(),
            net: NetConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn from_value(v: Value) -> Result<ExperimentConfig> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

/// Parses `value` as JSON, falling back to a bare string.
fn parse_override_value(value: &str) -> Value {
    serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()))
}

/// Sets `path` (dot separated, numeric segments index arrays) inside `root`.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(config_err(path, "empty path segment"));
    }
    let mut node = root;
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth + 1 == segments.len();
        let here = segments[..=depth].join(".");
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                let child = map.entry(seg.to_string()).or_insert(Value::Null);
                if child.is_null() {
                    *child = Value::Object(Default::default());
                }
                child
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| config_err(&here, "expected an array index"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| config_err(&here, format!("index out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(config_err(&here, "cannot descend into a scalar")),
        };
    }
    unreachable!("loop returns on the last segment")
}

impl ExperimentConfig {
    /// Parses a JSON document strictly.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            config_err(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        de.end()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies `key=value` overrides in order. Values are JSON when they
    /// parse as JSON and strings otherwise.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut v = serde_json::to_value(self)?;
        for o in overrides {
            let o = o.as_ref();
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| config_err(o, "override must look like key=value"))?;
            set_path(&mut v, key.trim(), parse_override_value(value))?;
        }
        from_value(v)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Hash of everything except the output directory, so relocating a run
    /// does not change its identity.
    pub fn provenance(&self) -> Result<Provenance> {
        let identity = Self {
            output_dir: None,
            ..self.clone()
        };
        Provenance::of(&identity, self.master_seed)
    }

    /// Resolves the output directory: explicit flag, then config, then the
    /// environment, then a fixed default.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// Checks every field; errors carry the dotted path of the culprit.
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.missingness
            .validate()
            .map_err(|e| config_err("missingness", e.to_string()))?;
        if self.strategies.is_empty() {
            return Err(config_err("strategies", "at least one strategy is required"));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            s.validate()
                .map_err(|e| config_err(format!("strategies.{i}"), e.to_string()))?;
            if self.strategies[..i].iter().any(|o| o.kind == s.kind) {
                return Err(config_err(format!("strategies.{i}.kind"), format!("{} listed twice", s.kind.name())));
            }
        }
        self.net
            .topology
            .validate()
            .map_err(|e| config_err("net.topology", e.to_string()))?;
        if self.net.topology.n_inputs() != self.sim.n_layers {
            return Err(config_err(
                "net.topology.layer_sizes",
                format!(
                    "network takes {} inputs but the detector has {} layers",
                    self.net.topology.n_inputs(),
                    self.sim.n_layers
                ),
            ));
        }
        if self.net.max_iter == 0 {
            return Err(config_err("net.max_iter", "must be positive"));
        }
        let sw = &self.sweep;
        if matches!(self.missingness, Mechanism::Mcar { .. }) {
            if sw.etas.is_empty() {
                return Err(config_err("sweep.etas", "must not be empty"));
            }
            for (i, e) in sw.etas.iter().enumerate() {
                if !(0.0..=1.0).contains(e) {
                    return Err(config_err(format!("sweep.etas.{i}"), format!("{e} outside [0, 1]")));
                }
            }
        }
        if sw.n_samples < 2 {
            return Err(config_err("sweep.n_samples", "must be at least 2"));
        }
        if sw.sample_size == 0 {
            return Err(config_err("sweep.sample_size", "must be positive"));
        }
        self.bin_indices()?;
        Ok(())
    }

    /// `(index, lo, hi)` of every bin of the momentum grid.
    pub fn grid(&self) -> Vec<(usize, f64, f64)> {
        let lo = self.sim.momentum_range[0];
        let w = self.sim.bin_width;
        (0..self.sim.n_bins())
            .map(|i| {
                let round = |x: f64| (x * 1e12).round() / 1e12;
                (i, round(lo + i as f64 * w), round(lo + (i + 1) as f64 * w))
            })
            .collect()
    }

    /// Indices of the bins to train and sweep.
    pub fn bin_indices(&self) -> Result<Vec<usize>> {
        let grid = self.grid();
        match &self.sweep.bins {
            None => Ok(grid
                .iter()
                .filter(|(_, _, hi)| *hi > bethe::MIN_MOMENTUM + 1e-12)
                .map(|(i, _, _)| *i)
                .collect()),
            Some(bins) => {
                if bins.is_empty() {
                    return Err(config_err("sweep.bins", "must not be empty when given"));
                }
                let mut out = Vec::with_capacity(bins.len());
                for (n, [lo, hi]) in bins.iter().enumerate() {
                    let found = grid
                        .iter()
                        .find(|(_, a, b)| (a - lo).abs() < 1e-9 && (b - hi).abs() < 1e-9)
                        .ok_or_else(|| {
                            config_err(format!("sweep.bins.{n}"), format!("[{lo}, {hi}] is not a bin of the momentum grid"))
                        })?;
                    if out.contains(&found.0) {
                        return Err(config_err(format!("sweep.bins.{n}"), "listed twice"));
                    }
                    out.push(found.0);
                }
                Ok(out)
            }
        }
    }

    pub fn sweep_plan(&self) -> SweepPlan {
        SweepPlan {
            strategies: self.strategies.clone(),
            mechanism: self.missingness,
            etas: self.sweep.etas.clone(),
            n_samples: self.sweep.n_samples,
            sample_size: self.sweep.sample_size,
            master_seed: self.master_seed,
            aggregation: self.sweep.aggregation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_validates_and_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.bin_indices().unwrap().len(), 19);
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let err = ExperimentConfig::from_json(r#"{"sim": {"n_evnts": 10}}"#).unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert_eq!(path, "sim.n_evnts");
                assert!(message.contains("n_evnts"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dotted_overrides() {
        let cfg = ExperimentConfig::default()
            .with_overrides(&["sim.n_events=500", "sweep.etas=[0.1]", "strategies.1.m=8", "output_dir=/tmp/x"])
            .unwrap();
        assert_eq!(cfg.sim.n_events, 500);
        assert_eq!(cfg.sweep.etas, vec![0.1]);
        assert_eq!(cfg.strategies[1].m, 8);
        assert_eq!(cfg.output_dir, Some(PathBuf::from("/tmp/x")));
        assert!(ExperimentConfig::default().with_overrides(&["sim.bogus=1"]).is_err());
        assert!(ExperimentConfig::default().with_overrides(&["strategies.9.m=1"]).is_err());
        assert!(ExperimentConfig::default().with_overrides(&["sim.n_events"]).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let cfg = ExperimentConfig::default().with_overrides(&["sim.n_events=0"]).unwrap();
        match cfg.validate().unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "sim.n_events"),
            other => panic!("{other:?}"),
        }
        let cfg = ExperimentConfig::default().with_overrides(&["sweep.bins=[[0.26, 0.31]]"]).unwrap();
        match cfg.validate().unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "sweep.bins.0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { output_dir: Some("elsewhere".into()), ..a.clone() };
        let c = a.with_overrides(&["master_seed=2"]).unwrap();
        assert_eq!(a.provenance().unwrap(), b.provenance().unwrap());
        assert_ne!(a.provenance().unwrap().config_sha256, c.provenance().unwrap().config_sha256);
    }
}
