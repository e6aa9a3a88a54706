//! Missing-data mechanisms applied cell by cell.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Event;
use crate::em::{IncompleteDataset, RowMeta};
use crate::error::{Error, Result};
use crate::seed::rng_for;

const MASK_TAG: u64 = 0x6d61_736b;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Mechanism {
    /// Every cell dropped independently with probability `eta`.
    Mcar { eta: f64 },
    /// Cell j dropped with probability `sigmoid(a * mean_{k != j} e_k + b)`.
    Mar { a: f64, b: f64 },
    /// Cell j dropped with probability `1 / (1 + exp((E_j - threshold) / width))`
    /// where `E_j` is the raw deposit in MeV.
    Mnar { threshold: f64, width: f64 },
}

impl Mechanism {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Mechanism::Mcar { eta } if !(0.0..=1.0).contains(&eta) => {
                Err(Error::Domain(format!("eta = {eta} outside [0, 1]")))
            }
            Mechanism::Mnar { width, .. } if !(width > 0.0) => {
                Err(Error::Domain(format!("sigmoid width {width} must be positive")))
            }
            Mechanism::Mar { a, b } if !(a.is_finite() && b.is_finite()) => {
                Err(Error::Domain("MAR coefficients must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Mcar { .. } => "mcar",
            Mechanism::Mar { .. } => "mar",
            Mechanism::Mnar { .. } => "mnar",
        }
    }

    /// Drop probability of layer `j` of `ev`.
    pub fn drop_probability(&self, ev: &Event, j: usize) -> f64 {
        match *self {
            Mechanism::Mcar { eta } => eta,
            Mechanism::Mar { a, b } => {
                let d = ev.e.len();
                let others = if d > 1 {
                    (ev.e.iter().sum::<f64>() - ev.e[j]) / (d - 1) as f64
                } else {
                    0.0
                };
                sigmoid(a * others + b)
            }
            Mechanism::Mnar { threshold, width } => {
                sigmoid(-(ev.raw_losses[j] - threshold) / width)
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingnessSpec {
    pub mechanism: Mechanism,
    #[serde(default)]
    pub seed: u64,
}

impl MissingnessSpec {
    pub fn mcar(eta: f64, seed: u64) -> Self {
        Self {
            mechanism: Mechanism::Mcar { eta },
            seed,
        }
    }
}

/// Complete dataset of the normalized losses, with species and momentum as
/// row metadata.
pub fn events_to_dataset(events: &[Event]) -> Result<IncompleteDataset> {
    let p = events.first().map_or(0, |e| e.e.len());
    let values: Vec<f64> = events.iter().flat_map(|e| e.e.iter().copied()).collect();
    let meta = events
        .iter()
        .map(|e| RowMeta {
            species: Some(e.species),
            momentum: Some(e.momentum),
        })
        .collect();
    IncompleteDataset::new(p.max(1), values, vec![true; events.len() * p])?.with_meta(meta)
}

/// Masks `events` according to `spec`. Row `i` draws from its own stream, so
/// its mask does not depend on the other rows.
pub fn apply_missingness(events: &[Event], spec: &MissingnessSpec) -> Result<IncompleteDataset> {
    spec.mechanism.validate()?;
    let full = events_to_dataset(events)?;
    let mut mask = Vec::with_capacity(events.len() * full.n_cols());
    for (i, ev) in events.iter().enumerate() {
        let mut rng = rng_for(spec.seed, &[MASK_TAG, i as u64]);
        for j in 0..ev.e.len() {
            let u: f64 = rng.random();
            mask.push(u >= spec.mechanism.drop_probability(ev, j));
        }
    }
    full.with_mask(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_events, SimConfig};

    fn events(n: usize) -> Vec<Event> {
        generate_events(&SimConfig { n_events: n, seed: 4, ..SimConfig::default() }).unwrap()
    }

    #[test]
    fn eta_zero_keeps_everything() {
        let d = apply_missingness(&events(100), &MissingnessSpec::mcar(0.0, 1)).unwrap();
        assert_eq!(d.n_missing_cells(), 0);
    }

    #[test]
    fn mcar_complete_row_fraction() {
        let n = 10_000;
        let d = apply_missingness(&events(n), &MissingnessSpec::mcar(0.3, 2)).unwrap();
        let complete = (0..n).filter(|&i| d.is_complete_row(i)).count() as f64 / n as f64;
        let q = 0.7f64.powi(6);
        assert!((complete - q).abs() < 4.0 * (q * (1.0 - q) / n as f64).sqrt(), "{complete}");
    }

    #[test]
    fn spec_json_is_strict() {
        let s: MissingnessSpec =
            serde_json::from_str(r#"{"mechanism":{"kind":"mnar","threshold":0.2,"width":0.01},"seed":3}"#)
                .unwrap();
        assert_eq!(s.mechanism, Mechanism::Mnar { threshold: 0.2, width: 0.01 });
        assert!(serde_json::from_str::<MissingnessSpec>(r#"{"mechanism":{"kind":"mcar","eta":0.1,"x":1}}"#).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Mechanism::Mcar { eta: 1.5 }.validate().is_err());
        assert!(Mechanism::Mnar { threshold: 0.1, width: 0.0 }.validate().is_err());
    }
}
