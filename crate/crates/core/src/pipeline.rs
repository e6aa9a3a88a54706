//! Glue between the simulator, the network and the sweep: one momentum bin
//! is split once, its network trained on the complete training half, and
//! the other half becomes the test pool.

use crate::em::CompletedDataset;
use crate::error::{Error, Result};
use crate::eval::SweepBin;
use crate::net::{train, NetConfig, TrainedNet};
use crate::sim::{bin_by_momentum, split_bin, BinSplit, Event, SimConfig};
use crate::species::Species;

/// Events of one momentum bin.
#[derive(Debug, Clone)]
pub struct BinData {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub events: Vec<Event>,
}

impl BinData {
    pub fn label(&self) -> String {
        format!("{:.3}-{:.3}", self.lo, self.hi)
    }
}

/// Groups events into the configured momentum bins, keeping empty bins.
pub fn bin_events(cfg: &SimConfig, events: &[Event]) -> Result<Vec<BinData>> {
    let momenta: Vec<f64> = events.iter().map(|e| e.momentum).collect();
    let bins = bin_by_momentum(&momenta, cfg.momentum_range[0], cfg.bin_width, cfg.n_bins())?;
    Ok(bins
        .into_iter()
        .map(|b| BinData {
            index: b.index,
            lo: b.lo,
            hi: b.hi,
            events: b.rows.iter().map(|&i| events[i].clone()).collect(),
        })
        .collect())
}

fn table(events: &[Event], rows: &[usize]) -> Result<(CompletedDataset, Vec<Species>)> {
    let p = events.first().map_or(1, |e| e.e.len());
    let values = rows.iter().flat_map(|&i| events[i].e.iter().copied()).collect();
    let labels = rows.iter().map(|&i| events[i].species).collect();
    Ok((CompletedDataset::new(p, values)?, labels))
}

/// Splits the bin, trains its network on complete data and optimizes the
/// cuts on the validation part.
pub fn train_bin(bin: &BinData, net: &NetConfig, master_seed: u64) -> Result<(TrainedNet, BinSplit)> {
    let split = split_bin(bin.events.len(), master_seed, bin.index);
    let (tx, ty) = table(&bin.events, &split.train)?;
    let (vx, vy) = table(&bin.events, &split.validation)?;
    for s in Species::ALL {
        if !ty.contains(&s) {
            return Err(Error::MissingSpecies(format!("{s} (training half of bin {})", bin.label())));
        }
        if !vy.contains(&s) {
            return Err(Error::MissingSpecies(format!("{s} (validation part of bin {})", bin.label())));
        }
    }
    let mut trained = train(&tx, &ty, &vx, &vy, net)?;
    trained.fit_cuts(&vx, &vy)?;
    Ok((trained, split))
}

/// Test pool and network of one bin, ready for the sweep.
pub fn sweep_bin(bin: &BinData, net: TrainedNet, split: &BinSplit) -> SweepBin {
    SweepBin {
        index: bin.index,
        lo: bin.lo,
        hi: bin.hi,
        pool: split.test_pool.iter().map(|&i| bin.events[i].clone()).collect(),
        net,
    }
}
