//! The `simulate`, `train` and `sweep` commands. Each takes a validated
//! config and an output root; with `dry_run` they only describe what they
//! would do.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::em::IncompleteDataset;
use crate::error::{Error, Result};
use crate::eval::{result_rows, run_sweep, write_failures_csv, write_results_csv, CellFailure, SweepResult};
use crate::net::TrainedNet;
use crate::pipeline::{bin_events, sweep_bin, train_bin, BinData};
use crate::provenance::Provenance;
use crate::sim::io::{dataset_to_events, read_dataset_csv, write_dataset_csv, DatasetSidecar, SIDECAR_FORMAT_VERSION};
use crate::sim::missing::events_to_dataset;
use crate::sim::{generate_events, split_bin};

/// A validated config bound to an output directory.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub provenance: Provenance,
    pub dry_run: bool,
}

impl Run {
    pub fn new(config: ExperimentConfig, out: PathBuf, dry_run: bool) -> Result<Self> {
        config.validate()?;
        let provenance = config.provenance()?;
        Ok(Self {
            config,
            out,
            provenance,
            dry_run,
        })
    }

    pub fn data_path(&self, label: &str) -> PathBuf {
        self.out.join("data").join(format!("bin_{label}.csv"))
    }

    pub fn sidecar_path(&self, label: &str) -> PathBuf {
        self.data_path(label).with_extension("json")
    }

    pub fn model_path(&self, label: &str) -> PathBuf {
        self.out.join("models").join(format!("net_{label}.json"))
    }

    pub fn results_path(&self) -> PathBuf {
        self.out.join("results").join("results.csv")
    }

    pub fn failures_path(&self) -> PathBuf {
        self.out.join("results").join("failures.csv")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }

    fn label(&self, index: usize) -> (String, f64, f64) {
        let (_, lo, hi) = self.config.grid()[index];
        (format!("{lo:.3}-{hi:.3}"), lo, hi)
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    create_parent(path)?;
    Ok(BufWriter::new(File::create(path)?))
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingInput {
            path: path.to_path_buf(),
            hint: hint.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub files: Vec<PathBuf>,
    pub rows: Vec<usize>,
}

/// Generates the events and writes one complete dataset per momentum bin,
/// each with a JSON sidecar.
pub fn cmd_simulate(run: &Run, log: &mut dyn Write) -> Result<SimulateSummary> {
    let cfg = &run.config;
    let labels: Vec<_> = (0..cfg.sim.n_bins()).map(|i| run.label(i)).collect();
    if run.dry_run {
        writeln!(log, "would simulate {} events into {} bins", cfg.sim.n_events, labels.len())?;
        for (label, _, _) in &labels {
            writeln!(log, "  {}", run.data_path(label).display())?;
        }
        return Ok(SimulateSummary {
            files: labels.iter().map(|(l, _, _)| run.data_path(l)).collect(),
            rows: vec![],
        });
    }
    let events = generate_events(&cfg.sim)?;
    let bins = bin_events(&cfg.sim, &events)?;
    let comments = run.provenance.comment_lines();
    let mut summary = SimulateSummary {
        files: vec![],
        rows: vec![],
    };
    for bin in &bins {
        let label = bin.label();
        let path = run.data_path(&label);
        let data = if bin.events.is_empty() {
            IncompleteDataset::new(cfg.sim.n_layers, vec![], vec![])?
        } else {
            events_to_dataset(&bin.events)?
        };
        write_dataset_csv(create(&path)?, &data, &comments)?;
        let sidecar = DatasetSidecar {
            format_version: SIDECAR_FORMAT_VERSION,
            sim: cfg.sim.clone(),
            missingness: None,
            bin_lo: bin.lo,
            bin_hi: bin.hi,
            n_rows: bin.events.len(),
            config_sha256: run.provenance.config_sha256.clone(),
            master_seed: run.provenance.master_seed,
        };
        fs::write(run.sidecar_path(&label), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        writeln!(log, "{} ({} events)", path.display(), bin.events.len())?;
        summary.files.push(path);
        summary.rows.push(bin.events.len());
    }
    Ok(summary)
}

/// Reads one bin written by [`cmd_simulate`], checking that it was produced
/// by the same simulation settings.
pub fn load_bin(run: &Run, index: usize) -> Result<BinData> {
    let (label, lo, hi) = run.label(index);
    let path = run.data_path(&label);
    let sidecar_path = run.sidecar_path(&label);
    require(&path, "run `simulate` first")?;
    require(&sidecar_path, "run `simulate` first")?;
    let sidecar: DatasetSidecar = serde_json::from_str(&fs::read_to_string(&sidecar_path)?)?;
    if sidecar.sim != run.config.sim {
        return Err(Error::Schema(format!(
            "{} was simulated with different settings; rerun `simulate`",
            path.display()
        )));
    }
    let data = read_dataset_csv(File::open(&path)?)?;
    if data.n_rows() != sidecar.n_rows {
        return Err(Error::Parse(format!(
            "{} has {} rows, its sidecar says {}",
            path.display(),
            data.n_rows(),
            sidecar.n_rows
        )));
    }
    let events = if data.n_rows() == 0 {
        vec![]
    } else {
        dataset_to_events(&data, run.config.sim.thickness_cm())?
    };
    Ok(BinData { index, lo, hi, events })
}

/// Trains one network per selected bin and writes it with its cuts.
pub fn cmd_train(run: &Run, log: &mut dyn Write) -> Result<Vec<PathBuf>> {
    let indices = run.config.bin_indices()?;
    if run.dry_run {
        writeln!(log, "would train {} networks", indices.len())?;
        for &i in &indices {
            writeln!(log, "  {}", run.model_path(&run.label(i).0).display())?;
        }
        return Ok(indices.iter().map(|&i| run.model_path(&run.label(i).0)).collect());
    }
    let bins = indices.iter().map(|&i| load_bin(run, i)).collect::<Result<Vec<_>>>()?;
    let nets: Vec<TrainedNet> = bins
        .par_iter()
        .map(|bin| {
            let (mut net, _) = train_bin(bin, &run.config.net, run.config.master_seed)?;
            net.provenance = Some(run.provenance.clone());
            Ok(net)
        })
        .collect::<Result<_>>()?;
    let mut paths = Vec::with_capacity(nets.len());
    for (bin, net) in bins.iter().zip(&nets) {
        let path = run.model_path(&bin.label());
        create_parent(&path)?;
        fs::write(&path, net.to_json()? + "\n")?;
        writeln!(
            log,
            "{} (best iteration {}, cuts {:.3}/{:.3})",
            path.display(),
            net.best_iteration,
            net.cuts.t_low,
            net.cuts.t_high
        )?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub results: Vec<SweepResult>,
    pub failures: Vec<CellFailure>,
    pub results_path: PathBuf,
    pub failures_path: PathBuf,
}

/// Runs the sweep over the selected bins with their trained networks and
/// writes the results and the failure report.
pub fn cmd_sweep(run: &Run, log: &mut dyn Write) -> Result<SweepSummary> {
    let cfg = &run.config;
    let indices = cfg.bin_indices()?;
    let plan = cfg.sweep_plan();
    plan.validate()?;
    if run.dry_run {
        let cells = plan.cells(indices.len());
        writeln!(
            log,
            "would run {} cells x {} samples of {} rows",
            cells.len(),
            plan.n_samples,
            plan.sample_size
        )?;
        for c in &cells {
            let eta = c.eta.map_or_else(|| cfg.missingness.name().to_string(), |e| format!("eta={e}"));
            writeln!(
                log,
                "  bin {} {eta} {}",
                run.label(indices[c.bin]).0,
                plan.strategies[c.strategy].kind.name()
            )?;
        }
        return Ok(SweepSummary {
            results: vec![],
            failures: vec![],
            results_path: run.results_path(),
            failures_path: run.failures_path(),
        });
    }
    let mut bins = Vec::with_capacity(indices.len());
    for &i in &indices {
        let data = load_bin(run, i)?;
        let model_path = run.model_path(&data.label());
        require(&model_path, "run `train` first")?;
        let net = TrainedNet::load(&model_path)?;
        match &net.provenance {
            Some(p) if p.master_seed == cfg.master_seed => {}
            _ => {
                return Err(Error::Schema(format!(
                    "{} was trained with a different master seed; rerun `train`",
                    model_path.display()
                )))
            }
        }
        let split = split_bin(data.events.len(), cfg.master_seed, data.index);
        bins.push(sweep_bin(&data, net, &split));
    }
    let (results, failures) = run_sweep(&bins, &plan)?;
    let comments = run.provenance.comment_lines();
    let results_path = run.results_path();
    let failures_path = run.failures_path();
    write_results_csv(create(&results_path)?, &result_rows(&results), &comments)?;
    write_failures_csv(create(&failures_path)?, &failures, &comments)?;
    writeln!(log, "{} ({} cells)", results_path.display(), results.len())?;
    if !failures.is_empty() {
        writeln!(log, "{} ({} failed cells)", failures_path.display(), failures.len())?;
    }
    Ok(SweepSummary {
        results,
        failures,
        results_path,
        failures_path,
    })
}
