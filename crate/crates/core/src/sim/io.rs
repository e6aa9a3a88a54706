//! Dataset CSV files and their JSON provenance sidecars.
//!
//! Columns are `species,p,e1..ed,m1..md`; species is the PID code, `e_j` is
//! empty when missing and `m_j` is 1 for observed cells. Lines starting with
//! `#` carry provenance and are skipped on read.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::missing::MissingnessSpec;
use super::{bethe, Event, SimConfig};
use crate::em::{CompletedDataset, IncompleteDataset, RowMeta};
use crate::error::{Error, Result};
use crate::species::Species;

pub const SIDECAR_FORMAT_VERSION: u32 = 1;

/// Formats `x` with `digits` significant digits, dropping trailing zeros.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn header(p: usize) -> Vec<String> {
    let mut h = vec!["species".to_string(), "p".to_string()];
    h.extend((1..=p).map(|j| format!("e{j}")));
    h.extend((1..=p).map(|j| format!("m{j}")));
    h
}

fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    Ok(())
}

fn meta_fields(meta: Option<&RowMeta>) -> [String; 2] {
    let m = meta.copied().unwrap_or_default();
    [
        m.species.map(|s| s.code().to_string()).unwrap_or_default(),
        m.momentum.map(|p| fmt_sig(p, 6)).unwrap_or_default(),
    ]
}

/// Writes `data` with its mask; missing cells are left empty.
pub fn write_dataset_csv<W: Write>(mut w: W, data: &IncompleteDataset, comments: &[String]) -> Result<()> {
    write_comments(&mut w, comments)?;
    let mut out = csv::Writer::from_writer(w);
    let p = data.n_cols();
    out.write_record(header(p))?;
    for i in 0..data.n_rows() {
        let mut rec: Vec<String> = meta_fields(data.meta().map(|m| &m[i])).to_vec();
        rec.extend((0..p).map(|j| data.value(i, j).map(|v| v.to_string()).unwrap_or_default()));
        rec.extend((0..p).map(|j| if data.is_observed(i, j) { "1" } else { "0" }.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a completed table: every `e_j` is filled, `m_j` keeps the original
/// observed flag of the source row.
pub fn write_completed_csv<W: Write>(
    mut w: W,
    completed: &CompletedDataset,
    source: &IncompleteDataset,
    source_rows: &[usize],
    comments: &[String],
) -> Result<()> {
    write_comments(&mut w, comments)?;
    let mut out = csv::Writer::from_writer(w);
    let p = completed.n_cols();
    out.write_record(header(p))?;
    for (r, &i) in source_rows.iter().enumerate() {
        let mut rec: Vec<String> = meta_fields(source.meta().map(|m| &m[i])).to_vec();
        rec.extend(completed.row(r).iter().map(|v| v.to_string()));
        rec.extend((0..p).map(|j| if source.is_observed(i, j) { "1" } else { "0" }.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_f64(s: &str, line: u64) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}")))
}

/// Reads a dataset CSV written by [`write_dataset_csv`] or
/// [`write_completed_csv`]. A cell is treated as observed when `m_j` is 1.
pub fn read_dataset_csv<R: Read>(r: R) -> Result<IncompleteDataset> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 4 || cols.len() % 2 != 0 || cols[0] != "species" || cols[1] != "p" {
        return Err(Error::Parse(format!("unexpected header {:?}", cols)));
    }
    let p = (cols.len() - 2) / 2;
    let want = header(p);
    if cols.iter().zip(&want).any(|(a, b)| a != b) {
        return Err(Error::Parse(format!("unexpected header {:?}", cols)));
    }
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut meta = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |pos| pos.line());
        let species = match rec[0].trim() {
            "" => None,
            s => Some(
                s.parse::<u8>()
                    .ok()
                    .and_then(|c| Species::from_code(c).ok())
                    .ok_or_else(|| Error::Parse(format!("line {line}: bad species {s:?}")))?,
            ),
        };
        let momentum = match rec[1].trim() {
            "" => None,
            s => Some(parse_f64(s, line)?),
        };
        meta.push(RowMeta { species, momentum });
        for j in 0..p {
            let observed = match rec[2 + p + j].trim() {
                "1" => true,
                "0" => false,
                other => return Err(Error::Parse(format!("line {line}: bad flag {other:?}"))),
            };
            let cell = rec[2 + j].trim();
            let v = if cell.is_empty() {
                if observed {
                    return Err(Error::Parse(format!("line {line}: observed cell e{} is empty", j + 1)));
                }
                f64::NAN
            } else {
                parse_f64(cell, line)?
            };
            values.push(v);
            mask.push(observed);
        }
    }
    IncompleteDataset::new(p, values, mask)?.with_meta(meta)
}

/// Rebuilds events from a complete labelled dataset, recovering the raw
/// deposits by inverting the normalization.
pub fn dataset_to_events(data: &IncompleteDataset, thickness_cm: f64) -> Result<Vec<Event>> {
    let meta = data
        .meta()
        .ok_or_else(|| Error::Schema("dataset has no species/momentum columns".into()))?;
    (0..data.n_rows())
        .map(|i| {
            let (species, momentum) = match meta[i] {
                RowMeta {
                    species: Some(s),
                    momentum: Some(p),
                } => (s, p),
                _ => return Err(Error::Schema(format!("row {i} lacks species or momentum"))),
            };
            if !data.is_complete_row(i) {
                return Err(Error::Schema(format!("row {i} has missing cells")));
            }
            let e = data.row(i).to_vec();
            let scale = thickness_cm * bethe::mean_dedx(Species::Kaon, momentum)?;
            let raw_losses = e.iter().map(|v| scale * v.exp()).collect();
            Ok(Event {
                species,
                momentum,
                raw_losses,
                e,
            })
        })
        .collect()
}

/// JSON provenance written next to every dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSidecar {
    pub format_version: u32,
    pub sim: SimConfig,
    #[serde(default)]
    pub missingness: Option<MissingnessSpec>,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub n_rows: usize,
    pub config_sha256: String,
    pub master_seed: u64,
}
