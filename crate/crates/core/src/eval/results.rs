//! Long-format results CSV and the failure report.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::sweep::{CellFailure, SweepResult};
use crate::error::{Error, Result};
use crate::sim::io::fmt_sig;

pub const RESULTS_HEADER: [&str; 12] = [
    "bin_lo", "bin_hi", "strategy", "eta", "species", "efficiency", "eff_sd", "purity", "pur_sd",
    "rms_diff", "rms_sd", "n_samples",
];

/// One line of the results CSV. Species rows carry efficiency and purity,
/// the `all` row carries the imputation error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub strategy: String,
    pub eta: f64,
    pub species: String,
    pub efficiency: Option<f64>,
    pub eff_sd: Option<f64>,
    pub purity: Option<f64>,
    pub pur_sd: Option<f64>,
    pub rms_diff: Option<f64>,
    pub rms_sd: Option<f64>,
    pub n_samples: usize,
}

pub fn result_rows(results: &[SweepResult]) -> Vec<ResultRow> {
    let mut out = Vec::with_capacity(results.len() * 4);
    for r in results {
        let base = |species: String| ResultRow {
            bin_lo: r.bin_lo,
            bin_hi: r.bin_hi,
            strategy: r.strategy.name().to_string(),
            eta: r.eta,
            species,
            efficiency: None,
            eff_sd: None,
            purity: None,
            pur_sd: None,
            rms_diff: None,
            rms_sd: None,
            n_samples: r.n_samples,
        };
        for s in &r.species {
            out.push(ResultRow {
                efficiency: s.efficiency.mean,
                eff_sd: s.efficiency.sd,
                purity: s.purity.mean,
                pur_sd: s.purity.sd,
                ..base(s.species.name().to_string())
            });
        }
        out.push(ResultRow {
            rms_diff: r.rms.mean,
            rms_sd: r.rms.sd,
            ..base("all".to_string())
        });
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_comments<W: Write>(w: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    Ok(())
}

pub fn write_results_csv<W: Write>(mut w: W, rows: &[ResultRow], comments: &[String]) -> Result<()> {
    write_comments(&mut w, comments)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULTS_HEADER)?;
    for r in rows {
        out.write_record([
            fmt_sig(r.bin_lo, 6),
            fmt_sig(r.bin_hi, 6),
            r.strategy.clone(),
            r.eta.to_string(),
            r.species.clone(),
            opt(r.efficiency),
            opt(r.eff_sd),
            opt(r.purity),
            opt(r.pur_sd),
            opt(r.rms_diff),
            opt(r.rms_sd),
            r.n_samples.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected results header {:?}", headers)));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad {} {:?}", RESULTS_HEADER[i], &rec[i])))
        };
        let opt_num = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        rows.push(ResultRow {
            bin_lo: num(0)?,
            bin_hi: num(1)?,
            strategy: rec[2].to_string(),
            eta: num(3)?,
            species: rec[4].to_string(),
            efficiency: opt_num(5)?,
            eff_sd: opt_num(6)?,
            purity: opt_num(7)?,
            pur_sd: opt_num(8)?,
            rms_diff: opt_num(9)?,
            rms_sd: opt_num(10)?,
            n_samples: rec[11]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad n_samples {:?}", &rec[11])))?,
        });
    }
    Ok(rows)
}

pub fn write_failures_csv<W: Write>(mut w: W, failures: &[CellFailure], comments: &[String]) -> Result<()> {
    write_comments(&mut w, comments)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin_lo", "bin_hi", "strategy", "eta", "sample", "message"])?;
    for f in failures {
        out.write_record([
            fmt_sig(f.bin_lo, 6),
            fmt_sig(f.bin_hi, 6),
            f.strategy.name().to_string(),
            opt(f.eta),
            f.sample.map(|s| s.to_string()).unwrap_or_default(),
            f.message.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::sweep::{SpeciesStats, Stat};
    use crate::imputers::ImputerKind;
    use crate::species::Species;

    fn result() -> SweepResult {
        let st = |m: f64| Stat { mean: Some(m), sd: Some(0.01), n: 2 };
        SweepResult {
            bin_index: 5,
            bin_lo: 0.25,
            bin_hi: 0.3,
            strategy: ImputerKind::Mean,
            eta: 0.1,
            species: Species::ALL
                .iter()
                .map(|&s| SpeciesStats { species: s, efficiency: st(0.9), purity: st(0.8) })
                .collect(),
            rms: st(0.123),
            n_samples: 2,
            tables: vec![],
        }
    }

    #[test]
    fn one_cell_gives_four_rows_and_round_trips() {
        let rows = result_rows(&[result()]);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].species, "all");
        assert_eq!(rows[3].efficiency, None);
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &rows, &["config_sha256=x".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\nbin_lo,bin_hi,strategy,eta,species,efficiency"));
        assert!(text.contains("0.25,0.3,mean,0.1,pion,0.9,0.01,0.8,0.01,,,2\n"));
        assert_eq!(read_results_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(read_results_csv(&b"a,b\n"[..]).is_err());
    }
}
