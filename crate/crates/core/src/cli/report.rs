//! Turns a results CSV into per-figure plot data and a markdown summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{read_results_csv, ResultRow};
use crate::provenance::Provenance;

/// Cell where mean imputation kept more protons than the skew-normal
/// mixture imputation.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtonFlag {
    pub bin: String,
    pub eta: f64,
    pub mean: f64,
    pub ml_msn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub files: Vec<PathBuf>,
    pub flags: Vec<ProtonFlag>,
}

fn bin_label(r: &ResultRow) -> String {
    format!("{:.3}-{:.3}", r.bin_lo, r.bin_hi)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn write_lines(path: &Path, comments: &[String], header: &str, lines: &[String]) -> Result<()> {
    let mut text = String::new();
    for c in comments {
        let _ = writeln!(text, "# {c}");
    }
    text.push_str(header);
    text.push('\n');
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn proton_flags(rows: &[ResultRow]) -> Vec<ProtonFlag> {
    let find = |bin: &str, eta: f64, strategy: &str| {
        rows.iter()
            .find(|r| bin_label(r) == bin && r.eta == eta && r.strategy == strategy && r.species == "proton")
            .and_then(|r| r.efficiency)
    };
    let mut flags = Vec::new();
    for r in rows.iter().filter(|r| r.strategy == "mean" && r.species == "proton") {
        let bin = bin_label(r);
        if let (Some(mean), Some(ml_msn)) = (r.efficiency, find(&bin, r.eta, "ml_msn")) {
            if mean > ml_msn {
                flags.push(ProtonFlag {
                    bin,
                    eta: r.eta,
                    mean,
                    ml_msn,
                });
            }
        }
    }
    flags
}

fn summary_markdown(rows: &[ResultRow], provenance: Option<&Provenance>, flags: &[ProtonFlag]) -> String {
    let mut md = String::from("# Imputation sweep report\n\n");
    if let Some(p) = provenance {
        let _ = writeln!(md, "config sha256 `{}`, master seed {}\n", p.config_sha256, p.master_seed);
    }
    let mut bins: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        bins.entry(bin_label(r)).or_default().push(r);
    }
    if bins.is_empty() {
        md.push_str("No results.\n\n");
    }
    for (bin, rows) in &bins {
        let _ = writeln!(md, "## Momentum bin {bin} GeV/c\n");
        md.push_str("| strategy | eta | rms diff | eff pion | eff kaon | eff proton | pur pion | pur kaon | pur proton |\n");
        md.push_str("|---|---|---|---|---|---|---|---|---|\n");
        let mut keys: Vec<(String, f64)> = Vec::new();
        for r in rows {
            if !keys.iter().any(|(s, e)| *s == r.strategy && *e == r.eta) {
                keys.push((r.strategy.clone(), r.eta));
            }
        }
        for (strategy, eta) in keys {
            let get = |species: &str| rows.iter().find(|r| r.strategy == strategy && r.eta == eta && r.species == species);
            let eff = |s: &str| cell(get(s).and_then(|r| r.efficiency));
            let pur = |s: &str| cell(get(s).and_then(|r| r.purity));
            let _ = writeln!(
                md,
                "| {strategy} | {eta} | {} | {} | {} | {} | {} | {} | {} |",
                cell(get("all").and_then(|r| r.rms_diff)),
                eff("pion"),
                eff("kaon"),
                eff("proton"),
                pur("pion"),
                pur("kaon"),
                pur("proton"),
            );
        }
        md.push('\n');
    }
    md.push_str("## Proton efficiency: mean imputation above ml_msn\n\n");
    if flags.is_empty() {
        md.push_str("None.\n");
    } else {
        for f in flags {
            let _ = writeln!(
                md,
                "- bin {} eta {}: mean {:.4} > ml_msn {:.4}",
                f.bin, f.eta, f.mean, f.ml_msn
            );
        }
    }
    md
}

/// Writes `fig5/`, `fig7/` and `fig8/` long-format files (one per bin) and
/// `summary.md` under `out`.
pub fn cmd_report(results: &Path, out: &Path) -> Result<ReportSummary> {
    let text = fs::read_to_string(results).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput {
            path: results.to_path_buf(),
            hint: "run `sweep` first".into(),
        },
        _ => Error::Io(e),
    })?;
    let rows = read_results_csv(text.as_bytes())?;
    let provenance = Provenance::from_comments(&text);
    let comments = provenance.as_ref().map(Provenance::comment_lines).unwrap_or_default();

    let mut by_bin: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    for r in &rows {
        by_bin.entry(bin_label(r)).or_default().push(r);
    }
    let mut files = Vec::new();
    for fig in ["fig5", "fig7", "fig8"] {
        fs::create_dir_all(out.join(fig))?;
    }
    for (bin, rows) in &by_bin {
        let fig5: Vec<String> = rows
            .iter()
            .filter(|r| r.species == "all" && r.rms_diff.is_some())
            .map(|r| format!("{},{},{},{},{}", r.strategy, r.eta, opt(r.rms_diff), opt(r.rms_sd), r.n_samples))
            .collect();
        let species_rows = |value: fn(&ResultRow) -> (Option<f64>, Option<f64>)| -> Vec<String> {
            rows.iter()
                .filter(|r| r.species != "all")
                .map(|r| {
                    let (v, sd) = value(r);
                    format!("{},{},{},{},{},{}", r.strategy, r.eta, r.species, opt(v), opt(sd), r.n_samples)
                })
                .collect()
        };
        let outputs = [
            ("fig5", "strategy,eta,rms_diff,rms_sd,n_samples", fig5),
            (
                "fig7",
                "strategy,eta,species,efficiency,eff_sd,n_samples",
                species_rows(|r| (r.efficiency, r.eff_sd)),
            ),
            (
                "fig8",
                "strategy,eta,species,purity,pur_sd,n_samples",
                species_rows(|r| (r.purity, r.pur_sd)),
            ),
        ];
        for (fig, header, lines) in outputs {
            let path = out.join(fig).join(format!("bin_{bin}.csv"));
            write_lines(&path, &comments, header, &lines)?;
            files.push(path);
        }
    }
    let flags = proton_flags(&rows);
    let summary = out.join("summary.md");
    fs::write(&summary, summary_markdown(&rows, provenance.as_ref(), &flags))?;
    files.push(summary);
    Ok(ReportSummary { files, flags })
}
