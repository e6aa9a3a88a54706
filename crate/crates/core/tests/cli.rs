use std::fs;
use std::path::Path;

use clap::Parser;
use skewimpute::cli::config::ExperimentConfig;
use skewimpute::cli::{run, Cli, EXIT_INVALID, EXIT_OK, EXIT_PARTIAL, EXIT_RUNTIME};
use skewimpute::eval::read_results_csv;
use skewimpute::provenance::Provenance;

const SMALL: [&str; 12] = [
    "--set",
    "sim.n_events=20000",
    "--set",
    "sweep.bins=[[0.25,0.3]]",
    "--set",
    "strategies=[{\"kind\":\"mean\"}]",
    "--set",
    "sweep.etas=[0.1]",
    "--set",
    "sweep.n_samples=2",
    "--set",
    "sweep.sample_size=200",
];

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn invoke(out: &Path, args: &[&str]) -> Outcome {
    let argv = ["skewimpute", "--out", out.to_str().unwrap()].into_iter().chain(args.iter().copied());
    let cli = Cli::try_parse_from(argv).unwrap();
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = run(&cli, &mut stdout, &mut stderr);
    Outcome {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn small(out: &Path, extra: &[&str]) -> Outcome {
    let args: Vec<&str> = SMALL.iter().chain(extra).copied().collect();
    invoke(out, &args)
}

fn files_under(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = vec![];
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(files_under(&p));
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn default_config_plans_twenty_bin_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = invoke(dir.path(), &["--dry-run", "simulate"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(o.stdout.matches("bin_").count(), 20);
    assert!(o.stdout.contains("bin_0.950-1.000.csv"));
    assert!(files_under(dir.path()).is_empty());
}

#[test]
fn dry_run_sweep_prints_the_cell_plan_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = invoke(dir.path(), &["--dry-run", "sweep"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    // 19 bins x 5 etas x 4 strategies
    assert!(o.stdout.contains("would run 380 cells"), "{}", o.stdout);
    assert!(files_under(dir.path()).is_empty());
}

#[test]
fn invalid_settings_exit_with_one_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = invoke(dir.path(), &["--set", "sim.n_events=0", "simulate"]);
    assert_eq!(o.code, EXIT_INVALID);
    assert!(o.stderr.contains("sim.n_events"), "{}", o.stderr);
    let o = invoke(dir.path(), &["--set", "sim.n_evnts=10", "simulate"]);
    assert_eq!(o.code, EXIT_INVALID);
    assert!(o.stderr.contains("n_evnts"), "{}", o.stderr);
    let o = invoke(dir.path(), &["--threads", "0", "simulate"]);
    assert_eq!(o.code, EXIT_INVALID);
    let o = invoke(dir.path(), &["--set", "strategies=[{\"kind\":\"median\"}]", "sweep"]);
    assert_eq!(o.code, EXIT_INVALID);
    assert!(files_under(dir.path()).is_empty());
}

#[test]
fn config_file_is_strict() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    fs::write(&path, r#"{"sim": {"n_events": 100, "seed": 2}, "sweep": {"n_sample": 3}}"#).unwrap();
    let o = invoke(dir.path(), &["--config", path.to_str().unwrap(), "--dry-run", "simulate"]);
    assert_eq!(o.code, EXIT_INVALID);
    assert!(o.stderr.contains("sweep.n_sample"), "{}", o.stderr);

    fs::write(&path, r#"{"sim": {"n_events": 100, "seed": 2}}"#).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.sim.n_events, 100);
    assert_eq!(cfg.sim.seed, 2);
}

#[test]
fn commands_need_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = small(dir.path(), &["train"]);
    assert_eq!(o.code, EXIT_RUNTIME);
    assert!(o.stderr.contains("run `simulate` first"), "{}", o.stderr);
    let o = small(dir.path(), &["report"]);
    assert_eq!(o.code, EXIT_RUNTIME);
    assert!(o.stderr.contains("run `sweep` first"), "{}", o.stderr);
}

#[test]
fn same_seed_gives_identical_datasets_with_provenance() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--set", "sim.n_events=5000", "simulate"];
    assert_eq!(invoke(a.path(), &args).code, EXIT_OK);
    assert_eq!(invoke(b.path(), &args).code, EXIT_OK);
    let fa = files_under(a.path());
    assert_eq!(fa.iter().filter(|p| p.extension().unwrap() == "csv").count(), 20);
    for p in &fa {
        let rel = p.strip_prefix(a.path()).unwrap();
        assert_eq!(fs::read(p).unwrap(), fs::read(b.path().join(rel)).unwrap(), "{}", rel.display());
    }
    let text = fs::read_to_string(a.path().join("data/bin_0.250-0.300.csv")).unwrap();
    let prov = Provenance::from_comments(&text).unwrap();
    assert_eq!(prov.master_seed, ExperimentConfig::default().master_seed);
    assert_eq!(prov.config_sha256.len(), 64);
    assert!(text.lines().find(|l| !l.starts_with('#')).unwrap().starts_with("species,p,e1"));

    let other = tempfile::tempdir().unwrap();
    assert_eq!(invoke(other.path(), &["--set", "sim.n_events=5000", "--set", "sim.seed=2", "simulate"]).code, EXIT_OK);
    assert_ne!(
        fs::read(a.path().join("data/bin_0.250-0.300.csv")).unwrap(),
        fs::read(other.path().join("data/bin_0.250-0.300.csv")).unwrap()
    );
}

#[test]
fn small_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    for step in ["simulate", "train", "sweep", "report"] {
        let o = small(dir.path(), &[step]);
        assert_eq!(o.code, EXIT_OK, "{step}: {}", o.stderr);
    }
    let model = dir.path().join("models/net_0.250-0.300.json");
    assert!(model.is_file());
    assert_eq!(fs::read_dir(dir.path().join("models")).unwrap().count(), 1);

    let text = fs::read_to_string(dir.path().join("results/results.csv")).unwrap();
    let rows = read_results_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    let species: Vec<&str> = rows.iter().map(|r| r.species.as_str()).collect();
    assert_eq!(species, ["pion", "kaon", "proton", "all"]);
    assert!(rows.iter().all(|r| r.strategy == "mean" && r.eta == 0.1 && r.n_samples == 2));
    assert!(Provenance::from_comments(&text).is_some());

    let failures = fs::read_to_string(dir.path().join("results/failures.csv")).unwrap();
    assert_eq!(failures.lines().filter(|l| !l.starts_with('#')).count(), 1);

    for fig in ["fig5", "fig7", "fig8"] {
        assert!(dir.path().join("report").join(fig).join("bin_0.250-0.300.csv").is_file());
    }
    let summary = fs::read_to_string(dir.path().join("report/summary.md")).unwrap();
    assert!(summary.contains("## Momentum bin 0.250-0.300"));

    // retraining with the same settings reproduces the model file
    let before = fs::read(&model).unwrap();
    assert_eq!(small(dir.path(), &["--threads", "2", "train"]).code, EXIT_OK);
    assert_eq!(fs::read(&model).unwrap(), before);

    // a different master seed must not silently reuse the old networks
    let o = small(dir.path(), &["--set", "master_seed=99", "sweep"]);
    assert_eq!(o.code, EXIT_RUNTIME);
    assert!(o.stderr.contains("different master seed"), "{}", o.stderr);
}

#[test]
fn failed_cells_exit_with_three_and_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(small(dir.path(), &["simulate"]).code, EXIT_OK);
    assert_eq!(small(dir.path(), &["train"]).code, EXIT_OK);
    let o = small(dir.path(), &["--set", "sweep.sample_size=100000", "sweep"]);
    assert_eq!(o.code, EXIT_PARTIAL, "{}", o.stderr);
    let failures = fs::read_to_string(dir.path().join("results/failures.csv")).unwrap();
    assert!(failures.contains("exceeds pool"), "{failures}");
}

#[test]
fn empty_results_give_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("empty.csv");
    fs::write(&results, skewimpute::eval::results::RESULTS_HEADER.join(",") + "\n").unwrap();
    let o = invoke(dir.path(), &["report", "--results", results.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let summary = fs::read_to_string(dir.path().join("report/summary.md")).unwrap();
    assert!(summary.starts_with("# Imputation sweep report"));
    assert!(summary.contains("No results."));
}

#[test]
fn missing_species_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--set",
        "sim.n_events=5000",
        "--set",
        "sim.abundances={\"pion\":0.85,\"kaon\":0.15,\"proton\":0.0}",
        "--set",
        "sweep.bins=[[0.25,0.3]]",
    ];
    let with = |cmd: &'static str| args.iter().copied().chain([cmd]).collect::<Vec<_>>();
    assert_eq!(invoke(dir.path(), &with("simulate")).code, EXIT_OK);
    let o = invoke(dir.path(), &with("train"));
    assert_eq!(o.code, EXIT_RUNTIME);
    assert!(o.stderr.contains("proton"), "{}", o.stderr);
}

#[test]
fn selftest_passes_with_few_draws() {
    let dir = tempfile::tempdir().unwrap();
    let o = invoke(dir.path(), &["selftest", "--draws", "20000"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stdout);
    assert_eq!(o.stdout.matches("PASS").count(), 4);
}

#[test]
fn output_dir_precedence() {
    let cfg = ExperimentConfig { output_dir: Some("from-config".into()), ..ExperimentConfig::default() };
    assert_eq!(cfg.output_dir(Some(Path::new("flag"))), Path::new("flag"));
    assert_eq!(cfg.output_dir(None), Path::new("from-config"));
}
