//! The batch driver end to end on a small config: simulate, train, sweep and
//! report into a scratch directory, then print the summary.
//!
//!     cargo run --release --example pipeline [OUT_DIR]

use std::path::PathBuf;

use clap::Parser;
use skewimpute::cli::{run, Cli, EXIT_OK};

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("skewimpute-pipeline"));
    let common = [
        "--out",
        out.to_str().expect("utf-8 path"),
        "--set",
        "sim.n_events=40000",
        "--set",
        "sweep.bins=[[0.25,0.3]]",
        "--set",
        "sweep.etas=[0.1,0.3]",
        "--set",
        "sweep.n_samples=2",
        "--set",
        "sweep.sample_size=500",
    ];
    for step in ["simulate", "train", "sweep", "report"] {
        let args = std::iter::once("skewimpute").chain(common).chain([step]);
        let cli = Cli::parse_from(args);
        let code = run(&cli, &mut std::io::stdout(), &mut std::io::stderr());
        if code != EXIT_OK {
            eprintln!("{step} exited with {code}");
            std::process::exit(code);
        }
    }
    let summary = out.join("report").join("summary.md");
    println!("\n{}", std::fs::read_to_string(summary).expect("report writes summary.md"));
}
