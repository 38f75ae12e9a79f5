//! Runs the bundled audit configs and writes their reports to a temporary
//! directory, or to the directory given as the first argument.

use std::path::{Path, PathBuf};

use prefmono::report::{run_config, Format, RunOptions};

fn main() -> prefmono::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("prefmono-reports"));
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let options = RunOptions {
        out_dir: Some(out_dir.clone()),
        format: Some(Format::Both),
        seed: None,
    };
    for name in [
        "gaussian_intensification.toml",
        "ipo_counterexample.toml",
        "fully_pairwise_violation.toml",
    ] {
        let outcome = run_config(configs.join(name), &options)?;
        let violated = outcome.run.records.iter().filter(|r| r.verdict == "violated").count();
        println!(
            "{name}: {} records, {violated} violated, exit code {}",
            outcome.run.records.len(),
            outcome.exit_code()
        );
    }
    println!("reports in {}", out_dir.display());
    Ok(())
}
