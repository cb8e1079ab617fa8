//! `report`: hands an experiment directory to the `escsim-analysis` tool
//! when it is installed, otherwise lists the CSV files it would read
//! together with the headline numbers from each `summary.csv`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{bail, Context, Result};

const ANALYSIS_TOOL: &str = "escsim-analysis";

fn analysis_tool() -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|d| d.join(ANALYSIS_TOOL))
        .find(|p| p.is_file())
}

/// `metric -> value` pairs of a summary.csv.
fn read_summary(path: &Path) -> Result<Vec<(String, String)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok((rec.get(0).unwrap_or("").to_string(), rec.get(1).unwrap_or("").to_string()))
        })
        .collect()
}

pub fn pointers(experiment: &Path) -> Result<String> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(experiment)
        .with_context(|| format!("reading {}", experiment.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut out = String::new();
    let _ = writeln!(out, "run,summary_csv,utilization_csv,calls_csv,mean_wait_s,abandonment_rate,time_above_80");
    let mut found = 0;
    for d in dirs {
        let summary = d.join("summary.csv");
        if !summary.is_file() {
            log::warn!("{}: no summary.csv, skipped", d.display());
            continue;
        }
        let rows = read_summary(&summary)?;
        let get = |k: &str| {
            rows.iter()
                .find(|(m, _)| m == k)
                .and_then(|(_, v)| v.parse::<f64>().ok())
                .map_or(String::new(), |v| format!("{v:.3}"))
        };
        let name = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{}",
            summary.display(),
            d.join("utilization.csv").display(),
            d.join("calls.csv").display(),
            get("mean_wait_s"),
            get("abandonment_rate"),
            get("time_above_80"),
        );
        found += 1;
    }
    if found == 0 {
        bail!("no run directories with summary.csv under {}", experiment.display());
    }
    Ok(out)
}

pub fn run(experiment: &Path, out: Option<&Path>) -> Result<()> {
    if let Some(tool) = analysis_tool() {
        let mut cmd = Command::new(&tool);
        cmd.arg("report").arg(experiment);
        if let Some(o) = out {
            cmd.arg("--out").arg(o);
        }
        let status = cmd.status().with_context(|| format!("running {}", tool.display()))?;
        if !status.success() {
            bail!("{} failed with {status}", tool.display());
        }
        return Ok(());
    }
    let text = pointers(experiment)?;
    print!("{text}");
    if let Some(o) = out {
        std::fs::create_dir_all(o).with_context(|| format!("creating {}", o.display()))?;
        std::fs::write(o.join("report.csv"), &text).with_context(|| format!("writing {}", o.display()))?;
    }
    Ok(())
}
