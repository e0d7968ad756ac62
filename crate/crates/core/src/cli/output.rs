//! CSV tables and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Scenario;
use super::sweep::{NoiseCheck, RunOutput, Table};

pub const MANIFEST_NAME: &str = "manifest.json";

/// CSV text with a `#` header naming the run and its manifest.
pub fn render_csv(table: &Table, verb: &str, run_id: &str, units: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# wirelink {} {}", env!("CARGO_PKG_VERSION"), verb);
    let _ = writeln!(s, "# run_id: {run_id}");
    let _ = writeln!(s, "# manifest: {MANIFEST_NAME}");
    let _ = writeln!(s, "# lengths: {units}");
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub run_id: String,
    pub verb: &'a str,
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a super::config::ScenarioConfig,
    pub numerics: serde_json::Map<String, serde_json::Value>,
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub outputs: Vec<String>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_check: Option<NoiseCheck>,
}

/// Write every table plus `manifest.json` into `dir`; returns the paths written.
pub fn write_run(
    dir: &Path,
    verb: &str,
    scenario: &Scenario,
    output: &RunOutput,
    wall_time_s: f64,
    noise_check: Option<NoiseCheck>,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let run_id = scenario.run_id();
    let units = match scenario.config.medium.units {
        super::config::Units::Wavelengths => "wavelengths",
        super::config::Units::Meters => "meters",
    };
    let mut written = Vec::new();
    let mut outputs = Vec::new();
    for t in &output.tables {
        let name = format!("{}.csv", t.name);
        let path = dir.join(&name);
        fs::write(&path, render_csv(t, verb, &run_id, units))?;
        outputs.push(name);
        written.push(path);
    }
    let manifest = RunManifest {
        run_id,
        verb,
        tool: "wirelink",
        version: env!("CARGO_PKG_VERSION"),
        config: &scenario.config,
        numerics: output.numerics.iter().cloned().collect(),
        summary: output.summary.iter().cloned().collect(),
        outputs,
        threads: rayon::current_num_threads(),
        wall_time_s,
        warnings: &output.warnings,
        noise_check,
    };
    let path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    fs::write(&path, json + "\n")?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = Table {
            name: "x",
            columns: vec!["a", "b"],
            rows: vec![vec![1.0, 0.1], vec![-2.5, 1e-300]],
        };
        let s = render_csv(&t, "se-map", "abcd", "wavelengths");
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "# run_id: abcd");
        assert_eq!(lines[4], "a,b");
        assert_eq!(lines[5], "1.0,0.1");
        assert_eq!(lines[6], "-2.5,1e-300");
        // values round-trip exactly
        assert_eq!(lines[5].split(',').nth(1).unwrap().parse::<f64>().unwrap(), 0.1);
    }
}
