//! Result files.
//!
//! Tables are CSV with units in the headers and a fixed column order; floats
//! use the shortest round-trip representation so reruns compare byte for
//! byte. A JSON manifest records what is needed to regenerate them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use gridrel_core::engine::{EngineError, IncrementRecord};
use gridrel_core::indices::{Index, Stats};
use gridrel_core::{PowerNetwork, Simulator};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::CampaignConfig;
use crate::experiments::{CaseResult, CellResult};

/// Indices in the order of the published summary table.
pub const TABLE_INDICES: [Index; 6] = [
    Index::Ens,
    Index::Saifi,
    Index::Saidi,
    Index::EvDemand,
    Index::EvDur,
    Index::EvInt,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Format {
    /// summary.csv: ensemble means per case.
    Summary,
    /// summary.json: full statistics per case and index.
    Json,
    /// iterations.csv: every index of every iteration.
    Iterations,
    /// boxplot.csv: five-number summaries.
    Boxplot,
    /// convergence.csv: cumulative means per iteration.
    Convergence,
    /// manifest.json: seed, hashes, version and file checksums.
    Manifest,
}

impl Format {
    pub fn file_name(self) -> &'static str {
        match self {
            Format::Summary => "summary.csv",
            Format::Json => "summary.json",
            Format::Iterations => "iterations.csv",
            Format::Boxplot => "boxplot.csv",
            Format::Convergence => "convergence.csv",
            Format::Manifest => "manifest.json",
        }
    }

    pub const DEFAULT: [Format; 6] = [
        Format::Summary,
        Format::Json,
        Format::Iterations,
        Format::Boxplot,
        Format::Convergence,
        Format::Manifest,
    ];
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{0} already exists; pass --force to overwrite")]
    Exists(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Engine(#[from] EngineError),
}

/// Identifies a run in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub command: String,
    pub config: CampaignConfig,
    pub dataset_sha256: String,
}

impl RunMeta {
    pub fn new(command: &str, config: &CampaignConfig, dataset_text: &str) -> Self {
        Self {
            command: command.into(),
            config: config.clone(),
            dataset_sha256: sha256_hex(dataset_text.as_bytes()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn csv_string(header: &[String], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn strings<const N: usize>(v: [&str; N]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn summary_csv(results: &[CaseResult]) -> String {
    let mut header = strings(["case", "v2g", "batteries", "iterations"]);
    header.extend(TABLE_INDICES.iter().map(|i| i.label().to_string()));
    header.extend(strings(["lambda_s [1/yr]", "U_s [h/yr]", "r_s [h]"]));
    let rows = results
        .iter()
        .map(|r| {
            let s = &r.summary;
            let mut row = vec![
                r.spec.name.clone(),
                r.spec.v2g.to_string(),
                r.spec.batteries.to_string(),
                s.len().to_string(),
            ];
            row.extend(TABLE_INDICES.iter().map(|&i| s.mean(i).to_string()));
            row.push(s.mean(Index::LambdaS).to_string());
            row.push(s.mean(Index::US).to_string());
            row.push(s.mean_r_s().map(|v| v.to_string()).unwrap_or_default());
            row
        })
        .collect();
    csv_string(&header, rows)
}

fn stats_json(s: &Stats) -> serde_json::Value {
    json!({
        "count": s.count,
        "mean": s.mean,
        "variance": s.variance,
        "min": s.min,
        "q1": s.q1,
        "median": s.median,
        "q3": s.q3,
        "max": s.max,
    })
}

pub fn summary_json(results: &[CaseResult]) -> String {
    let cases: Vec<_> = results
        .iter()
        .map(|r| {
            let indices: serde_json::Map<String, serde_json::Value> = Index::ALL
                .iter()
                .map(|&i| (i.key().to_string(), stats_json(&r.summary.stats(i))))
                .collect();
            json!({
                "case": r.spec,
                "iterations": r.summary.len(),
                "units": Index::ALL
                    .iter()
                    .map(|i| (i.key().to_string(), json!(i.label())))
                    .collect::<serde_json::Map<_, _>>(),
                "indices": indices,
                "r_s_mean": r.summary.mean_r_s(),
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&json!({ "cases": cases })).expect("plain data");
    s.push('\n');
    s
}

pub fn iterations_csv(results: &[CaseResult]) -> String {
    let mut header = strings(["case", "iteration"]);
    header.extend(Index::ALL.iter().map(|i| i.label().to_string()));
    header.push("r_s [h]".into());
    let mut rows = Vec::new();
    for r in results {
        for rep in &r.summary.reports {
            let mut row = vec![r.spec.name.clone(), rep.iteration.to_string()];
            row.extend(Index::ALL.iter().map(|&i| rep.get(i).to_string()));
            row.push(rep.r_s.map(|v| v.to_string()).unwrap_or_default());
            rows.push(row);
        }
    }
    csv_string(&header, rows)
}

pub fn boxplot_csv(results: &[CaseResult]) -> String {
    let header = strings([
        "case", "index", "count", "mean", "variance", "min", "q1", "median", "q3", "max",
    ]);
    let mut rows = Vec::new();
    for r in results {
        for &i in &Index::ALL {
            let s = r.summary.stats(i);
            rows.push(vec![
                r.spec.name.clone(),
                i.label().to_string(),
                s.count.to_string(),
                s.mean.to_string(),
                s.variance.to_string(),
                s.min.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.q3.to_string(),
                s.max.to_string(),
            ]);
        }
    }
    csv_string(&header, rows)
}

pub fn convergence_csv(results: &[CaseResult]) -> String {
    let tracked = [Index::Ens, Index::Saifi, Index::Saidi];
    let mut header = strings(["case", "iteration"]);
    header.extend(tracked.iter().map(|i| format!("cumulative mean {}", i.label())));
    let mut rows = Vec::new();
    for r in results {
        let curves: Vec<Vec<f64>> = tracked.iter().map(|&i| r.summary.cumulative_mean(i)).collect();
        for (k, rep) in r.summary.reports.iter().enumerate() {
            let mut row = vec![r.spec.name.clone(), rep.iteration.to_string()];
            row.extend(curves.iter().map(|c| c[k].to_string()));
            rows.push(row);
        }
    }
    csv_string(&header, rows)
}

/// Tidy factorial table: one row per cell, factor levels then index means.
pub fn factorial_csv(cells: &[CellResult]) -> String {
    let mut header = strings(["charger [kW]", "ev_share [-]", "repair_loc [h]", "iterations"]);
    header.extend(TABLE_INDICES.iter().map(|i| format!("mean {}", i.label())));
    header.push("error".into());
    let rows = cells
        .iter()
        .map(|c| {
            let mut row = vec![
                c.cell.charger_kw.to_string(),
                c.cell.ev_share.to_string(),
                c.cell.repair_loc_h.to_string(),
            ];
            match &c.outcome {
                Ok(s) => {
                    row.push(s.len().to_string());
                    row.extend(TABLE_INDICES.iter().map(|&i| s.mean(i).to_string()));
                    row.push(String::new());
                }
                Err(e) => {
                    row.push("0".into());
                    row.extend(TABLE_INDICES.iter().map(|_| String::new()));
                    row.push(e.clone());
                }
            }
            row
        })
        .collect();
    csv_string(&header, rows)
}

/// Per sub-system rows of an increment trace.
pub fn trace_csv(net: &PowerNetwork, records: &[IncrementRecord]) -> String {
    let header = strings([
        "iteration",
        "increment",
        "time [h]",
        "failed lines",
        "first bus",
        "buses",
        "island",
        "reference bus",
        "generation [MW]",
        "discharge [MW]",
        "charge [MW]",
        "demand [MW]",
        "shed [MW]",
        "losses [MW]",
        "residual [MW]",
        "flow iterations",
        "flow converged",
        "loss rounds",
    ]);
    let mut rows = Vec::new();
    for rec in records {
        let failed = rec
            .failed_lines
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        for s in &rec.sub_systems {
            rows.push(vec![
                rec.iteration.to_string(),
                rec.increment.to_string(),
                rec.time_hours.to_string(),
                failed.clone(),
                net.buses[s.first_bus].id.to_string(),
                s.buses.to_string(),
                s.island.to_string(),
                s.reference
                    .map(|b| net.buses[b].id.to_string())
                    .unwrap_or_default(),
                s.generation_mw.to_string(),
                s.discharge_mw.to_string(),
                s.charge_mw.to_string(),
                s.demand_mw.to_string(),
                s.shed_mw.to_string(),
                s.losses_mw.to_string(),
                s.residual_mw().to_string(),
                s.flow_iterations.to_string(),
                s.flow_converged.to_string(),
                s.loss_rounds.to_string(),
            ]);
        }
    }
    csv_string(&header, rows)
}

/// Traced increments of the first `iterations` iterations.
pub fn trace_records(sim: &Simulator, iterations: u64) -> Result<Vec<IncrementRecord>, EngineError> {
    let mut out: Vec<IncrementRecord> = Vec::new();
    for i in 0..iterations.min(sim.config().iterations) {
        sim.run_iteration_traced(i, &mut out)?;
    }
    Ok(out)
}

/// Fails when any of `names` already exists in `dir`, unless `force`.
pub fn check_targets(dir: &Path, names: &[&str], force: bool) -> Result<(), OutputError> {
    if force {
        return Ok(());
    }
    for name in names {
        let p = dir.join(name);
        if p.exists() {
            return Err(OutputError::Exists(p));
        }
    }
    Ok(())
}

/// Writes a set of named files into a directory, all or nothing.
pub struct ResultWriter {
    dir: PathBuf,
    force: bool,
    created_dir: bool,
    files: Vec<(String, String)>,
}

impl ResultWriter {
    pub fn new(dir: impl Into<PathBuf>, force: bool) -> Self {
        Self {
            dir: dir.into(),
            force,
            created_dir: false,
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    /// Adds the case tables selected by `formats`.
    pub fn add_cases(&mut self, results: &[CaseResult], formats: &[Format]) {
        for f in formats {
            match f {
                Format::Summary => self.add(f.file_name(), summary_csv(results)),
                Format::Json => self.add(f.file_name(), summary_json(results)),
                Format::Iterations => self.add(f.file_name(), iterations_csv(results)),
                Format::Boxplot => self.add(f.file_name(), boxplot_csv(results)),
                Format::Convergence => self.add(f.file_name(), convergence_csv(results)),
                Format::Manifest => {}
            }
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes every added file, then the manifest when requested. On any
    /// error the files written so far are removed again.
    pub fn finish(mut self, meta: Option<&RunMeta>) -> Result<Vec<PathBuf>, OutputError> {
        if let Some(meta) = meta {
            let manifest = manifest_json(meta, &self.files);
            self.files.push((Format::Manifest.file_name().into(), manifest));
        }
        let names: Vec<&str> = self.files.iter().map(|f| f.0.as_str()).collect();
        check_targets(&self.dir, &names, self.force)?;
        if !self.dir.exists() {
            fs::create_dir_all(&self.dir).map_err(|source| OutputError::Io {
                path: self.dir.clone(),
                source,
            })?;
            self.created_dir = true;
        }
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let p = self.path(name);
            if let Err(source) = fs::write(&p, contents) {
                // Partially written files are removed as well.
                let _ = fs::remove_file(&p);
                self.cleanup(&written);
                return Err(OutputError::Io { path: p, source });
            }
            written.push(p);
        }
        Ok(written)
    }

    fn cleanup(&self, written: &[PathBuf]) {
        for p in written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn manifest_json(meta: &RunMeta, files: &[(String, String)]) -> String {
    let config_toml = toml::to_string(&meta.config).expect("config serializes");
    let m = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": meta.command,
        "seed": meta.config.simulation.seed,
        "iterations": meta.config.simulation.iterations,
        "increment_minutes": meta.config.simulation.increment_minutes,
        "config_sha256": sha256_hex(config_toml.as_bytes()),
        "dataset_sha256": meta.dataset_sha256,
        "config": meta.config,
        "files": files
            .iter()
            .map(|(name, c)| json!({ "name": name, "sha256": sha256_hex(c.as_bytes()) }))
            .collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&m).expect("plain data");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CaseSpec;
    use gridrel_core::{IndexReport, IndexSummary};

    fn result(name: &str, ens: &[f64]) -> CaseResult {
        let mut summary = IndexSummary::new();
        for (i, &e) in ens.iter().enumerate() {
            summary.push(&IndexReport {
                iteration: i as u64,
                ens_mwh: e,
                ..IndexReport::default()
            });
        }
        CaseResult {
            spec: CaseSpec {
                name: name.into(),
                v2g: false,
                batteries: false,
                overrides: Default::default(),
            },
            summary,
        }
    }

    #[test]
    fn summary_has_units_and_means() {
        let csv = summary_csv(&[result("a", &[1.0, 2.0, 3.0])]);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().contains("ENS [MWh/yr]"));
        assert!(lines.next().unwrap().starts_with("a,false,false,3,2,"));
    }

    #[test]
    fn refuses_overwrite_without_force() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ResultWriter::new(dir.path(), false);
        w.add("x.csv", "1\n".into());
        w.finish(None).unwrap();
        let mut w = ResultWriter::new(dir.path(), false);
        w.add("x.csv", "2\n".into());
        assert!(matches!(w.finish(None), Err(OutputError::Exists(_))));
        assert_eq!(fs::read_to_string(dir.path().join("x.csv")).unwrap(), "1\n");
        let mut w = ResultWriter::new(dir.path(), true);
        w.add("x.csv", "2\n".into());
        w.finish(None).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("x.csv")).unwrap(), "2\n");
    }

    #[test]
    fn failed_write_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut w = ResultWriter::new(&out, false);
        w.add("a.csv", "1\n".into());
        w.add("missing/b.csv", "2\n".into());
        assert!(matches!(w.finish(None), Err(OutputError::Io { .. })));
        assert!(!out.exists());
    }

    #[test]
    fn summary_only_is_one_table() {
        let mut w = ResultWriter::new("unused", false);
        w.add_cases(&[result("a", &[1.0])], &[Format::Summary]);
        let names: Vec<_> = w.files.iter().map(|f| f.0.as_str()).collect();
        assert_eq!(names, ["summary.csv"]);
    }
}
