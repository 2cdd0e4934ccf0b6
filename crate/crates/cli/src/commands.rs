use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use factorcount::simulate::{
    run_count_study, run_noise_study, CountStudyConfig, Model, NoiseStudyConfig, Population,
    ReplicationResult,
};
use factorcount::{
    choose_m0, pc_original, pc_star, Criterion, CriterionReport, FourthMomentSpec, M0Mode,
    NoiseMethod, NoiseSpectrum,
};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    Csv,
    Json,
    Plotdata,
}

/// Where and what to write.
#[derive(Debug, Clone)]
pub struct Output {
    pub dir: PathBuf,
    pub emit: Vec<Emit>,
}

impl Output {
    fn prepare(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Output(format!("{}: {e}", self.dir.display())))
    }

    fn wants(&self, kind: Emit) -> bool {
        self.emit.contains(&kind)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write_json(&self, value: &serde_json::Value) -> Result<(), CliError> {
        if !self.wants(Emit::Json) {
            return Ok(());
        }
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        let path = self.path("report.json");
        fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }
}

pub fn moments(q: Option<u8>, beta: Option<f64>) -> Result<FourthMomentSpec, CliError> {
    let base = FourthMomentSpec::real_gaussian();
    FourthMomentSpec::new(q.unwrap_or(base.q), beta.unwrap_or(base.beta))
        .map_err(|e| CliError::Usage(e.to_string()))
}

pub fn nonspikes(path: Option<&Path>) -> Result<NoiseSpectrum, CliError> {
    match path {
        Some(p) => io::read_noise_spectrum(p),
        None => Ok(NoiseSpectrum::identity()),
    }
}

fn na(value: Option<String>) -> String {
    value.unwrap_or_else(|| "NA".to_string())
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    m0: usize,
    original: Result<Vec<CriterionReport>, String>,
    star: Result<Vec<CriterionReport>, String>,
}

pub struct EstimateArgs {
    pub input: PathBuf,
    pub m0: Vec<M0Mode>,
    pub nonspikes: NoiseSpectrum,
    pub moments: FourthMomentSpec,
}

/// Runs PC and PC* on a panel file at each requested m₀.
pub fn estimate(args: &EstimateArgs, out: &Output) -> Result<(), CliError> {
    let panel = io::ingest_csv(&args.input)?;
    let (n, t) = (panel.n(), panel.t());
    let mut m0s = Vec::new();
    for mode in &args.m0 {
        let m0 = choose_m0(n, t, *mode)?;
        if !m0s.contains(&m0) {
            m0s.push(m0);
        }
    }

    let rows: Vec<EstimateRow> = m0s
        .iter()
        .map(|&m0| EstimateRow {
            m0,
            original: pc_original(&panel, m0).map_err(|e| e.to_string()),
            star: pc_star(&panel, m0, &args.nonspikes, args.moments).map_err(|e| e.to_string()),
        })
        .collect();

    let failures: Vec<&String> = rows
        .iter()
        .flat_map(|r| [r.original.as_ref().err(), r.star.as_ref().err()])
        .flatten()
        .collect();
    if failures.len() == 2 * rows.len() {
        return Err(CliError::Numerical(format!(
            "every criterion failed: {}",
            failures[0]
        )));
    }
    for row in &rows {
        if let Err(e) = &row.star {
            eprintln!("warning: PC* at m0 = {} failed: {e}", row.m0);
        }
        if let Err(e) = &row.original {
            eprintln!("warning: PC at m0 = {} failed: {e}", row.m0);
        }
    }

    out.prepare()?;
    if out.wants(Emit::Csv) {
        let mut header = vec!["m0".to_string()];
        header.extend(Criterion::ALL.iter().map(|c| c.label().to_string()));
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|row| {
                let mut cells = vec![row.m0.to_string()];
                for part in [&row.original, &row.star] {
                    match part {
                        Ok(reports) => cells.extend(reports.iter().map(|r| r.m_hat.to_string())),
                        Err(_) => cells.extend(std::iter::repeat_n(na(None), 3)),
                    }
                }
                cells
            })
            .collect();
        io::write_table(&out.path("table_estimate.csv"), &header, &table)?;
    }
    if out.wants(Emit::Plotdata) {
        let mut points = Vec::new();
        for row in &rows {
            for reports in [&row.original, &row.star].into_iter().flatten() {
                for report in reports {
                    let series = format!("{}/m0={}", report.criterion.label(), row.m0);
                    for &(m, y) in &report.values {
                        if y.is_finite() {
                            points.push((series.clone(), m as f64, y));
                        }
                    }
                }
            }
        }
        io::write_plot(&out.path("plot_criteria.tsv"), &points)?;
    }
    out.write_json(&json!({
        "command": "estimate",
        "input": args.input.display().to_string(),
        "n": n,
        "t": t,
        "series_labels": panel.series_labels(),
        "nonspikes": args.nonspikes,
        "moments": args.moments,
        "rows": rows,
    }))
}

pub struct SimulateArgs {
    pub model: Model,
    pub population: Population,
    pub grid: Vec<(usize, usize)>,
    pub m0: usize,
    pub reps: usize,
    pub seed: u64,
    pub nonspikes: Option<NoiseSpectrum>,
}

fn mean_sd(result: &ReplicationResult, label: &str) -> String {
    match result.summary.get(label) {
        Some(s) if s.failures < result.replications => format!("{:.2}({:.2})", s.mean, s.sd),
        _ => na(None),
    }
}

/// Factor-count Monte Carlo over an (N, T) grid.
pub fn simulate(args: &SimulateArgs, out: &Output) -> Result<(), CliError> {
    let mut config = CountStudyConfig::new(args.model, args.population, args.grid.clone());
    config.m0 = args.m0;
    config.replications = args.reps;
    config.base_seed = args.seed;
    config.nonspikes = args.nonspikes.clone();
    let results = run_count_study(&config)?;

    out.prepare()?;
    if out.wants(Emit::Csv) {
        let mut header = vec!["N".to_string(), "T".to_string()];
        header.extend(Criterion::ALL.iter().map(|c| c.label().to_string()));
        let table: Vec<Vec<String>> = results
            .iter()
            .map(|r| {
                let mut cells = vec![r.n.to_string(), r.t.to_string()];
                cells.extend(Criterion::ALL.iter().map(|c| mean_sd(r, c.label())));
                cells
            })
            .collect();
        io::write_table(&out.path("table_counts.csv"), &header, &table)?;
    }
    if out.wants(Emit::Plotdata) {
        let mut points = Vec::new();
        for criterion in Criterion::ALL {
            for (k, r) in results.iter().enumerate() {
                if let Some(s) = r.summary.get(criterion.label()) {
                    if s.mean.is_finite() {
                        points.push((criterion.label().to_string(), (k + 1) as f64, s.mean));
                    }
                }
            }
        }
        io::write_plot(&out.path("plot_counts.tsv"), &points)?;
    }
    out.write_json(&json!({
        "command": "simulate",
        "config": config,
        "cells": results,
    }))
}

pub struct NoiseBenchArgs {
    pub models: Vec<Model>,
    pub populations: Vec<Population>,
    pub c: Vec<f64>,
    pub n_grid: Option<Vec<usize>>,
    pub reps: usize,
    pub seed: u64,
}

/// Log-MAE comparison of the six noise estimators.
pub fn noise_bench(args: &NoiseBenchArgs, out: &Output) -> Result<(), CliError> {
    let mut runs = Vec::new();
    for &model in &args.models {
        for &population in &args.populations {
            for &c in &args.c {
                let grid = args
                    .n_grid
                    .clone()
                    .unwrap_or_else(|| NoiseStudyConfig::paper_grid(c));
                let mut config = NoiseStudyConfig::new(model, population, c, grid);
                config.replications = args.reps;
                config.base_seed = args.seed;
                let results = run_noise_study(&config)?;
                runs.push((config, results));
            }
        }
    }

    out.prepare()?;
    let labels: Vec<&str> = NoiseMethod::ALL.iter().map(|m| m.label()).collect();
    if out.wants(Emit::Csv) {
        let mut header: Vec<String> = ["model", "population", "c", "N", "T"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(labels.iter().map(|s| s.to_string()));
        let mut table = Vec::new();
        for (config, results) in &runs {
            for r in results {
                let mut cells = vec![
                    config.model.to_string(),
                    config.population.to_string(),
                    config.c.to_string(),
                    r.n.to_string(),
                    r.t.to_string(),
                ];
                cells.extend(labels.iter().map(|l| {
                    na(r.summary
                        .get(*l)
                        .and_then(|s| s.log10_mae)
                        .filter(|v| v.is_finite())
                        .map(|v| format!("{v:.6}")))
                }));
                table.push(cells);
            }
        }
        io::write_table(&out.path("table_noise.csv"), &header, &table)?;
    }
    if out.wants(Emit::Plotdata) {
        let mut points = Vec::new();
        for (config, results) in &runs {
            for label in &labels {
                let series = format!(
                    "{}/{}/c={}/{label}",
                    config.model, config.population, config.c
                );
                for r in results {
                    if let Some(v) = r.summary.get(*label).and_then(|s| s.log10_mae) {
                        if v.is_finite() {
                            points.push((series.clone(), r.n as f64, v));
                        }
                    }
                }
            }
        }
        io::write_plot(&out.path("plot_noise.tsv"), &points)?;
    }
    let studies: Vec<BTreeMap<&str, serde_json::Value>> = runs
        .iter()
        .map(|(config, results)| {
            BTreeMap::from([("config", json!(config)), ("cells", json!(results))])
        })
        .collect();
    out.write_json(&json!({
        "command": "noise-bench",
        "replications": args.reps,
        "seed": args.seed,
        "studies": studies,
    }))
}
