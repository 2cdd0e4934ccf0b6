//! Panel and noise-spectrum files.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use factorcount::{BulkAtom, NoiseSpectrum, PanelData};

use crate::error::CliError;

fn read_records(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn is_number(cell: &str) -> bool {
    cell.parse::<f64>().is_ok()
}

/// Reads an N×T panel: one series per row, optional header row of time
/// labels and optional first column of series labels.
pub fn ingest_csv(path: &Path) -> Result<PanelData, CliError> {
    let records = read_records(path)?;
    let width = match records.first() {
        Some(first) => first.len(),
        None => return Err(CliError::Input(format!("{} is empty", path.display()))),
    };
    for (i, rec) in records.iter().enumerate() {
        if rec.len() != width {
            return Err(CliError::Input(format!(
                "row {} has {} fields, expected {width}",
                i + 1,
                rec.len()
            )));
        }
    }

    let has_header = records[0]
        .iter()
        .skip(1)
        .any(|c| !c.is_empty() && !is_number(c));
    let body_start = usize::from(has_header);
    let has_labels = records[body_start..]
        .iter()
        .any(|rec| !rec[0].is_empty() && !is_number(&rec[0]));
    let col_start = usize::from(has_labels);

    let mut rows = Vec::with_capacity(records.len() - body_start);
    for (i, rec) in records.iter().enumerate().skip(body_start) {
        let mut row = Vec::with_capacity(width - col_start);
        for (j, cell) in rec.iter().enumerate().skip(col_start) {
            if cell.is_empty() {
                return Err(CliError::Input(format!(
                    "empty cell at row {}, column {}",
                    i + 1,
                    j + 1
                )));
            }
            let value: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "non-numeric cell {cell:?} at row {}, column {}",
                    i + 1,
                    j + 1
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
    }

    let mut panel = PanelData::from_rows(&rows).map_err(CliError::from)?;
    if has_labels {
        let labels = records[body_start..].iter().map(|r| r[0].clone()).collect();
        panel = panel.with_series_labels(labels)?;
    }
    if has_header {
        let labels = records[0][col_start..].to_vec();
        panel = panel.with_time_labels(labels)?;
    }
    Ok(panel)
}

/// Writes a panel in the layout read by [`ingest_csv`].
pub fn write_csv(panel: &PanelData, path: &Path) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::Output(e.to_string()))?;
    let series = panel.series_labels();
    if let Some(times) = panel.time_labels() {
        let mut header: Vec<String> = Vec::new();
        if series.is_some() {
            header.push("series".into());
        }
        header.extend(times.iter().cloned());
        writer
            .write_record(&header)
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    for i in 0..panel.n() {
        let mut record: Vec<String> = Vec::with_capacity(panel.t() + 1);
        if let Some(labels) = series {
            record.push(labels[i].clone());
        }
        record.extend(panel.values().row(i).iter().map(|v| v.to_string()));
        writer
            .write_record(&record)
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Output(e.to_string()))
}

/// Reads `r,omega` lines (an optional header is skipped).
pub fn read_noise_spectrum(path: &Path) -> Result<NoiseSpectrum, CliError> {
    let records = read_records(path)?;
    let mut atoms = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        if rec.len() != 2 {
            return Err(CliError::Input(format!(
                "{} line {}: expected r,omega",
                path.display(),
                i + 1
            )));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(r), Ok(w)) => atoms.push(BulkAtom::new(r, w)),
            _ if i == 0 => continue,
            _ => {
                return Err(CliError::Input(format!(
                    "{} line {}: non-numeric atom",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(NoiseSpectrum::new(atoms)?)
}

/// Writes tab-separated `series, x, y` rows.
pub fn write_plot(path: &Path, rows: &[(String, f64, f64)]) -> Result<(), CliError> {
    let mut file = File::create(path).map_err(|e| CliError::Output(e.to_string()))?;
    let mut text = String::from("series\tx\ty\n");
    for (series, x, y) in rows {
        text.push_str(&format!("{series}\t{x}\t{y}\n"));
    }
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::Output(e.to_string()))
}

/// Writes a header-first CSV table.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::Output(e.to_string()))?;
    writer
        .write_record(header)
        .map_err(|e| CliError::Output(e.to_string()))?;
    for row in rows {
        writer
            .write_record(row)
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Output(e.to_string()))
}
