//! Sites and panel CSV files, JSON reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use maxstable_gof::data::{MaximaPanel, Panel, SiteSet};
use maxstable_gof::ranks::tied_columns;
use serde::Serialize;

use crate::error::{invalid, CliError, CliResult};

/// Version of every JSON document written by the tool.
pub const SCHEMA_VERSION: u32 = 1;

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    if !path.is_file() {
        return invalid(format!("{}: file not found", path.display()));
    }
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| CliError::io(path, e))
}

fn parse_number(path: &Path, line: usize, field: &str) -> CliResult<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => invalid(format!("{}: line {line}: '{field}' is not a finite number", path.display())),
    }
}

/// Reads a sites file with header `id,x,y`.
pub fn read_sites(path: &Path) -> CliResult<SiteSet> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    if header.len() != 3 || &header[0] != "id" || &header[1] != "x" || &header[2] != "y" {
        return invalid(format!("{}: header must be 'id,x,y'", path.display()));
    }
    let mut labels = Vec::new();
    let mut coords = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        labels.push(rec[0].to_string());
        coords.push([parse_number(path, k + 2, &rec[1])?, parse_number(path, k + 2, &rec[2])?]);
    }
    Ok(SiteSet::with_labels(coords, labels)?)
}

pub fn write_sites(path: &Path, sites: &SiteSet) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(["id", "x", "y"]).map_err(|e| CliError::io(path, e))?;
    for (label, c) in sites.labels().iter().zip(sites.coords()) {
        w.write_record([label.clone(), c[0].to_string(), c[1].to_string()]).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a panel whose header lists site ids; columns are reordered to the
/// order of `sites`. Warns when a column contains ties.
pub fn read_panel(path: &Path, sites: &SiteSet) -> CliResult<MaximaPanel> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    let mut order = Vec::with_capacity(sites.len());
    for label in sites.labels() {
        match header.iter().position(|h| h == label) {
            Some(k) => order.push(k),
            None => return invalid(format!("{}: no column for site '{label}'", path.display())),
        }
    }
    if header.len() != sites.len() {
        return invalid(format!("{}: {} columns but {} sites", path.display(), header.len(), sites.len()));
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        rows.push(order.iter().map(|&j| parse_number(path, k + 2, &rec[j])).collect::<CliResult<Vec<f64>>>()?);
    }
    let panel = MaximaPanel::for_sites(Panel::from_rows(&rows), sites)?;
    let tied = tied_columns(&panel);
    if tied > 0 {
        log::warn!("{}: {tied} site column(s) contain ties; average ranks are used", path.display());
    }
    Ok(panel)
}

/// Writes a panel with site ids as header; values use the shortest
/// representation that parses back to the same number.
pub fn write_panel(path: &Path, panel: &MaximaPanel, sites: &SiteSet) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(sites.labels()).map_err(|e| CliError::io(path, e))?;
    for row in panel.values().rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Pretty JSON to a file, or to stdout when `path` is `None`.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?);
            writeln!(f, "{text}").and_then(|_| f.flush()).map_err(|e| CliError::io(p, e))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// CSV output to a file, or to stdout when `path` is `None`.
pub fn csv_writer(path: Option<&Path>) -> CliResult<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}
