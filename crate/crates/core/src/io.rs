//! CSV and `key=value` files shared by the driver and the plotting scripts.
//!
//! Numbers are written with 17 significant digits. Metadata lines start
//! with `#` and precede the column header.

use crate::cip::FluidState;
use crate::diagnostics::DiagnosticSeries;
use crate::error::{NskError, Result};
use crate::hermite::{HermiteField, PeriodicGrid};
use crate::twave::TravelingWave;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const SNAPSHOT_COLUMNS: [&str; 5] = ["x", "rho", "rho_x", "u", "u_x"];
pub const PROFILE_COLUMNS: [&str; 3] = ["x", "rho", "u"];

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> NskError {
    NskError::Io(format!("{}: {e}", path.display()))
}

/// Snapshot file name for a step.
pub fn snapshot_name(step: usize) -> String {
    format!("snap_{step:06}.csv")
}

/// Writes `# key=value` lines, the header and the rows.
pub fn write_table(path: &Path, meta: &[(&str, String)], columns: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    if !meta.is_empty() {
        let line: Vec<String> = meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "# {}", line.join(", ")).map_err(|e| io_err(path, e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt(*v))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta.get(key).and_then(|v| v.parse().ok())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_table(&text).map_err(|e| io_err(path, e))
}

pub fn parse_table(text: &str) -> std::result::Result<Table, String> {
    let mut meta = BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        for item in line.trim_start_matches('#').split(',') {
            if let Some((k, v)) = item.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns: Vec<String> = r
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
        return Err("missing header".into());
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| format!("row {}: not a number: {s:?}", i + 1)))
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        if row.len() != columns.len() {
            return Err(format!("row {}: expected {} fields, got {}", i + 1, columns.len(), row.len()));
        }
        rows.push(row);
    }
    Ok(Table { meta, columns, rows })
}

pub fn write_snapshot(path: &Path, state: &FluidState) -> Result<()> {
    let g = state.grid();
    let meta = [("t", fmt(state.t)), ("step", state.step.to_string())];
    let rows = (0..g.nx).map(|j| {
        vec![
            g.x(j),
            state.rho.values[j],
            state.rho.derivs[j],
            state.u.values[j],
            state.u.derivs[j],
        ]
    });
    write_table(path, &meta, &SNAPSHOT_COLUMNS, rows)
}

/// Reads a snapshot on the uniform grid `x_j = j/nx` of the unit torus.
pub fn read_snapshot(path: &Path) -> Result<FluidState> {
    let t = read_table(path)?;
    let bad = |m: String| NskError::Io(format!("{}: {m}", path.display()));
    if t.columns != SNAPSHOT_COLUMNS {
        return Err(bad(format!("expected columns {SNAPSHOT_COLUMNS:?}, got {:?}", t.columns)));
    }
    let nx = t.rows.len();
    if nx < 4 {
        return Err(bad(format!("need at least 4 rows, got {nx}")));
    }
    let grid = PeriodicGrid::new(nx);
    for (j, r) in t.rows.iter().enumerate() {
        if (r[0] - grid.x(j)).abs() > 1e-9 {
            return Err(bad(format!("row {}: x = {} is not on the uniform grid", j + 1, r[0])));
        }
        if !r.iter().all(|v| v.is_finite()) {
            return Err(bad(format!("row {}: non-finite value", j + 1)));
        }
    }
    let col = |i: usize| t.rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let mut s = FluidState::new(HermiteField::new(grid, col(1), col(2)), HermiteField::new(grid, col(3), col(4)));
    s.t = t.meta_f64("t").unwrap_or(0.0);
    s.step = t.meta_f64("step").map_or(0, |v| v as usize);
    Ok(s)
}

pub fn write_series(path: &Path, series: &DiagnosticSeries) -> Result<()> {
    write_table(
        path,
        &[],
        &DiagnosticSeries::COLUMNS,
        (0..series.len()).map(|i| series.row(i).to_vec()),
    )
}

/// Profile CSV of a traveling wave: `x, rho, u` with `u = c + m/ρ`.
pub fn write_profile(path: &Path, wave: &TravelingWave) -> Result<()> {
    let p = &wave.profile;
    let meta = [
        ("omega", p.omega.map_or("inf".to_string(), fmt)),
        ("lambda", fmt(p.lambda)),
        ("m", fmt(p.m)),
        ("c", fmt(wave.c)),
        ("eps", fmt(p.eps)),
        ("average", fmt(p.average)),
        ("method", p.method.name().to_string()),
    ];
    let rows = p.x.iter().zip(&p.rho).map(|(x, r)| vec![*x, *r, wave.c + p.m / r]);
    write_table(path, &meta, &PROFILE_COLUMNS, rows)
}

pub fn write_kv(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in pairs {
        s.push_str(k);
        s.push('=');
        s.push_str(v);
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| io_err(path, e))
}

pub fn read_kv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect())
}
