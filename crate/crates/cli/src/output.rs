//! Snapshot, cross-section and probe writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use asph_core::solvers::CrossSectionPoint;
use asph_core::ParticleSet;

use crate::config::OutputFormat;

/// Full-precision text form of a double (17 significant digits).
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn coordinate_names(dim: usize) -> &'static [&'static str] {
    &["x", "y", "z"][..dim]
}

/// Writes particle positions and the named fields as CSV or legacy VTK.
pub fn write_snapshot(ps: &ParticleSet, fields: &[(&str, &[f64])], format: OutputFormat, path: &Path) -> Result<()> {
    for (name, values) in fields {
        if values.len() != ps.len() {
            bail!("field `{name}` has {} values for {} particles", values.len(), ps.len());
        }
    }
    match format {
        OutputFormat::Csv => write_csv(ps, fields, path),
        OutputFormat::Vtk => write_vtk(ps, fields, path),
    }
    .with_context(|| format!("writing {}", path.display()))
}

fn write_csv(ps: &ParticleSet, fields: &[(&str, &[f64])], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = coordinate_names(ps.dim()).to_vec();
    header.extend(fields.iter().map(|f| f.0));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for (i, p) in ps.positions().iter().enumerate() {
        row.clear();
        row.extend((0..ps.dim()).map(|k| format_value(p[k])));
        row.extend(fields.iter().map(|f| format_value(f.1[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_vtk(ps: &ParticleSet, fields: &[(&str, &[f64])], path: &Path) -> Result<()> {
    let n = ps.len();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "particle snapshot")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for p in ps.positions() {
        writeln!(w, "{} {} {}", format_value(p[0]), format_value(p[1]), format_value(p[2]))?;
    }
    writeln!(w, "CELLS {n} {}", 2 * n)?;
    for i in 0..n {
        writeln!(w, "1 {i}")?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "1")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    for (name, values) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in *values {
            writeln!(w, "{}", format_value(*v))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Header and rows of a snapshot CSV.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec.iter().map(|s| s.parse::<f64>()).collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_cross_section(points: &[CrossSectionPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["coordinate", "numeric", "analytic"])?;
    for p in points {
        w.write_record([format_value(p.coordinate), format_value(p.numeric), format_value(p.analytic)])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic numeric table with a header.
pub fn write_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_value(*v)))?;
    }
    w.flush()?;
    Ok(())
}
