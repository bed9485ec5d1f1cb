//! Field export in CSV and raw little-endian binary.
//!
//! CSV files carry a header `t,x0[,x1],value` (no `t` for stationary fields,
//! an extra `axis` column for fluxes) and rows in lexicographic `(t, x)`
//! order, each number printed with 17 significant digits.
//!
//! Binary files start with a 32-byte header
//!
//! ```text
//! bytes 0..8    magic  b"MFGFLD01"
//! bytes 8..12   kind   u32  (0 node, 1 cell, 2 stationary, 3 flux)
//! bytes 12..16  dim    u32
//! bytes 16..20  n_x    u32
//! bytes 20..24  slices u32
//! bytes 24..32  T      f64
//! ```
//!
//! followed by the values as little-endian `f64` in storage order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::config::ExportFormat;
use crate::error::{MfgError, Result};
use crate::grid::{Grid, Placement, ScalarField, VectorField};

pub const MAGIC: [u8; 8] = *b"MFGFLD01";
pub const HEADER_BYTES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Node,
    Cell,
    Stationary,
    Flux,
}

impl FieldKind {
    fn code(self) -> u32 {
        match self {
            FieldKind::Node => 0,
            FieldKind::Cell => 1,
            FieldKind::Stationary => 2,
            FieldKind::Flux => 3,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => FieldKind::Node,
            1 => FieldKind::Cell,
            2 => FieldKind::Stationary,
            3 => FieldKind::Flux,
            _ => return None,
        })
    }
}

/// Header of a binary field file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldHeader {
    pub kind: FieldKind,
    pub dim: usize,
    pub n_x: usize,
    /// Time slices (1 for stationary fields).
    pub slices: usize,
    pub horizon: f64,
}

impl FieldHeader {
    pub fn len(&self) -> usize {
        let faces = if self.kind == FieldKind::Flux { self.dim } else { 1 };
        self.slices * faces * self.n_x.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Size of a written file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExportSummary {
    pub rows: usize,
    pub bytes: u64,
}

/// Raw view of any exportable field.
struct Table<'a> {
    grid: Grid,
    kind: FieldKind,
    values: &'a [f64],
}

impl Table<'_> {
    fn header(&self) -> FieldHeader {
        let slices = match self.kind {
            FieldKind::Node => self.grid.n_t() + 1,
            FieldKind::Cell | FieldKind::Flux => self.grid.n_t(),
            FieldKind::Stationary => 1,
        };
        FieldHeader {
            kind: self.kind,
            dim: self.grid.dim(),
            n_x: self.grid.n_x(),
            slices,
            horizon: self.grid.horizon(),
        }
    }

    fn time(&self, k: usize) -> f64 {
        match self.kind {
            FieldKind::Node => self.grid.time_node(k),
            _ => self.grid.time_cell_center(k),
        }
    }

    fn write_csv(&self, path: &Path) -> Result<usize> {
        let d = self.grid.dim();
        let n_x = self.grid.n_x();
        let n = self.grid.n_space();
        let mut header: Vec<String> = Vec::new();
        if self.kind != FieldKind::Stationary {
            header.push("t".into());
        }
        header.extend((0..d).map(|a| format!("x{a}")));
        if self.kind == FieldKind::Flux {
            header.push("axis".into());
        }
        header.push("value".into());
        let mut out = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        out.write_record(&header).map_err(csv_error)?;
        let h = self.grid.h_x();
        let faces = if self.kind == FieldKind::Flux { d } else { 1 };
        let mut rows = 0;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for k in 0..self.header().slices {
            // Lexicographic in (x0, x1): x1 varies fastest.
            for lex in 0..n {
                let i = if d == 2 { lex / n_x + n_x * (lex % n_x) } else { lex };
                let x = self.grid.coords(i);
                for axis in 0..faces {
                    record.clear();
                    if self.kind != FieldKind::Stationary {
                        record.push(number(self.time(k)));
                    }
                    for (a, xa) in x.iter().enumerate().take(d) {
                        let shift = if self.kind == FieldKind::Flux && a == axis {
                            0.5 * h
                        } else {
                            0.0
                        };
                        record.push(number(xa + shift));
                    }
                    if self.kind == FieldKind::Flux {
                        record.push(axis.to_string());
                    }
                    record.push(number(self.values[(k * faces + axis) * n + i]));
                    out.write_record(&record).map_err(csv_error)?;
                    rows += 1;
                }
            }
        }
        out.flush()?;
        Ok(rows)
    }

    fn write_binary(&self, path: &Path) -> Result<usize> {
        let header = self.header();
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&MAGIC)?;
        for v in [
            header.kind.code(),
            header.dim as u32,
            header.n_x as u32,
            header.slices as u32,
        ] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&header.horizon.to_le_bytes())?;
        for v in self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(self.values.len())
    }

    fn write(&self, path: &Path, format: ExportFormat) -> Result<ExportSummary> {
        let rows = match format {
            ExportFormat::Csv => self.write_csv(path)?,
            ExportFormat::Binary => self.write_binary(path)?,
        };
        Ok(ExportSummary {
            rows,
            bytes: std::fs::metadata(path)?.len(),
        })
    }
}

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> MfgError {
    MfgError::Io(std::io::Error::other(e.to_string()))
}

/// Writes a time-dependent scalar field.
pub fn export_field(field: &ScalarField, path: &Path, format: ExportFormat) -> Result<ExportSummary> {
    let kind = match field.placement() {
        Placement::TimeNode => FieldKind::Node,
        Placement::TimeCell => FieldKind::Cell,
    };
    Table {
        grid: *field.grid(),
        kind,
        values: field.values(),
    }
    .write(path, format)
}

/// Writes a face flux; CSV rows carry the face-center coordinates and the axis.
pub fn export_flux(field: &VectorField, path: &Path, format: ExportFormat) -> Result<ExportSummary> {
    Table {
        grid: *field.grid(),
        kind: FieldKind::Flux,
        values: field.values(),
    }
    .write(path, format)
}

/// Writes a stationary field of `n_x^d` values, or `d n_x^d` for a flux.
pub fn export_stationary(grid: &Grid, values: &[f64], path: &Path, format: ExportFormat) -> Result<ExportSummary> {
    let n = grid.n_space();
    let grid = grid.with_time(1, grid.horizon())?;
    let kind = if values.len() == n {
        FieldKind::Stationary
    } else if values.len() == n * grid.dim() {
        FieldKind::Flux
    } else {
        return Err(MfgError::ShapeMismatch(format!(
            "{} values do not fit the grid",
            values.len()
        )));
    };
    Table { grid, kind, values }.write(path, format)
}

/// Decodes the contents of a binary field file.
pub fn decode_binary(bytes: &[u8]) -> Result<(FieldHeader, Vec<f64>)> {
    let bad = |msg: &str| MfgError::ShapeMismatch(format!("binary field: {msg}"));
    if bytes.len() < HEADER_BYTES || bytes[..8] != MAGIC {
        return Err(bad("missing header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let header = FieldHeader {
        kind: FieldKind::from_code(word(8) as u32).ok_or_else(|| bad("unknown field kind"))?,
        dim: word(12),
        n_x: word(16),
        slices: word(20),
        horizon: f64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes")),
    };
    let body = &bytes[HEADER_BYTES..];
    if body.len() != 8 * header.len() {
        return Err(bad("payload length does not match the header"));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, values))
}

/// Reads a binary field file.
pub fn import_binary(path: &Path) -> Result<(FieldHeader, Vec<f64>)> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_binary(&bytes)
}

fn scalar_from_parts(header: FieldHeader, values: Vec<f64>) -> Result<ScalarField> {
    let placement = match header.kind {
        FieldKind::Node => Placement::TimeNode,
        FieldKind::Cell => Placement::TimeCell,
        _ => return Err(MfgError::ShapeMismatch("not a time-dependent scalar field".into())),
    };
    let n_t = if placement == Placement::TimeNode {
        header.slices.saturating_sub(1)
    } else {
        header.slices
    };
    let grid = Grid::new(header.dim, header.n_x, n_t, header.horizon)?;
    ScalarField::from_values(grid, placement, values)
}

fn flux_from_parts(header: FieldHeader, values: Vec<f64>) -> Result<VectorField> {
    if header.kind != FieldKind::Flux {
        return Err(MfgError::ShapeMismatch("not a flux".into()));
    }
    let grid = Grid::new(header.dim, header.n_x, header.slices, header.horizon)?;
    VectorField::from_values(grid, values)
}

/// Reads a scalar field written by [`export_field`] in binary form.
pub fn import_field(path: &Path) -> Result<ScalarField> {
    let (header, values) = import_binary(path)?;
    scalar_from_parts(header, values)
}

/// Reads a flux written by [`export_flux`] in binary form.
pub fn import_flux(path: &Path) -> Result<VectorField> {
    let (header, values) = import_binary(path)?;
    flux_from_parts(header, values)
}

/// [`import_field`] on in-memory bytes.
pub fn field_from_bytes(bytes: &[u8]) -> Result<ScalarField> {
    let (header, values) = decode_binary(bytes)?;
    scalar_from_parts(header, values)
}

/// [`import_flux`] on in-memory bytes.
pub fn flux_from_bytes(bytes: &[u8]) -> Result<VectorField> {
    let (header, values) = decode_binary(bytes)?;
    flux_from_parts(header, values)
}

/// Reads a CSV export: the header and the numeric rows.
pub fn import_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| MfgError::ShapeMismatch(format!("{}: bad number {s:?}: {e}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
