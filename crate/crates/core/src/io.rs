//! Plain-text formats.
//!
//! - Dataset CSV: header `y,x1,...,xp`, one sample per row.
//! - Vector CSV: header `value`, one entry per row.
//! - Index lists: one 1-based index per line.
//! - Mask: first line `nx ny nz`, then `nx*ny*nz` whitespace-separated 0/1
//!   flags in x-fastest order.
//! - Operator COO: one `row col value` triple per line, 1-based.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! finite `f64` exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm_loss::Dataset;
use crate::grid_graph::{DifferenceOperator, VoxelGrid};

/// Formats a float so that parsing it back gives the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, line, format!("{other:?}")),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("not a number: {field:?}")))
}

pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let mut header = vec!["y".to_string()];
    header.extend((1..=data.p()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for i in 0..data.n() {
        let mut row = vec![format_f64(data.y[i])];
        row.extend(data.x.row(i).iter().map(|&v| format_f64(v)));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(Error::parse(path, 1, "empty file"));
    }
    if header[0].trim() != "y" {
        return Err(Error::parse(path, 1, "first column must be `y`"));
    }
    let p = header.len() - 1;
    if p == 0 {
        return Err(Error::parse(path, 1, "no feature columns"));
    }
    let mut ys = Vec::new();
    let mut xs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != p + 1 {
            return Err(Error::parse(path, line, format!("expected {} fields, found {}", p + 1, record.len())));
        }
        ys.push(parse_f64(path, line, &record[0])?);
        for field in record.iter().skip(1) {
            xs.push(parse_f64(path, line, field)?);
        }
    }
    if ys.is_empty() {
        return Err(Error::parse(path, 1, "no samples"));
    }
    let n = ys.len();
    Dataset::new(DMatrix::from_row_slice(n, p, &xs), DVector::from_vec(ys))
}

pub fn write_vector(path: impl AsRef<Path>, v: &DVector<f64>) -> Result<()> {
    let mut text = String::from("value\n");
    for &x in v.iter() {
        text.push_str(&format_f64(x));
        text.push('\n');
    }
    write_text(path.as_ref(), &text)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "value" => {}
        _ => return Err(Error::parse(path, 1, "expected header `value`")),
    }
    let values = lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_f64(path, i + 1, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(values))
}

/// Writes 0-based indices as 1-based lines.
pub fn write_index_list(path: impl AsRef<Path>, indices: &[usize]) -> Result<()> {
    let text: String = indices.iter().map(|i| format!("{}\n", i + 1)).collect();
    write_text(path.as_ref(), &text)
}

/// Reads 1-based lines back as 0-based indices.
pub fn read_index_list(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(Error::parse(path, i + 1, format!("not a 1-based index: {l:?}"))),
        })
        .collect()
}

pub fn write_mask(path: impl AsRef<Path>, grid: &VoxelGrid) -> Result<()> {
    let (nx, ny, nz) = grid.dims();
    let mut text = format!("{nx} {ny} {nz}\n");
    for row in grid.mask().chunks(nx) {
        let line: Vec<&str> = row.iter().map(|&m| if m { "1" } else { "0" }).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    write_text(path.as_ref(), &text)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<VoxelGrid> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty mask file"))?;
    let dims: Vec<usize> = first
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, 1, "expected `nx ny nz`"))?;
    if dims.len() != 3 {
        return Err(Error::parse(path, 1, "expected `nx ny nz`"));
    }
    let mut mask = Vec::with_capacity(dims.iter().product());
    for (i, line) in lines {
        for token in line.split_whitespace() {
            mask.push(match token {
                "1" => true,
                "0" => false,
                _ => return Err(Error::parse(path, i + 1, format!("mask flag must be 0 or 1, got {token:?}"))),
            });
        }
    }
    VoxelGrid::new((dims[0], dims[1], dims[2]), mask)
}

pub fn write_operator_coo(path: impl AsRef<Path>, op: &DifferenceOperator) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in 0..op.rows() {
        for (c, v) in op.row(r) {
            writeln!(w, "{} {} {}", r + 1, c + 1, format_f64(v)).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
