//! CSV formats: point clouds, samples and evaluation grids.
//!
//! Point and sample files have one row per point and a header `x1,..,xn`.
//! Grid files have header `x1,..,xn,p,indicator` (plus `in_set` when a set
//! is given), rows in row-major order with the last coordinate fastest,
//! `indicator = 1` when `p(x) >= 1`.

use std::io::{Read, Write};

use crate::approx::{grid_len, grid_point, SemialgSet};
use crate::error::{check_dim, Error, Result};
use crate::moments::BoundingBox;
use crate::poly::MultiPoly;

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

/// Reads points, skipping a header row if its first field is not a number.
pub fn read_points<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(x) => {
                if let Some(first) = out.first() {
                    check_dim(first.len(), x.len())?;
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("row {}: non-finite coordinate", i + 1)));
                }
                out.push(x)
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::invalid(format!("row {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

fn header(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

pub fn write_points<W: Write>(writer: W, points: &[Vec<f64>]) -> Result<()> {
    let n = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(n)).map_err(csv_err)?;
    for x in points {
        w.write_record(x.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub x: Vec<f64>,
    pub p: f64,
    pub in_set: Option<bool>,
}

impl GridRow {
    pub fn indicator(&self) -> bool {
        self.p >= 1.0
    }
}

/// Evaluates `p` on a `resolution^n` grid over `b`.
pub fn eval_grid(p: &MultiPoly, b: &BoundingBox, resolution: usize, set: Option<&SemialgSet>) -> Result<Vec<GridRow>> {
    check_dim(b.dim(), p.dim())?;
    if resolution < 2 {
        return Err(Error::invalid("grid resolution must be at least 2"));
    }
    if let Some(k) = set {
        check_dim(b.dim(), k.dim())?;
    }
    use rayon::prelude::*;
    Ok((0..grid_len(b.dim(), resolution))
        .into_par_iter()
        .map(|i| {
            let x = grid_point(b, resolution, i);
            GridRow {
                p: p.eval_unchecked(&x),
                in_set: set.map(|k| k.contains(&x)),
                x,
            }
        })
        .collect())
}

pub fn write_grid<W: Write>(writer: W, rows: &[GridRow]) -> Result<()> {
    let n = rows.first().map_or(0, |r| r.x.len());
    let with_set = rows.first().is_some_and(|r| r.in_set.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut h = header(n);
    h.push("p".into());
    h.push("indicator".into());
    if with_set {
        h.push("in_set".into());
    }
    w.write_record(&h).map_err(csv_err)?;
    for r in rows {
        let mut rec: Vec<String> = r.x.iter().map(|v| v.to_string()).collect();
        rec.push(r.p.to_string());
        rec.push((r.indicator() as u8).to_string());
        if let Some(s) = r.in_set {
            rec.push((s as u8).to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
