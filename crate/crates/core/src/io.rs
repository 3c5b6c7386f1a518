//! CSV and JSON serialization of grid functions and reports.
//!
//! Every real number is written with 17 significant digits (`{:.16e}`) so
//! that values round-trip exactly and output files are byte-stable.

use std::io::{Read, Write};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{DiscreteFunction, Grid};

/// `{:.16e}` formatting; negative zero is written as `0`.
pub fn format_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Serializes a finite `f64` as a JSON number with 17 significant digits and
/// a non-finite one as `null`.
pub fn serialize_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        let n: serde_json::Number = format_f64(*x).parse().map_err(serde::ser::Error::custom)?;
        n.serialize(s)
    } else {
        s.serialize_none()
    }
}

pub fn serialize_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => serialize_f64(v, s),
        None => s.serialize_none(),
    }
}

pub fn serialize_f64_slice<S: Serializer, T: AsRef<[f64]>>(xs: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    let xs = xs.as_ref();
    use serde::ser::SerializeSeq;
    struct Num(f64);
    impl Serialize for Num {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            serialize_f64(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&Num(x))?;
    }
    seq.end()
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes `x[,y],interior,value` rows for every node in grid order.
pub fn write_function_csv<W: Write>(grid: &Grid, u: &DiscreteFunction, out: W) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), got: u.len() });
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    if grid.dim() == 1 {
        w.write_record(["x", "interior", "value"]).map_err(csv_err)?;
    } else {
        w.write_record(["x", "y", "interior", "value"]).map_err(csv_err)?;
    }
    for (i, x) in grid.nodes().iter().enumerate() {
        let flag = if grid.is_interior(i) { "1" } else { "0" };
        let mut row = vec![format_f64(x[0])];
        if grid.dim() == 2 {
            row.push(format_f64(x[1]));
        }
        row.push(flag.to_string());
        row.push(format_f64(u.get(i)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_function_csv`] back onto `grid`, checking
/// that coordinates and interior flags match.
pub fn read_function_csv<R: Read>(grid: &Grid, input: R, far_field: Option<f64>) -> Result<DiscreteFunction> {
    let mut r = csv::Reader::from_reader(input);
    let expected_cols = grid.dim() + 2;
    let headers = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.len() != expected_cols {
        return Err(Error::GridMismatch(format!("expected {expected_cols} columns, found {}", headers.len())));
    }
    let tol = 1e-9 * grid.spacing();
    let mut values = Vec::with_capacity(grid.len());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if i >= grid.len() {
            return Err(Error::GridMismatch(format!("more than {} rows", grid.len())));
        }
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Parse(format!("row {i}: missing column {k}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {i}: {e}")))
        };
        let node = grid.node(i);
        for k in 0..grid.dim() {
            if (num(k)? - node[k]).abs() > tol {
                return Err(Error::GridMismatch(format!("row {i}: coordinate {k} does not match the grid")));
            }
        }
        let flag = num(grid.dim())?;
        if (flag != 0.0) != grid.is_interior(i) {
            return Err(Error::GridMismatch(format!("row {i}: interior flag does not match the grid")));
        }
        values.push(num(grid.dim() + 1)?);
    }
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!("expected {} rows, found {}", grid.len(), values.len())));
    }
    DiscreteFunction::new(grid, values, far_field)
}

/// Writes a header and rows of already formatted cells.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
