//! Planar trajectory logs as CSV.
//!
//! Numbers are written with 17 significant digits, so reading a written log
//! back reproduces every row bit for bit.

use std::io::{Read, Write};

use super::LogRow;
use crate::error::{Error, Result};
use crate::geometry::Vector;

pub const CSV_HEADER: [&str; 12] = [
    "t", "px", "py", "vx", "vy", "vdes_x", "vdes_y", "vstar_x", "vstar_y", "h", "clearance", "intervened",
];

fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // "inf", "-inf" and "NaN" parse back as themselves
        v.to_string()
    }
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::invalid("csv", e.to_string())
}

pub fn write_csv<W: Write>(rows: &[LogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        if r.position.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: r.position.dim(),
            });
        }
        let mut record: Vec<String> = [&r.position, &r.velocity, &r.v_des, &r.v_star]
            .iter()
            .flat_map(|v| [number(v.x()), number(v.y())])
            .collect();
        record.insert(0, number(r.t));
        record.extend([number(r.h), number(r.clearance), u8::from(r.intervened).to_string()]);
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

pub fn csv_string(rows: &[LogRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::invalid(
            "csv",
            format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        ));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::invalid("csv", format!("row {}: bad {} {:?}", line + 1, CSV_HEADER[i], &record[i])))
        };
        let pair = |i: usize| -> Result<Vector> { Ok(Vector::xy(field(i)?, field(i + 1)?)) };
        let intervened = match &record[11] {
            "0" => false,
            "1" => true,
            other => return Err(Error::invalid("csv", format!("row {}: bad intervened {other:?}", line + 1))),
        };
        rows.push(LogRow {
            t: field(0)?,
            position: pair(1)?,
            velocity: pair(3)?,
            v_des: pair(5)?,
            v_star: pair(7)?,
            h: field(9)?,
            clearance: field(10)?,
            intervened,
        });
    }
    Ok(rows)
}
