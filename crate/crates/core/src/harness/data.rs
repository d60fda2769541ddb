use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::ReturnVector;

/// Reads price relatives with header `asset_1,...,asset_d`, normalizing each row by its maximum.
pub fn read_returns_from<R: Read>(reader: R) -> Result<Vec<ReturnVector>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let d = header.len();
    if d < 2 {
        return Err(Error::Data(format!("need at least 2 asset columns, found {d}")));
    }
    for (i, name) in header.iter().enumerate() {
        if name != format!("asset_{}", i + 1) {
            return Err(Error::Data(format!("column {} is named {name:?}, expected asset_{}", i + 1, i + 1)));
        }
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let raw = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Data(format!("row {}: {s:?}: {e}", line + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if raw.len() != d {
            return Err(Error::Data(format!("row {} has {} values, expected {d}", line + 1, raw.len())));
        }
        rows.push(ReturnVector::normalized(raw).map_err(|e| Error::Data(format!("row {}: {e}", line + 1)))?);
    }
    if rows.is_empty() {
        return Err(Error::Data("no rows".into()));
    }
    Ok(rows)
}

pub fn read_returns(path: impl AsRef<Path>) -> Result<Vec<ReturnVector>> {
    read_returns_from(File::open(path)?)
}

/// Writes rows using the shortest representation that parses back to the same value.
pub fn write_returns_to<W: Write>(writer: W, rows: &[ReturnVector]) -> Result<()> {
    let d = rows.first().ok_or_else(|| Error::Data("no rows to write".into()))?.dim();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record((1..=d).map(|i| format!("asset_{i}")))?;
    for r in rows {
        if r.dim() != d {
            return Err(Error::Data("rows have different lengths".into()));
        }
        wtr.write_record(r.as_slice().iter().map(|x| format!("{x}")))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_returns(path: impl AsRef<Path>, rows: &[ReturnVector]) -> Result<()> {
    write_returns_to(File::create(path)?, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_normalized_on_read() {
        let text = "asset_1,asset_2\n2.0,1.0\n0.5,0.25\n1,4\n";
        let rows = read_returns_from(text.as_bytes()).unwrap();
        assert_eq!(rows[0].as_slice(), &[1.0, 0.5]);
        assert_eq!(rows[1].as_slice(), &[1.0, 0.5]);
        assert_eq!(rows[2].as_slice(), &[0.25, 1.0]);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(read_returns_from("a,b\n1,1\n".as_bytes()).is_err());
        assert!(read_returns_from("asset_1,asset_2\n0,0\n".as_bytes()).is_err());
        assert!(read_returns_from("asset_1,asset_2\n1,x\n".as_bytes()).is_err());
        assert!(read_returns_from("asset_1,asset_2\n".as_bytes()).is_err());
    }
}
