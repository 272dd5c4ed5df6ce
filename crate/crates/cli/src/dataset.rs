//! CSV dataset I/O: one record per line, comma-separated decimals with a
//! `.` decimal point, features first and the label (if any) last.

use std::io::{BufRead, Write};

use sensikit::{Error, Record, Result};

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<Record>> {
    let mut records = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let record: Record = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Parse("dataset holds no records".into()));
    }
    let width = records[0].len();
    if let Some(bad) = records.iter().find(|r| r.len() != width) {
        return Err(Error::DimensionMismatch { expected: width, got: bad.len() });
    }
    Ok(records)
}

pub fn write_records<W: Write>(mut w: W, records: &[Record]) -> Result<()> {
    for record in records {
        let line =
            record.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let records = vec![vec![0.25, 1.0], vec![0.5, -1.0]];
        let mut bytes = Vec::new();
        write_records(&mut bytes, &records).unwrap();
        assert_eq!(read_records(&bytes[..]).unwrap(), records);
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let text = "# header\n0.1,2\n\n0.3,4\n";
        assert_eq!(
            read_records(text.as_bytes()).unwrap(),
            vec![vec![0.1, 2.0], vec![0.3, 4.0]]
        );
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(read_records("1,2\n3\n".as_bytes()).is_err());
        assert!(read_records("".as_bytes()).is_err());
    }
}
