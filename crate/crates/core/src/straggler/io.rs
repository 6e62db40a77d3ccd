//! CSV formats: one row per round, one column per worker, with an optional
//! `round,w0,...,w{n-1}` header (a header implies a leading round column).

use std::io::{Read, Write};

use super::{DelayProfile, StragglerPattern};
use crate::{Error, Result};

fn read_rows<R: Read>(reader: R) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    let Some(first) = rows.first() else {
        return Ok(rows);
    };
    if first
        .first()
        .is_some_and(|c| c.eq_ignore_ascii_case("round"))
    {
        rows.remove(0);
        for r in &mut rows {
            r.remove(0);
        }
    }
    Ok(rows)
}

fn width(rows: &[Vec<String>]) -> Result<usize> {
    let n = rows.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::Parse("no worker columns".into()));
    }
    if let Some((t, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Parse(format!(
            "row {} has {} columns, expected {n}",
            t + 1,
            r.len()
        )));
    }
    Ok(n)
}

pub fn read_pattern<R: Read>(reader: R) -> Result<StragglerPattern> {
    let rows = read_rows(reader)?;
    let n = width(&rows)?;
    let columns = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| match c.as_str() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::Parse(format!(
                        "pattern entry {other:?} is not 0 or 1"
                    ))),
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    StragglerPattern::from_columns(n, columns)
}

pub fn read_profile<R: Read>(reader: R) -> Result<DelayProfile> {
    let rows = read_rows(reader)?;
    let n = width(&rows)?;
    let times = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{c:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    DelayProfile::new(n, times).map_err(|e| Error::Parse(e.to_string()))
}

fn header(n: usize) -> Vec<String> {
    std::iter::once("round".to_string())
        .chain((0..n).map(|i| format!("w{i}")))
        .collect()
}

pub fn write_pattern<W: Write>(writer: W, p: &StragglerPattern) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(header(p.n())).map_err(io)?;
    for t in 1..=p.rounds() {
        let row = std::iter::once(t.to_string())
            .chain(p.column(t).iter().map(|&s| u8::from(s).to_string()));
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_profile<W: Write>(writer: W, p: &DelayProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(header(p.n())).map_err(io)?;
    for t in 1..=p.rounds() {
        let row =
            std::iter::once(t.to_string()).chain(p.round_times(t).iter().map(|v| v.to_string()));
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_with_and_without_header() {
        let plain = "0,1,0\n1,0,0\n";
        let p = read_pattern(plain.as_bytes()).unwrap();
        assert_eq!(p.n(), 3);
        assert!(p.is_straggler(1, 1) && p.is_straggler(0, 2));

        let mut buf = Vec::new();
        write_pattern(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("round,w0,w1,w2\n1,0,1,0\n"));
        assert_eq!(read_pattern(text.as_bytes()).unwrap(), p);
    }

    #[test]
    fn profile_parse_errors() {
        assert!(read_profile("1.0,2.0\n1.0\n".as_bytes()).is_err());
        assert!(read_profile("1.0,abc\n".as_bytes()).is_err());
        assert!(read_profile("1.0,-2\n".as_bytes()).is_err());
        assert!(read_pattern("0,2\n".as_bytes()).is_err());
        let p = read_profile("round,w0,w1\n1,1.5,2.5\n2,1.0,1.25\n".as_bytes()).unwrap();
        assert_eq!(p.time(1, 2), 1.25);
    }
}
