//! CSV formats for observations and dense matrices.
//!
//! Observation CSV: optional header row of column names, then one sample per
//! row, comma-separated decimal values. A first row that does not parse as
//! numbers is taken as the header. Ragged rows are rejected.
//!
//! Matrix CSV: a `# p=<n> family=<f>` line followed by `p` rows of `p`
//! values.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stat::{ObservationMatrix, PrecisionModel};

fn csv_error(origin: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(origin, line, e.to_string())
}

pub fn parse_observations<R: Read>(reader: R, origin: &Path) -> Result<ObservationMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut names = None;
    let mut data = Vec::new();
    let mut n_cols = 0;
    let mut n_rows = 0;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(origin, e))?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if idx == 0 {
            n_cols = record.len();
            if record.iter().any(|f| f.parse::<f64>().is_err()) {
                names = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
                continue;
            }
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(origin, line, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(origin, line, format!("non-finite value {field:?}")));
            }
            data.push(v);
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::parse(origin, 1, "no observations"));
    }
    let m = ObservationMatrix::new(n_rows, n_cols, data).map_err(|e| Error::parse(origin, 0, e.to_string()))?;
    match names {
        Some(names) => m
            .with_column_names(names)
            .map_err(|e| Error::parse(origin, 1, e.to_string())),
        None => Ok(m),
    }
}

pub fn read_observations(path: &Path) -> Result<ObservationMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_observations(std::io::BufReader::new(file), path)
}

/// Serializes with a header row (`x0, x1, …` when the matrix has no names)
/// and shortest round-trip decimal values.
pub fn observations_to_csv(data: &ObservationMatrix) -> String {
    let mut out = String::new();
    match data.column_names() {
        Some(names) => out.push_str(&names.join(",")),
        None => out.push_str(
            &(0..data.n_cols())
                .map(|c| format!("x{c}"))
                .collect::<Vec<_>>()
                .join(","),
        ),
    }
    out.push('\n');
    for row in data.rows() {
        write_row(&mut out, row.iter().copied());
    }
    out
}

fn write_row(out: &mut String, values: impl Iterator<Item = f64>) {
    for (c, v) in values.enumerate() {
        if c > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

pub fn write_observations(data: &ObservationMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, observations_to_csv(data)).map_err(|e| Error::io(path, e))
}

pub fn matrix_to_csv(m: &DMatrix<f64>, family: &str) -> String {
    let mut out = format!("# p={} family={family}\n", m.nrows());
    for r in 0..m.nrows() {
        write_row(&mut out, m.row(r).iter().copied());
    }
    out
}

pub fn write_precision(model: &PrecisionModel, family: &str, path: &Path) -> Result<()> {
    std::fs::write(path, matrix_to_csv(model.theta(), family)).map_err(|e| Error::io(path, e))
}

/// Parses the matrix CSV; returns the matrix and the `family` tag.
pub fn parse_matrix(text: &str, origin: &Path) -> Result<(DMatrix<f64>, String)> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let mut p = None;
    let mut family = String::new();
    for tok in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = tok.strip_prefix("p=") {
            p = v.parse::<usize>().ok();
        } else if let Some(v) = tok.strip_prefix("family=") {
            family = v.to_string();
        }
    }
    let p = p
        .filter(|_| header.starts_with('#'))
        .ok_or_else(|| Error::parse(origin, 1, "expected '# p=<n> family=<f>' header"))?;
    let mut values = Vec::with_capacity(p * p);
    let mut rows = 0;
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, no + 2, format!("not a number: {field:?}")))?;
            values.push(v);
        }
        if values.len() - before != p {
            return Err(Error::parse(origin, no + 2, format!("expected {p} values")));
        }
        rows += 1;
    }
    if rows != p {
        return Err(Error::parse(origin, 1, format!("expected {p} rows, found {rows}")));
    }
    Ok((DMatrix::from_row_slice(p, p, &values), family))
}

pub fn read_precision(path: &Path) -> Result<PrecisionModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (theta, _) = parse_matrix(&text, path)?;
    PrecisionModel::from_precision(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_chain;

    fn origin() -> &'static Path {
        Path::new("<test>")
    }

    #[test]
    fn header_detection() {
        let m = parse_observations("a,b\n1,2\n3,4.5\n".as_bytes(), origin()).unwrap();
        assert_eq!(m.column_names().unwrap(), ["a", "b"]);
        assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0, 4.5]);
        let m = parse_observations("1,2\n3,4\n".as_bytes(), origin()).unwrap();
        assert!(m.column_names().is_none());
        assert_eq!(m.n_rows(), 2);
    }

    #[test]
    fn rejects_bad_observations() {
        assert!(parse_observations("1,2\n3\n".as_bytes(), origin()).is_err());
        assert!(parse_observations("a,b\n1,x\n".as_bytes(), origin()).is_err());
        assert!(parse_observations("a,b\n".as_bytes(), origin()).is_err());
        assert!(parse_observations("a,a\n1,2\n".as_bytes(), origin()).is_err());
        assert!(parse_observations("1,NaN\n".as_bytes(), origin()).is_err());
    }

    #[test]
    fn observations_round_trip() {
        let m = ObservationMatrix::from_rows(&[vec![0.1, -2.5e-7], vec![1.0 / 3.0, 1e10]]).unwrap();
        let text = observations_to_csv(&m);
        assert!(text.starts_with("x0,x1\n"));
        let back = parse_observations(text.as_bytes(), origin()).unwrap();
        assert_eq!(back.as_slice(), m.as_slice());
    }

    #[test]
    fn matrix_round_trip() {
        let m = generate_chain(4, 0.9).unwrap();
        let text = matrix_to_csv(m.theta(), "chain");
        assert!(text.starts_with("# p=4 family=chain\n"));
        let (back, family) = parse_matrix(&text, origin()).unwrap();
        assert_eq!(&back, m.theta());
        assert_eq!(family, "chain");
        assert!(parse_matrix("1,2\n", origin()).is_err());
        assert!(parse_matrix("# p=2 family=x\n1,0\n", origin()).is_err());
    }
}
