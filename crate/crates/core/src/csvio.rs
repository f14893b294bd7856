//! Point files: one point per line, comma separated, with an optional header
//! line that is recognized by not parsing as numbers.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::StateVector;

pub fn read_points<R: Read>(reader: R) -> Result<StateVector> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(None)
        .from_reader(reader);
    let mut dim = None;
    let mut coords = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    message: format!("not a number: {e}"),
                })
            }
        };
        first = false;
        if let Some(bad) = row.iter().find(|x| !x.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {bad}"),
            });
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {d} fields, found {}", row.len()),
                })
            }
            _ => {}
        }
        coords.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::invalid("input holds no points"))?;
    StateVector::new(dim, coords)
}

pub fn read_points_file(path: &Path) -> Result<StateVector> {
    read_points(File::open(path)?)
}

pub fn write_points<W: Write>(writer: W, state: &StateVector) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for p in state.points() {
        w.write_record(p.coords.iter().map(f64::to_string))
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points_file(path: &Path, state: &StateVector) -> Result<()> {
    write_points(File::create(path)?, state)
}

/// One label per line under a `label` header.
pub fn write_labels<W: Write>(mut writer: W, labels: &[i64]) -> Result<()> {
    writeln!(writer, "label")?;
    for l in labels {
        writeln!(writer, "{l}")?;
    }
    Ok(())
}

/// Writes `step_000.csv`, `step_001.csv`, ... into `dir`, creating it.
pub fn write_snapshots(dir: &Path, states: &[StateVector]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    states
        .iter()
        .enumerate()
        .map(|(t, s)| {
            let path = dir.join(format!("step_{t:03}.csv"));
            write_points_file(&path, s)?;
            Ok(path)
        })
        .collect()
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let a = read_points("x,y\n1,2\n3.5,-4\n".as_bytes()).unwrap();
        let b = read_points("1,2\n3.5,-4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 2);
        assert_eq!(a.row(1), &[3.5, -4.0]);
    }

    #[test]
    fn bad_rows_name_their_line() {
        match read_points("x,y\n1,2\n3,oops\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read_points("1,2\n3\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(read_points("a,b\n".as_bytes()).is_err());
        assert!(read_points("1,NaN\n".as_bytes()).is_err());
    }

    #[test]
    fn wide_rows_are_fine() {
        let line: Vec<String> = (0..40).map(|i| i.to_string()).collect();
        let s = read_points(format!("{}\n", line.join(",")).as_bytes()).unwrap();
        assert_eq!(s.dim(), 40);
    }

    #[test]
    fn written_points_read_back_exactly() {
        let s = StateVector::from_rows(&[[0.1, 1e-300], [-3.25, 123456.789012345]]).unwrap();
        let mut buf = Vec::new();
        write_points(&mut buf, &s).unwrap();
        assert_eq!(read_points(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn snapshots_are_numbered() {
        let dir = std::env::temp_dir().join(format!("synclust-snap-{}", std::process::id()));
        let s = StateVector::from_rows(&[[1.0]]).unwrap();
        let paths = write_snapshots(&dir, &[s.clone(), s]).unwrap();
        assert!(paths[1].ends_with("step_001.csv"));
        assert!(paths.iter().all(|p| p.exists()));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
