use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::DataMatrix;
use crate::error::{Error, Result};

const DMAT_MAGIC: &[u8; 6] = b"DMAT1\n";
const DMAT_HEADER_LEN: usize = 6 + 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Binary: magic `DMAT1\n`, u32 LE rows, u32 LE cols, row-major f64 LE payload.
    Dmat,
    /// Text: one matrix row per line, comma separated. Lines starting with `#` are skipped.
    Csv,
}

impl MatrixFormat {
    /// Picks the format from a file extension, defaulting to dmat.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Dmat,
        }
    }
}

pub fn write_dmat<W: Write>(out: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    let rows = u32::try_from(m.nrows()).expect("row count fits in u32");
    let cols = u32::try_from(m.ncols()).expect("column count fits in u32");
    out.write_all(DMAT_MAGIC)?;
    out.write_all(&rows.to_le_bytes())?;
    out.write_all(&cols.to_le_bytes())?;
    let mut buf = Vec::with_capacity(m.len() * 8);
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            buf.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
    out.write_all(&buf)
}

/// Decodes one dmat block starting at `offset`, returning the matrix and the
/// offset just past it. `path` only labels errors.
pub fn read_dmat(bytes: &[u8], offset: usize, path: &Path) -> Result<(DMatrix<f64>, usize)> {
    let at = |o: usize| format!("byte {o}");
    let header = bytes
        .get(offset..offset + DMAT_HEADER_LEN)
        .ok_or_else(|| Error::parse(path, at(offset), "truncated dmat header"))?;
    if &header[..6] != DMAT_MAGIC {
        return Err(Error::parse(path, at(offset), "bad dmat magic"));
    }
    let rows = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(
            path,
            at(offset + 6),
            format!("empty dimensions {rows}x{cols}"),
        ));
    }
    let start = offset + DMAT_HEADER_LEN;
    let len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::parse(path, at(offset + 6), "dimensions overflow"))?;
    let payload = bytes.get(start..start + len).ok_or_else(|| {
        Error::parse(
            path,
            at(bytes.len()),
            format!(
                "payload holds {} bytes, expected {len} for {rows}x{cols}",
                bytes.len().saturating_sub(start)
            ),
        )
    })?;
    let mut m = DMatrix::zeros(rows, cols);
    for (idx, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::parse(path, at(start + idx * 8), "non-finite value"));
        }
        m[(idx / cols, idx % cols)] = v;
    }
    Ok((m, start + len))
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DataMatrix> {
    match format {
        MatrixFormat::Dmat => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let (m, end) = read_dmat(&bytes, 0, path)?;
            if end != bytes.len() {
                return Err(Error::parse(
                    path,
                    format!("byte {end}"),
                    format!("{} trailing bytes after payload", bytes.len() - end),
                ));
            }
            DataMatrix::samples(m)
        }
        MatrixFormat::Csv => load_csv(path),
    }
}

fn load_csv(path: &Path) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(path, format!("line {line}"), format!("field {j}: cannot parse {field:?}"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(path, format!("line {line}"), format!("field {j}: non-finite value")));
            }
            values.push(v);
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::parse(
                    path,
                    format!("line {line}"),
                    format!("{} fields, expected {c}", record.len()),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::parse(path, "line 1", "no data rows"))?;
    DataMatrix::from_row_major(rows, cols, &values)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let location = e
        .position()
        .map(|p| format!("line {}", p.line()))
        .unwrap_or_else(|| "start".into());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, location, format!("{kind:?}")),
    }
}

pub fn save_matrix(m: &DataMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        MatrixFormat::Dmat => write_dmat(&mut buf, m).map_err(|e| Error::io(path, e))?,
        MatrixFormat::Csv => {
            for r in 0..m.nrows() {
                let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
                buf.extend_from_slice(line.join(",").as_bytes());
                buf.push(b'\n');
            }
        }
    }
    write_atomic(path, &buf)
}

/// Reads a labels file: line `i` holds the comma-separated 0-based classes of sample `i`.
pub fn load_labels(path: &Path) -> Result<Vec<Vec<usize>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut sets = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut set = Vec::new();
        if !line.is_empty() {
            for field in line.split(',') {
                let c: usize = field.trim().parse().map_err(|_| {
                    Error::parse(path, format!("line {}", i + 1), format!("bad class index {field:?}"))
                })?;
                set.push(c);
            }
        }
        set.sort_unstable();
        set.dedup();
        sets.push(set);
    }
    Ok(sets)
}

pub fn save_labels(path: &Path, sets: &[Vec<usize>]) -> Result<()> {
    let mut buf = String::new();
    for set in sets {
        let fields: Vec<String> = set.iter().map(|c| c.to_string()).collect();
        buf.push_str(&fields.join(","));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

/// Writes through a temporary file in the destination directory, then renames.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dmat_bytes(rows: u32, cols: u32, payload: &[f64]) -> Vec<u8> {
        let mut b = DMAT_MAGIC.to_vec();
        b.extend_from_slice(&rows.to_le_bytes());
        b.extend_from_slice(&cols.to_le_bytes());
        for v in payload {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    #[test]
    fn dmat_reads_row_major() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.dmat");
        fs::write(&p, dmat_bytes(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        let m = load_matrix(&p, MatrixFormat::Dmat).unwrap();
        assert_eq!(m.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn dmat_short_payload_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.dmat");
        fs::write(&p, dmat_bytes(2, 2, &[1.0, 2.0, 3.0])).unwrap();
        let err = load_matrix(&p, MatrixFormat::Dmat).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(err.to_string().contains("byte"));
    }

    #[test]
    fn dmat_rejects_bad_magic_and_nan() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.dmat");
        let mut b = dmat_bytes(1, 1, &[1.0]);
        b[0] = b'X';
        fs::write(&p, &b).unwrap();
        assert!(load_matrix(&p, MatrixFormat::Dmat).is_err());
        fs::write(&p, dmat_bytes(1, 2, &[1.0, f64::INFINITY])).unwrap();
        let err = load_matrix(&p, MatrixFormat::Dmat).unwrap_err();
        assert!(err.to_string().contains("byte 22"), "{err}");
    }

    #[test]
    fn csv_parses_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "1.5,2.0\n3.0,4.0").unwrap();
        let m = load_matrix(&p, MatrixFormat::Csv).unwrap();
        assert_eq!(m.matrix(), &DMatrix::from_row_slice(2, 2, &[1.5, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn csv_header_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "#a,b\n1,2\n").unwrap();
        assert_eq!(load_matrix(&p, MatrixFormat::Csv).unwrap().shape(), (1, 2));
        fs::write(&p, "1,2\n3,x\n").unwrap();
        let err = load_matrix(&p, MatrixFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(load_matrix(&p, MatrixFormat::Csv).is_err());
        fs::write(&p, "1,NaN\n").unwrap();
        assert!(load_matrix(&p, MatrixFormat::Csv).is_err());
    }

    #[test]
    fn csv_identity_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.csv");
        let id = DataMatrix::samples(DMatrix::identity(4, 4)).unwrap();
        save_matrix(&id, &p, MatrixFormat::Csv).unwrap();
        let back = load_matrix(&p, MatrixFormat::Csv).unwrap();
        for (a, b) in id.iter().zip(back.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn dmat_save_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let m = DataMatrix::samples(DMatrix::from_fn(3, 5, |r, c| (r * 5 + c) as f64 / 7.0)).unwrap();
        let a = dir.path().join("a.dmat");
        let b = dir.path().join("b.dmat");
        save_matrix(&m, &a, MatrixFormat::Dmat).unwrap();
        let back = load_matrix(&a, MatrixFormat::Dmat).unwrap();
        save_matrix(&back, &b, MatrixFormat::Dmat).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }

    #[test]
    fn unwritable_path_errors() {
        let m = DataMatrix::samples(DMatrix::identity(2, 2)).unwrap();
        let err = save_matrix(&m, Path::new("/nonexistent-dir/x/m.dmat"), MatrixFormat::Dmat);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        fs::write(&p, "0\n2,1\n1\n").unwrap();
        let sets = load_labels(&p).unwrap();
        assert_eq!(sets, vec![vec![0], vec![1, 2], vec![1]]);
        save_labels(&p, &sets).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "0\n1,2\n1\n");
        fs::write(&p, "0\n-1\n").unwrap();
        assert!(load_labels(&p).is_err());
    }

    proptest! {
        #[test]
        fn dmat_round_trip_bit_exact(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in proptest::collection::vec(-1e300f64..1e300, 36),
        ) {
            let m = DMatrix::from_fn(rows, cols, |r, c| seed[r * 6 + c]);
            let mut buf = Vec::new();
            write_dmat(&mut buf, &m).unwrap();
            let (back, end) = read_dmat(&buf, 0, Path::new("mem")).unwrap();
            prop_assert_eq!(end, buf.len());
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
