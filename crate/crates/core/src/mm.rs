//! Matrix Market coordinate I/O.
//!
//! The reader accepts `real` coordinate files with `general` or
//! `symmetric` storage; symmetric files must store the lower triangle and
//! are expanded to full storage on read. Every rejection names the 1-based
//! line it came from. The writer always emits `general` storage with
//! shortest round-trip decimal values, so write -> read reproduces the
//! matrix exactly, stored zeros included.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use std::fs;
use std::io::Write;
use std::path::Path;

fn fail(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::MatrixMarket {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Writes `a` in Matrix Market coordinate format.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &CsrMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", a.n_rows, a.n_cols, a.nnz()));
    for i in 0..a.n_rows {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            out.push_str(&format!("{} {} {}\n", i + 1, j + 1, v));
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a Matrix Market coordinate file.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(path, 1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(fail(path, 1, "expected '%%MatrixMarket matrix coordinate real <symmetry>' header"));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") || !fields[2].eq_ignore_ascii_case("coordinate") {
        return Err(fail(path, 1, "only coordinate matrices are supported"));
    }
    if !fields[3].eq_ignore_ascii_case("real") {
        return Err(fail(
            path,
            1,
            format!("unsupported field type {:?}, expected real", fields[3]),
        ));
    }
    let symmetric = if fields[4].eq_ignore_ascii_case("general") {
        false
    } else if fields[4].eq_ignore_ascii_case("symmetric") {
        true
    } else {
        return Err(fail(
            path,
            1,
            format!("unsupported symmetry {:?}, expected general or symmetric", fields[4]),
        ));
    };

    // Size line: first non-comment, non-blank line after the header.
    let mut size_line = None;
    for (no, line) in &mut lines {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some((no, trimmed.to_string()));
        break;
    }
    let (size_no, size_text) =
        size_line.ok_or_else(|| fail(path, 1, "missing size line"))?;
    let dims: Vec<&str> = size_text.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(fail(path, size_no, "size line must be 'rows cols nnz'"));
    }
    let parse_dim = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| fail(path, size_no, format!("invalid size field {s:?}")))
    };
    let n_rows = parse_dim(dims[0])?;
    let n_cols = parse_dim(dims[1])?;
    let declared = parse_dim(dims[2])?;

    let mut triplets: Vec<(usize, usize, f64, usize)> = Vec::with_capacity(declared);
    for (no, line) in &mut lines {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if triplets.len() == declared {
            return Err(fail(
                path,
                no,
                format!("more than the declared {declared} entries"),
            ));
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(fail(path, no, "entry line must be 'row col value'"));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| fail(path, no, format!("invalid row index {:?}", parts[0])))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|_| fail(path, no, format!("invalid column index {:?}", parts[1])))?;
        let v: f64 = parts[2]
            .parse()
            .map_err(|_| fail(path, no, format!("invalid value {:?}", parts[2])))?;
        if i < 1 || i > n_rows {
            return Err(fail(path, no, format!("row index {i} out of range 1..={n_rows}")));
        }
        if j < 1 || j > n_cols {
            return Err(fail(path, no, format!("column index {j} out of range 1..={n_cols}")));
        }
        if !v.is_finite() {
            return Err(fail(path, no, format!("non-finite value {v}")));
        }
        if symmetric && j > i {
            return Err(fail(
                path,
                no,
                format!("symmetric storage requires the lower triangle, got ({i}, {j})"),
            ));
        }
        triplets.push((i - 1, j - 1, v, no));
    }
    if triplets.len() != declared {
        return Err(fail(
            path,
            text.lines().count(),
            format!("expected {declared} entries, found {}", triplets.len()),
        ));
    }

    // Detect duplicates before any symmetric expansion so the offending
    // source line can be reported.
    let mut seen: Vec<(usize, usize, usize)> =
        triplets.iter().map(|&(i, j, _, no)| (i, j, no)).collect();
    seen.sort_unstable();
    for w in seen.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
            return Err(fail(
                path,
                w[1].2,
                format!("duplicate entry ({}, {})", w[1].0 + 1, w[1].1 + 1),
            ));
        }
    }

    let mut full: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len() * 2);
    for &(i, j, v, _) in &triplets {
        full.push((i, j, v));
        if symmetric && i != j {
            full.push((j, i, v));
        }
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn identity_round_trips_exactly() {
        let a = CsrMatrix::from_dense(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_matrix_market(f.path(), &a).unwrap();
        assert_eq!(read_matrix_market(f.path()).unwrap(), a);
    }

    #[test]
    fn symmetric_storage_expands() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real symmetric\n\
             % lower triangle of a 2x2 stencil\n\
             2 2 3\n\
             1 1 2\n\
             2 1 -1\n\
             2 2 2\n",
        );
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.get(0, 1), Some(-1.0));
        assert_eq!(a.get(1, 0), Some(-1.0));
    }

    #[test]
    fn symmetric_upper_triangle_is_rejected_with_line() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real symmetric\n\
             2 2 2\n\
             1 2 -1\n\
             2 2 2\n",
        );
        let err = read_matrix_market(f.path()).unwrap_err();
        assert!(err.to_string().contains(":3:"), "got {err}");
    }

    #[test]
    fn duplicate_entry_names_its_line() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real general\n\
             2 2 3\n\
             1 1 1\n\
             2 2 1\n\
             1 1 5\n",
        );
        let err = read_matrix_market(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":5:") && msg.contains("duplicate"), "got {msg}");
    }

    #[test]
    fn out_of_range_index_names_its_line() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real general\n\
             2 2 1\n\
             3 1 1\n",
        );
        let err = read_matrix_market(f.path()).unwrap_err();
        assert!(err.to_string().contains(":3:"), "got {err}");
    }

    #[test]
    fn bad_header_is_rejected() {
        let f = write_temp("%%MatrixMarket matrix coordinate complex general\n1 1 0\n");
        let err = read_matrix_market(f.path()).unwrap_err();
        assert!(err.to_string().contains(":1:"), "got {err}");
    }

    #[test]
    fn entry_count_mismatch_is_rejected() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real general\n\
             2 2 2\n\
             1 1 1\n",
        );
        assert!(read_matrix_market(f.path()).is_err());
    }

    #[test]
    fn random_matrices_round_trip_bitwise() {
        let mut rng = crate::rng::Rng::new(0x1234_5678);
        for trial in 0..20 {
            let n = 2 + rng.below(10);
            let mut triplets = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i == j || rng.next_f64() < 0.3 {
                        let v = rng.uniform(-1.0, 1.0) * 10f64.powf(rng.uniform(-12.0, 12.0));
                        triplets.push((i, j, v));
                    }
                }
            }
            let a = CsrMatrix::from_triplets(n, n, &triplets).unwrap();
            let f = tempfile::NamedTempFile::new().unwrap();
            write_matrix_market(f.path(), &a).unwrap();
            let b = read_matrix_market(f.path()).unwrap();
            assert_eq!(a, b, "trial {trial}");
        }
    }
}
