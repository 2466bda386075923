//! MatrixMarket ingestion and serialization.
//!
//! Supports the `coordinate` and `array` formats with `real`, `integer` and
//! `pattern` fields and `general` or `symmetric` symmetry. Coordinate files
//! load as CSR (1-based indices converted, symmetric storage expanded to
//! full, duplicates summed); array files load as column-major dense.

use std::fmt;

use mixprec::{CsrMatrix, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmField {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
}

/// Parsed banner line. Unsupported combinations are rejected here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixMarketHeader {
    pub format: MmFormat,
    pub field: MmField,
    pub symmetry: MmSymmetry,
}

/// A loaded matrix: sparse for coordinate files, dense for array files.
#[derive(Debug, Clone, PartialEq)]
pub enum MmMatrix {
    Sparse(CsrMatrix<f64>),
    Dense(DenseMatrix<f64>),
}

impl MmMatrix {
    pub fn rows(&self) -> usize {
        match self {
            MmMatrix::Sparse(m) => m.rows(),
            MmMatrix::Dense(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MmMatrix::Sparse(m) => m.cols(),
            MmMatrix::Dense(m) => m.cols(),
        }
    }
}

/// Parse failure with the 1-based source line it occurred on.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        Self {
            line,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

impl std::error::Error for ParseError {}

/// Parse the banner line `%%MatrixMarket matrix <format> <field> <symmetry>`.
pub fn parse_header(banner: &str) -> Result<MatrixMarketHeader, ParseError> {
    let err = |reason: &str| ParseError::new(1, reason.to_string());
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" {
        return Err(err("expected banner \"%%MatrixMarket matrix <format> <field> <symmetry>\""));
    }
    if tokens[1] != "matrix" {
        return Err(err("only the \"matrix\" object is supported"));
    }
    let format = match tokens[2].as_str() {
        "coordinate" => MmFormat::Coordinate,
        "array" => MmFormat::Array,
        other => return Err(err(&format!("unsupported format \"{other}\""))),
    };
    let field = match tokens[3].as_str() {
        "real" => MmField::Real,
        "integer" => MmField::Integer,
        "pattern" => MmField::Pattern,
        other => return Err(err(&format!("unsupported field \"{other}\""))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        other => return Err(err(&format!("unsupported symmetry \"{other}\""))),
    };
    if format == MmFormat::Array && field == MmField::Pattern {
        return Err(err("pattern field is only valid for coordinate format"));
    }
    Ok(MatrixMarketHeader {
        format,
        field,
        symmetry,
    })
}

fn parse_value(token: &str, field: MmField, line: usize) -> Result<f64, ParseError> {
    let v: f64 = token
        .parse()
        .map_err(|_| ParseError::new(line, format!("cannot parse value \"{token}\"")))?;
    if !v.is_finite() {
        return Err(ParseError::new(line, "value is not finite"));
    }
    if field == MmField::Integer && v.fract() != 0.0 {
        return Err(ParseError::new(
            line,
            format!("integer field holds non-integer value \"{token}\""),
        ));
    }
    Ok(v)
}

/// Parse a whole MatrixMarket document.
pub fn parse_matrix_market(text: &str) -> Result<MmMatrix, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "empty input"))?;
    let header = parse_header(banner)?;

    // %-comments and blank lines may precede the size line.
    let mut data_lines = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_ln, size_line) = data_lines
        .next()
        .ok_or_else(|| ParseError::new(1, "missing size line"))?;
    let size_tokens: Vec<&str> = size_line.split_whitespace().collect();
    let want = if header.format == MmFormat::Coordinate { 3 } else { 2 };
    if size_tokens.len() != want {
        return Err(ParseError::new(
            size_ln,
            format!("size line needs {want} fields, found {}", size_tokens.len()),
        ));
    }
    let dim = |tok: &str| -> Result<usize, ParseError> {
        tok.parse::<usize>()
            .map_err(|_| ParseError::new(size_ln, format!("bad size field \"{tok}\"")))
    };
    let rows = dim(size_tokens[0])?;
    let cols = dim(size_tokens[1])?;
    if rows == 0 || cols == 0 {
        return Err(ParseError::new(size_ln, "matrix dimensions must be positive"));
    }
    if header.symmetry == MmSymmetry::Symmetric && rows != cols {
        return Err(ParseError::new(size_ln, "symmetric matrix must be square"));
    }

    match header.format {
        MmFormat::Coordinate => {
            let nnz = dim(size_tokens[2])?;
            let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * nnz);
            let mut seen = 0usize;
            for (ln, line) in data_lines {
                if seen == nnz {
                    return Err(ParseError::new(ln, "more entries than the size line declares"));
                }
                let toks: Vec<&str> = line.split_whitespace().collect();
                let want = if header.field == MmField::Pattern { 2 } else { 3 };
                if toks.len() != want {
                    return Err(ParseError::new(
                        ln,
                        format!("entry needs {want} fields, found {}", toks.len()),
                    ));
                }
                let i: usize = toks[0]
                    .parse()
                    .map_err(|_| ParseError::new(ln, format!("bad row index \"{}\"", toks[0])))?;
                let j: usize = toks[1]
                    .parse()
                    .map_err(|_| ParseError::new(ln, format!("bad column index \"{}\"", toks[1])))?;
                if i < 1 || i > rows || j < 1 || j > cols {
                    return Err(ParseError::new(
                        ln,
                        format!("index ({i}, {j}) out of bounds for {rows}x{cols}"),
                    ));
                }
                let v = if header.field == MmField::Pattern {
                    1.0
                } else {
                    parse_value(toks[2], header.field, ln)?
                };
                triplets.push((i - 1, j - 1, v));
                if header.symmetry == MmSymmetry::Symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(ParseError::new(
                    0,
                    format!("size line declares {nnz} entries, found {seen}"),
                ));
            }
            let m = CsrMatrix::from_triplets(rows, cols, &triplets)
                .map_err(|e| ParseError::new(0, e.to_string()))?;
            Ok(MmMatrix::Sparse(m))
        }
        MmFormat::Array => {
            let mut values: Vec<(usize, f64)> = Vec::new();
            let expected = if header.symmetry == MmSymmetry::Symmetric {
                rows * (rows + 1) / 2
            } else {
                rows * cols
            };
            for (ln, line) in data_lines {
                for tok in line.split_whitespace() {
                    if values.len() == expected {
                        return Err(ParseError::new(ln, "more entries than the array holds"));
                    }
                    values.push((ln, parse_value(tok, header.field, ln)?));
                }
            }
            if values.len() != expected {
                return Err(ParseError::new(
                    0,
                    format!("array needs {expected} values, found {}", values.len()),
                ));
            }
            let mut a = DenseMatrix::<f64>::zeros(rows, cols);
            match header.symmetry {
                MmSymmetry::General => {
                    // column-major storage order
                    let mut it = values.iter();
                    for j in 0..cols {
                        for i in 0..rows {
                            a.set(i, j, it.next().unwrap().1);
                        }
                    }
                }
                MmSymmetry::Symmetric => {
                    // lower triangle packed by columns
                    let mut it = values.iter();
                    for j in 0..cols {
                        for i in j..rows {
                            let v = it.next().unwrap().1;
                            a.set(i, j, v);
                            a.set(j, i, v);
                        }
                    }
                }
            }
            Ok(MmMatrix::Dense(a))
        }
    }
}

/// Serialize a CSR matrix as `coordinate real general`, one entry per line
/// with 1-based indices and shortest round-trip values.
pub fn write_matrix_market(m: &CsrMatrix<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", m.rows(), m.cols(), m.nnz()));
    for i in 0..m.rows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            out.push_str(&format!("{} {} {}\n", i + 1, j + 1, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_coordinate() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n";
        match parse_matrix_market(text).unwrap() {
            MmMatrix::Sparse(m) => {
                assert_eq!((m.rows(), m.cols(), m.nnz()), (2, 2, 2));
                assert_eq!(m.values(), &[1.0, 1.0]);
                assert_eq!(m.col_idx(), &[0, 1]);
            }
            other => panic!("expected sparse, got {other:?}"),
        }
    }

    #[test]
    fn symmetric_lower_triangle_expands() {
        // lower triangle of [[4,2],[2,5]]: three stored entries
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 4.0\n2 1 2.0\n2 2 5.0\n";
        match parse_matrix_market(text).unwrap() {
            MmMatrix::Sparse(m) => {
                assert_eq!(m.nnz(), 4);
                let d = m.to_dense();
                assert_eq!(d.get(0, 1), 2.0);
                assert_eq!(d.get(1, 0), 2.0);
                assert_eq!(d.get(0, 0), 4.0);
                assert_eq!(d.get(1, 1), 5.0);
            }
            other => panic!("expected sparse, got {other:?}"),
        }
    }

    #[test]
    fn out_of_bounds_index_rejected() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        let err = parse_matrix_market(text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.reason.contains("out of bounds"), "{}", err.reason);
    }

    #[test]
    fn pattern_defaults_to_one() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n2 1\n";
        match parse_matrix_market(text).unwrap() {
            MmMatrix::Sparse(m) => assert_eq!(m.values(), &[1.0, 1.0]),
            other => panic!("expected sparse, got {other:?}"),
        }
    }

    #[test]
    fn array_general_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n";
        match parse_matrix_market(text).unwrap() {
            MmMatrix::Dense(a) => {
                assert_eq!(a.get(0, 0), 1.0);
                assert_eq!(a.get(1, 0), 3.0);
                assert_eq!(a.get(0, 1), 2.0);
                assert_eq!(a.get(1, 1), 4.0);
            }
            other => panic!("expected dense, got {other:?}"),
        }
    }

    #[test]
    fn array_symmetric_unpacks() {
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n4\n2\n5\n";
        match parse_matrix_market(text).unwrap() {
            MmMatrix::Dense(a) => {
                assert_eq!(a.get(0, 1), 2.0);
                assert_eq!(a.get(1, 0), 2.0);
            }
            other => panic!("expected dense, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let text = "%%MatrixMarket matrix coordinate real general\n% a comment\n\n2 2 1\n% another\n1 1 7.5\n";
        assert!(parse_matrix_market(text).is_ok());
    }

    #[test]
    fn malformed_banner_rejected() {
        for bad in [
            "%%NotMatrixMarket matrix coordinate real general\n1 1 0\n",
            "%%MatrixMarket vector coordinate real general\n1 1 0\n",
            "%%MatrixMarket matrix coordinate complex general\n1 1 0\n",
            "%%MatrixMarket matrix array pattern general\n1 1\n",
        ] {
            let err = parse_matrix_market(bad).unwrap_err();
            assert_eq!(err.line, 1, "{bad}");
        }
    }

    #[test]
    fn wrong_entry_count_rejected() {
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(parse_matrix_market(short).is_err());
        let long = "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1.0\n1 1 2.0\n";
        assert!(parse_matrix_market(long).is_err());
    }

    #[test]
    fn integer_field_enforced() {
        let text = "%%MatrixMarket matrix coordinate integer general\n1 1 1\n1 1 2.5\n";
        assert!(parse_matrix_market(text).is_err());
        let ok = "%%MatrixMarket matrix coordinate integer general\n1 1 1\n1 1 2\n";
        assert!(parse_matrix_market(ok).is_ok());
    }
}
