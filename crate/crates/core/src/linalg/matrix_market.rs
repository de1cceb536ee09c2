use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Csr, GlobalTensor, LinalgError, SparseMatrix};

/// Contents of a MatrixMarket file.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixMarket {
    Matrix(Csr),
    Vector(Vec<f64>),
}

const COORDINATE: &str = "%%MatrixMarket matrix coordinate real general";
const ARRAY: &str = "%%MatrixMarket matrix array real general";

/// Writes a rank-2 tensor in coordinate format (1-based, CSR order) or a
/// rank-1 tensor as a dense column. Reals carry 17 significant digits.
pub fn write_matrix_market(tensor: &GlobalTensor, mut out: impl Write) -> Result<(), LinalgError> {
    match tensor {
        GlobalTensor::Matrix(m) => {
            let csr = m.csr();
            writeln!(out, "{COORDINATE}")?;
            writeln!(out, "{} {} {}", csr.nrows, csr.ncols, csr.nnz())?;
            for i in 0..csr.nrows {
                let (cols, vals) = csr.row(i);
                for (&j, v) in cols.iter().zip(vals) {
                    writeln!(out, "{} {} {v:.16e}", i + 1, j + 1)?;
                }
            }
        }
        GlobalTensor::Vector(v) => {
            writeln!(out, "{ARRAY}")?;
            writeln!(out, "{} 1", v.len())?;
            for x in v {
                writeln!(out, "{x:.16e}")?;
            }
        }
        GlobalTensor::Scalar(_) => {
            return Err(LinalgError::UnsupportedRank(0));
        }
    }
    Ok(())
}

pub fn write_matrix_market_file(tensor: &GlobalTensor, path: impl AsRef<Path>) -> Result<(), LinalgError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(tensor, &mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> LinalgError {
    LinalgError::Parse { line, message: message.into() }
}

fn fields<T: std::str::FromStr>(line: usize, text: &str, n: usize) -> Result<Vec<T>, LinalgError> {
    let v: Vec<T> = text
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(line, format!("cannot parse '{t}'"))))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(parse_err(line, format!("expected {n} fields, found {}", v.len())));
    }
    Ok(v)
}

pub fn read_matrix_market(input: impl Read) -> Result<MatrixMarket, LinalgError> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let coordinate = match header.trim() {
        COORDINATE => true,
        ARRAY => false,
        _ => return Err(parse_err(1, format!("unsupported header '{}'", header.trim()))),
    };
    let mut body = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('%') {
            body.push((i + 1, t.to_string()));
        }
    }
    let mut it = body.into_iter();
    let (ln, size) = it.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    if coordinate {
        let s = fields::<usize>(ln, &size, 3)?;
        let (m, n, nnz) = (s[0], s[1], s[2]);
        let mut mat = SparseMatrix::new(m, n);
        let mut count = 0;
        for (ln, text) in it {
            let parts: Vec<&str> = text.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(parse_err(ln, "expected 'row col value'"));
            }
            let i: usize = parts[0].parse().map_err(|_| parse_err(ln, "bad row index"))?;
            let j: usize = parts[1].parse().map_err(|_| parse_err(ln, "bad column index"))?;
            let v: f64 = parts[2].parse().map_err(|_| parse_err(ln, "bad value"))?;
            if i == 0 || j == 0 || i > m || j > n {
                return Err(parse_err(ln, format!("entry ({i}, {j}) outside {m}x{n}")));
            }
            mat.add(i - 1, j - 1, v)?;
            count += 1;
        }
        if count != nnz {
            return Err(parse_err(ln, format!("declared {nnz} entries, found {count}")));
        }
        Ok(MatrixMarket::Matrix(mat.into_csr()))
    } else {
        let s = fields::<usize>(ln, &size, 2)?;
        if s[1] != 1 {
            return Err(parse_err(ln, "only column vectors are supported"));
        }
        let mut v = Vec::with_capacity(s[0]);
        for (ln, text) in it {
            v.push(fields::<f64>(ln, &text, 1)?[0]);
        }
        if v.len() != s[0] {
            return Err(parse_err(ln, format!("declared {} values, found {}", s[0], v.len())));
        }
        Ok(MatrixMarket::Vector(v))
    }
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<MatrixMarket, LinalgError> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// One value per line, 17 significant digits.
pub fn write_plain_vector(values: &[f64], mut out: impl Write) -> Result<(), LinalgError> {
    for x in values {
        writeln!(out, "{x:.16e}")?;
    }
    Ok(())
}

pub fn read_plain_vector(input: impl Read) -> Result<Vec<f64>, LinalgError> {
    let mut v = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            v.push(t.parse().map_err(|_| parse_err(i + 1, format!("cannot parse '{t}'")))?);
        }
    }
    Ok(v)
}
