//! Matrix Market (coordinate, real) and plain vector files.

use std::io::{BufRead, Write};

use crate::error::{EmiError, Result};
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Writes `a` as `coordinate real symmetric` (lower triangle, 1-based) when it
/// is exactly symmetric, otherwise as `coordinate real general`.
pub fn write_matrix_market<T: Real, W: Write>(a: &CsrMatrix<T>, mut out: W) -> Result<()> {
    let symmetric = a.nrows() == a.ncols() && a.is_exactly_symmetric();
    let kind = if symmetric { "symmetric" } else { "general" };
    let entries: Vec<(usize, usize, T)> = a.iter().filter(|&(i, j, _)| !symmetric || j <= i).collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<T: Real, R: BufRead>(input: R) -> Result<CsrMatrix<T>> {
    let bad = |msg: String| EmiError::MatrixMarket(msg);
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(bad(format!("unsupported header `{header}`")));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(bad(format!("unsupported field `{}`", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(bad(format!("unsupported symmetry `{other}`"))),
    };
    let mut data = lines.filter(|l| match l {
        Ok(s) => !s.trim().is_empty() && !s.trim_start().starts_with('%'),
        Err(_) => true,
    });
    let size = data.next().ok_or_else(|| bad("missing size line".into()))??;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad size line `{size}`"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(bad(format!("bad size line `{size}`")));
    }
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    let mut b = TripletBuilder::with_capacity(nrows, ncols, if symmetric { 2 * nnz } else { nnz });
    let mut count = 0;
    for line in data {
        let line = line?;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(bad(format!("bad entry `{line}`")));
        }
        let i: usize = t[0].parse().map_err(|_| bad(format!("bad row in `{line}`")))?;
        let j: usize = t[1].parse().map_err(|_| bad(format!("bad column in `{line}`")))?;
        let v: f64 = t[2].parse().map_err(|_| bad(format!("bad value in `{line}`")))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(bad(format!("entry ({i}, {j}) out of range")));
        }
        b.push(i - 1, j - 1, T::of(v));
        if symmetric && i != j {
            b.push(j - 1, i - 1, T::of(v));
        }
        count += 1;
    }
    if count != nnz {
        return Err(bad(format!("expected {nnz} entries, found {count}")));
    }
    Ok(if symmetric { b.build_symmetric() } else { b.build() })
}

/// One value per line.
pub fn write_vector<T: Real, W: Write>(v: &[T], mut out: W) -> Result<()> {
    for x in v {
        writeln!(out, "{x:e}")?;
    }
    Ok(())
}

pub fn read_vector<T: Real, R: BufRead>(input: R) -> Result<Vec<T>> {
    let mut v = Vec::new();
    for line in input.lines() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('%') || s.starts_with('#') {
            continue;
        }
        let x: f64 = s.parse().map_err(|_| EmiError::MatrixMarket(format!("bad vector entry `{s}`")))?;
        v.push(T::of(x));
    }
    Ok(v)
}
