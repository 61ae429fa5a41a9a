//! Text formats for matrices, observed entries and index sets.
//!
//! Doubles are written with 17 significant digits, which round-trips every
//! finite value exactly. Indices are zero-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, DenseMatrix};
use crate::sampling::{IndexKind, IndexSet, OmegaSet};

const MM_HEADER: &str = "%%MatrixMarket matrix array real general";
const OMEGA_HEADER: &str = "i,j,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    /// MatrixMarket array: header, `n m`, then column-major entries.
    DenseArray,
    /// `# rows=n cols=m` followed by comma-separated rows.
    Csv,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::DenseArray => "mtx",
            MatrixFormat::Csv => "csv",
        }
    }
}

fn fmt_f64(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").expect("writing to a String");
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents` in one call so a failed write leaves no partial file
/// behind the caller's back.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn matrix_to_string(m: &DenseMatrix, format: MatrixFormat) -> Result<String> {
    ensure_finite(m, "matrix")?;
    let (n, cols) = m.shape();
    let mut out = String::new();
    match format {
        MatrixFormat::DenseArray => {
            writeln!(out, "{MM_HEADER}\n{n} {cols}").unwrap();
            for x in m.iter() {
                fmt_f64(&mut out, *x);
                out.push('\n');
            }
        }
        MatrixFormat::Csv => {
            writeln!(out, "# rows={n} cols={cols}").unwrap();
            for row in m.row_iter() {
                for (j, x) in row.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    fmt_f64(&mut out, *x);
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn write_matrix(m: &DenseMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    write_text(path, &matrix_to_string(m, format)?)
}

fn parse_f64(path: &Path, line: usize, token: &str) -> Result<f64> {
    let x: f64 = token
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("not a number: {:?}", token.trim())))?;
    if !x.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite value {x}")));
    }
    Ok(x)
}

fn parse_usize(path: &Path, line: usize, token: &str, what: &str) -> Result<usize> {
    token.trim().parse().map_err(|_| {
        Error::parse(
            path,
            line,
            format!("{what} is not a nonnegative integer: {:?}", token.trim()),
        )
    })
}

/// Numbered lines, skipping blank lines.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_dense_array(path: &Path, text: &str) -> Result<DenseMatrix> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, l)) if l.eq_ignore_ascii_case(MM_HEADER) => {}
        Some((no, l)) => {
            return Err(Error::parse(
                path,
                no,
                format!("expected {MM_HEADER:?}, found {l:?}"),
            ));
        }
        None => return Err(Error::parse(path, 1, "empty file")),
    }
    let mut lines = lines.filter(|(_, l)| !l.starts_with('%'));
    let (no, dims) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing dimension line"))?;
    let parts: Vec<&str> = dims.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::parse(
            path,
            no,
            format!("expected `rows cols`, found {dims:?}"),
        ));
    }
    let n = parse_usize(path, no, parts[0], "row count")?;
    let m = parse_usize(path, no, parts[1], "column count")?;
    let mut values = Vec::with_capacity(n * m);
    let mut last = no;
    for (no, l) in lines {
        last = no;
        if values.len() == n * m {
            return Err(Error::parse(
                path,
                no,
                format!("more than {} entries", n * m),
            ));
        }
        values.push(parse_f64(path, no, l)?);
    }
    if values.len() != n * m {
        return Err(Error::parse(
            path,
            last,
            format!(
                "expected {} entries for a {n}x{m} matrix, found {}",
                n * m,
                values.len()
            ),
        ));
    }
    Ok(DenseMatrix::from_vec(n, m, values))
}

fn parse_shape_comment(path: &Path, line: usize, comment: &str) -> Result<Option<(usize, usize)>> {
    let (mut rows, mut cols) = (None, None);
    for token in comment.trim_start_matches('#').split_whitespace() {
        if let Some(v) = token.strip_prefix("rows=") {
            rows = Some(parse_usize(path, line, v, "rows")?);
        } else if let Some(v) = token.strip_prefix("cols=") {
            cols = Some(parse_usize(path, line, v, "cols")?);
        }
    }
    match (rows, cols) {
        (Some(r), Some(c)) => Ok(Some((r, c))),
        (None, None) => Ok(None),
        _ => Err(Error::parse(
            path,
            line,
            "shape comment needs both rows= and cols=",
        )),
    }
}

fn parse_csv(path: &Path, text: &str) -> Result<DenseMatrix> {
    let mut shape = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut last = 1;
    for (no, l) in content_lines(text) {
        last = no;
        if l.starts_with('#') {
            if let Some(s) = parse_shape_comment(path, no, l)? {
                shape = Some(s);
            }
            continue;
        }
        let row = l
            .split(',')
            .map(|tok| parse_f64(path, no, tok))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::parse(
                    path,
                    no,
                    format!("row has {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        if let Some((_, c)) = shape {
            if row.len() != c {
                return Err(Error::parse(
                    path,
                    no,
                    format!("row has {} values, header says {c}", row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let (n, m) = match shape {
        Some((n, m)) => {
            if rows.len() != n {
                return Err(Error::parse(
                    path,
                    last,
                    format!("found {} rows, header says {n}", rows.len()),
                ));
            }
            (n, m)
        }
        None => {
            if rows.is_empty() {
                return Err(Error::parse(path, last, "no matrix rows"));
            }
            (rows.len(), rows[0].len())
        }
    };
    Ok(DenseMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Reads either format; MatrixMarket is recognized by its header line.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = read_text(path)?;
    let first = content_lines(&text).next().map(|(_, l)| l).unwrap_or("");
    if first.starts_with("%%MatrixMarket") {
        parse_dense_array(path, &text)
    } else {
        parse_csv(path, &text)
    }
}

pub fn omega_to_string(omega: &OmegaSet) -> String {
    let (n, m) = omega.shape();
    let mut out = format!("# rows={n} cols={m}\n{OMEGA_HEADER}\n");
    for ((i, j), v) in omega.iter() {
        write!(out, "{i},{j},").unwrap();
        fmt_f64(&mut out, v);
        out.push('\n');
    }
    out
}

pub fn write_omega(omega: &OmegaSet, path: &Path) -> Result<()> {
    write_text(path, &omega_to_string(omega))
}

/// Reads an `i,j,value` file. The shape comes from `shape` if given, else
/// from a `# rows= cols=` comment, else from the largest indices.
pub fn read_omega(path: &Path, shape: Option<(usize, usize)>) -> Result<OmegaSet> {
    let text = read_text(path)?;
    let mut file_shape = None;
    let mut seen_header = false;
    let mut pairs = Vec::new();
    let mut values = Vec::new();
    let mut lines_of = Vec::new();
    let mut last = 1;
    for (no, l) in content_lines(&text) {
        last = no;
        if l.starts_with('#') {
            if let Some(s) = parse_shape_comment(path, no, l)? {
                file_shape = Some(s);
            }
            continue;
        }
        if !seen_header {
            let cols: Vec<&str> = l.split(',').map(str::trim).collect();
            if cols != ["i", "j", "value"] {
                return Err(Error::parse(
                    path,
                    no,
                    format!("expected header {OMEGA_HEADER:?}, found {l:?}"),
                ));
            }
            seen_header = true;
            continue;
        }
        let parts: Vec<&str> = l.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::parse(
                path,
                no,
                format!("expected `i,j,value`, found {l:?}"),
            ));
        }
        let i = parse_usize(path, no, parts[0], "row index")?;
        let j = parse_usize(path, no, parts[1], "column index")?;
        pairs.push((i, j));
        values.push(parse_f64(path, no, parts[2])?);
        lines_of.push(no);
    }
    if !seen_header {
        return Err(Error::parse(
            path,
            last,
            format!("missing header {OMEGA_HEADER:?}"),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::parse(path, last, "no observed entries"));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by_key(|&k| (pairs[k], lines_of[k]));
    for w in order.windows(2) {
        if pairs[w[0]] == pairs[w[1]] {
            let (i, j) = pairs[w[1]];
            return Err(Error::parse(
                path,
                lines_of[w[1]],
                format!("duplicate entry ({i}, {j})"),
            ));
        }
    }
    let shape = match shape.or(file_shape) {
        Some(s) => s,
        None => (
            pairs.iter().map(|p| p.0).max().unwrap() + 1,
            pairs.iter().map(|p| p.1).max().unwrap() + 1,
        ),
    };
    for (k, &(i, j)) in pairs.iter().enumerate() {
        if i >= shape.0 || j >= shape.1 {
            return Err(Error::parse(
                path,
                lines_of[k],
                format!(
                    "entry ({i}, {j}) is outside a {}x{} matrix",
                    shape.0, shape.1
                ),
            ));
        }
    }
    OmegaSet::new(shape, pairs, values)
}

pub fn index_set_to_string(set: &IndexSet) -> String {
    let mut out = String::new();
    for i in set.indices() {
        writeln!(out, "{i}").unwrap();
    }
    out
}

pub fn write_index_set(set: &IndexSet, path: &Path) -> Result<()> {
    write_text(path, &index_set_to_string(set))
}

pub fn read_index_set(path: &Path, kind: IndexKind, bound: usize) -> Result<IndexSet> {
    let text = read_text(path)?;
    let mut indices = Vec::new();
    let mut seen = std::collections::BTreeMap::new();
    for (no, l) in content_lines(&text) {
        let i = parse_usize(path, no, l, "index")?;
        if i >= bound {
            return Err(Error::parse(
                path,
                no,
                format!("index {i} is not below {bound}"),
            ));
        }
        if let Some(first) = seen.insert(i, no) {
            return Err(Error::parse(
                path,
                no,
                format!("index {i} repeats line {first}"),
            ));
        }
        indices.push(i);
    }
    IndexSet::new(kind, indices, bound)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid(format!("cannot serialize report: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_text(path, &to_json(value)?)
}
