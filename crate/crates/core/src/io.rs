//! Plain-text matrix and loading files.
//!
//! One matrix row per line, entries separated by commas, semicolons or
//! whitespace. Blank lines and lines starting with `*` are skipped. A matrix
//! may be given in full or as a lower triangle including the diagonal; the
//! triangle is mirrored across the diagonal.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CorrelationMatrix, SYMMETRY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    FullSymmetric,
    LowerTriangleWithDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Whitespace,
    Semicolon,
}

impl Delimiter {
    fn detect<'a>(mut lines: impl Iterator<Item = &'a str>) -> Self {
        let mut semicolon = false;
        for line in &mut lines {
            if line.contains(',') {
                return Delimiter::Comma;
            }
            // a lone trailing ';' is a row terminator, not a separator
            semicolon |= line.trim_end().trim_end_matches(';').contains(';');
        }
        if semicolon {
            Delimiter::Semicolon
        } else {
            Delimiter::Whitespace
        }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Comma => strip_terminator(line).split(',').map(str::trim).collect(),
            Delimiter::Semicolon => {
                let mut tokens: Vec<&str> = line.split(';').map(str::trim).collect();
                if tokens.last() == Some(&"") {
                    tokens.pop();
                }
                tokens
            }
            Delimiter::Whitespace => strip_terminator(line).split_whitespace().collect(),
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Delimiter::Comma => ", ",
            Delimiter::Whitespace => " ",
            Delimiter::Semicolon => "; ",
        }
    }
}

fn strip_terminator(line: &str) -> &str {
    let line = line.trim();
    let line = line.strip_suffix(';').unwrap_or(line);
    line.strip_suffix(',').unwrap_or(line).trim_end()
}

/// A matrix or loading file plus how to read it. `None` means auto-detect.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub path: PathBuf,
    pub layout: Option<Layout>,
    pub delimiter: Option<Delimiter>,
    /// Reject matrices whose diagonal is not all ones.
    pub require_correlation: bool,
}

impl MatrixFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        MatrixFile {
            path: path.into(),
            layout: None,
            delimiter: None,
            require_correlation: false,
        }
    }

    pub fn correlation(path: impl Into<PathBuf>) -> Self {
        MatrixFile {
            require_correlation: true,
            ..Self::new(path)
        }
    }

    fn read(&self) -> Result<String> {
        fs::read_to_string(&self.path).map_err(|source| Error::Io {
            path: self.path.clone(),
            source,
        })
    }
}

/// A parsed matrix with non-fatal findings.
#[derive(Debug, Clone)]
pub struct ParsedMatrix {
    pub matrix: CorrelationMatrix,
    pub layout: Layout,
    pub warnings: Vec<String>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let t = line.trim();
        (!t.is_empty() && !t.starts_with('*')).then_some((i + 1, t))
    })
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    if token.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty entry".into(),
        });
    }
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot read {token:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{token} is not finite"),
        });
    }
    Ok(v)
}

pub fn parse_matrix(file: &MatrixFile) -> Result<ParsedMatrix> {
    let text = file.read()?;
    parse_matrix_str(&text, file.layout, file.delimiter, file.require_correlation)
}

/// Parses matrix text; see the module docs for the accepted format.
pub fn parse_matrix_str(
    text: &str,
    layout: Option<Layout>,
    delimiter: Option<Delimiter>,
    require_correlation: bool,
) -> Result<ParsedMatrix> {
    let delimiter = delimiter.unwrap_or_else(|| Delimiter::detect(data_lines(text).map(|(_, l)| l)));
    let mut rows = Vec::new();
    for (line_no, line) in data_lines(text) {
        let row = delimiter
            .split(line)
            .into_iter()
            .map(|t| parse_value(t, line_no))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line_no, row));
    }
    let p = rows.len();
    if p == 0 {
        return Err(Error::Parse {
            line: 0,
            message: "no matrix rows found".into(),
        });
    }
    let is_lower = rows.iter().enumerate().all(|(i, (_, r))| r.len() == i + 1);
    let is_full = rows.iter().all(|(_, r)| r.len() == p);
    let layout = match layout {
        Some(l) => l,
        None if is_lower => Layout::LowerTriangleWithDiagonal,
        None if is_full => Layout::FullSymmetric,
        None => Layout::LowerTriangleWithDiagonal,
    };
    for (i, (line_no, r)) in rows.iter().enumerate() {
        let want = match layout {
            Layout::FullSymmetric => p,
            Layout::LowerTriangleWithDiagonal => i + 1,
        };
        if r.len() != want {
            return Err(Error::Parse {
                line: *line_no,
                message: format!(
                    "row {} has {} entries, expected {want} for a {} layout",
                    i + 1,
                    r.len(),
                    match layout {
                        Layout::FullSymmetric => "full",
                        Layout::LowerTriangleWithDiagonal => "lower-triangle",
                    }
                ),
            });
        }
    }
    let values = DMatrix::from_fn(p, p, |i, j| match layout {
        Layout::FullSymmetric => rows[i].1[j],
        Layout::LowerTriangleWithDiagonal => {
            if j <= i {
                rows[i].1[j]
            } else {
                rows[j].1[i]
            }
        }
    });
    if require_correlation {
        if let Some(i) = (0..p).find(|&i| (values[(i, i)] - 1.0).abs() > SYMMETRY_TOL) {
            return Err(Error::Invalid(format!(
                "diagonal entry {} is {}, but a correlation matrix was expected",
                i + 1,
                values[(i, i)]
            )));
        }
    }
    let matrix = CorrelationMatrix::new(values)?;
    let mut warnings = Vec::new();
    if !matrix.is_positive_definite() {
        warnings.push("matrix is not positive definite; model fits that need its inverse will fail".to_string());
    }
    Ok(ParsedMatrix {
        matrix,
        layout,
        warnings,
    })
}

pub fn parse_loadings(file: &MatrixFile, expected_len: Option<usize>) -> Result<Vec<f64>> {
    let text = file.read()?;
    parse_loadings_str(&text, expected_len)
}

/// One loading per line, or all loadings on a single delimited line.
pub fn parse_loadings_str(text: &str, expected_len: Option<usize>) -> Result<Vec<f64>> {
    let lines: Vec<(usize, &str)> = data_lines(text).collect();
    let delimiter = Delimiter::detect(lines.iter().map(|(_, l)| *l));
    let mut values = Vec::new();
    if lines.len() == 1 {
        let (line_no, line) = lines[0];
        for token in delimiter.split(line) {
            values.push(parse_value(token, line_no)?);
        }
    } else {
        for (line_no, line) in lines {
            let tokens = delimiter.split(line);
            if tokens.len() != 1 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected one loading per line, found {}", tokens.len()),
                });
            }
            values.push(parse_value(tokens[0], line_no)?);
        }
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no loadings found".into(),
        });
    }
    if let Some(p) = expected_len {
        if values.len() != p {
            return Err(Error::Dimension(format!(
                "{} loadings given for a {p}-indicator matrix",
                values.len()
            )));
        }
    }
    Ok(values)
}

/// Writes a full matrix at round-trip precision.
pub fn format_matrix(m: &DMatrix<f64>, delimiter: Delimiter) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(delimiter.as_str()));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, delimiter: Delimiter) -> Result<()> {
    fs::write(path, format_matrix(m, delimiter)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
