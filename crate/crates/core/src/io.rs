//! Instance files: JSON (`{"n", "m", "A", "b", "ground_truth"?}` with `A`
//! row-major) and Matrix Market for `A` with `b` in a side file holding one
//! real per line.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{validate, BpInstance, DEFAULT_RANK_TOL};

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    m: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Vec<f64>>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn parse_instance_json(text: &str, source_name: &str) -> Result<BpInstance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if file.a.len() != file.n {
        return Err(Error::DimensionMismatch {
            what: "number of rows of A",
            expected: file.n,
            found: file.a.len(),
        });
    }
    if let Some(row) = file.a.iter().find(|r| r.len() != file.m) {
        return Err(Error::DimensionMismatch {
            what: "row length of A",
            expected: file.m,
            found: row.len(),
        });
    }
    let a = DMatrix::from_fn(file.n, file.m, |i, j| file.a[i][j]);
    let inst = validate(a, DVector::from_vec(file.b), DEFAULT_RANK_TOL)?;
    match file.ground_truth {
        Some(gt) => inst.with_ground_truth(DVector::from_vec(gt)),
        None => Ok(inst),
    }
}

pub fn instance_to_json(inst: &BpInstance) -> String {
    let file = InstanceFile {
        n: inst.n(),
        m: inst.m(),
        a: inst
            .a()
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect(),
        b: inst.b().iter().copied().collect(),
        ground_truth: inst.ground_truth().map(|g| g.iter().copied().collect()),
    };
    serde_json::to_string(&file).expect("instance serializes")
}

pub fn read_instance_json(path: &Path) -> Result<BpInstance> {
    parse_instance_json(&read_text(path)?, &path.display().to_string())
}

pub fn write_instance_json(inst: &BpInstance, path: &Path) -> Result<()> {
    write_text(path, &instance_to_json(inst))
}

/// Reads `A` from Matrix Market (`coordinate` or `array`, `real`/`integer`/
/// `pattern`, `general`/`symmetric`/`skew-symmetric`).
pub fn parse_matrix_market(text: &str, source_name: &str) -> Result<DMatrix<f64>> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(
            1,
            format!("not a Matrix Market matrix header: '{header}'"),
        ));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(1, format!("unsupported format '{other}'"))),
    };
    let pattern = match tokens[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if coordinate => true,
        other => return Err(err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = tokens[4].clone();
    if !matches!(
        symmetry.as_str(),
        "general" | "symmetric" | "skew-symmetric"
    ) {
        return Err(err(1, format!("unsupported symmetry '{symmetry}'")));
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body
        .next()
        .ok_or_else(|| err(2, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| err(size_line, format!("bad size entry '{t}'")))
        })
        .collect::<Result<_>>()?;
    let expected_dims = if coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(err(
            size_line,
            format!("expected {expected_dims} size entries"),
        ));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut a = DMatrix::zeros(rows, cols);

    let parse_f = |line: usize, t: &str| -> Result<f64> {
        t.parse::<f64>()
            .map_err(|_| err(line, format!("bad value '{t}'")))
    };
    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (ln, l) in body.by_ref().take(nnz) {
            let t: Vec<&str> = l.split_whitespace().collect();
            let need = if pattern { 2 } else { 3 };
            if t.len() < need {
                return Err(err(ln, format!("expected {need} entries")));
            }
            let idx = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|_| err(ln, format!("bad index '{s}'")))
            };
            let (i, j) = (idx(t[0])?, idx(t[1])?);
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(err(ln, format!("index ({i}, {j}) out of range")));
            }
            let v = if pattern { 1.0 } else { parse_f(ln, t[2])? };
            a[(i - 1, j - 1)] += v;
            if i != j {
                match symmetry.as_str() {
                    "symmetric" => a[(j - 1, i - 1)] += v,
                    "skew-symmetric" => a[(j - 1, i - 1)] -= v,
                    _ => {}
                }
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(err(
                text.lines().count(),
                format!("expected {nnz} entries, found {seen}"),
            ));
        }
    } else {
        let mut values = Vec::with_capacity(rows * cols);
        for (ln, l) in body.by_ref() {
            for t in l.split_whitespace() {
                values.push(parse_f(ln, t)?);
            }
        }
        if symmetry != "general" {
            return Err(err(1, "symmetric array storage is not supported".into()));
        }
        if values.len() != rows * cols {
            return Err(err(
                text.lines().count(),
                format!("expected {} values, found {}", rows * cols, values.len()),
            ));
        }
        a = DMatrix::from_column_slice(rows, cols, &values);
    }
    if let Some((ln, _)) = body.next() {
        return Err(err(ln, "unexpected trailing data".into()));
    }
    Ok(a)
}

/// One real per line; blank lines and lines starting with `%` or `#` are skipped.
pub fn parse_vector(text: &str, source_name: &str) -> Result<DVector<f64>> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        out.push(t.parse::<f64>().map_err(|_| Error::Parse {
            source_name: source_name.to_string(),
            line: i + 1,
            message: format!("bad value '{t}'"),
        })?);
    }
    Ok(DVector::from_vec(out))
}

/// Loads an instance: Matrix Market when the extension is `.mtx` (then `rhs`
/// must name the side file for `b`), JSON otherwise.
pub fn load_instance(path: &Path, rhs: Option<&Path>) -> Result<BpInstance> {
    let is_mtx = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("mtx"));
    if !is_mtx {
        return read_instance_json(path);
    }
    let rhs = rhs.ok_or_else(|| {
        Error::InvalidConfig(format!(
            "{} is Matrix Market; the right-hand side file must be given separately",
            path.display()
        ))
    })?;
    let a = parse_matrix_market(&read_text(path)?, &path.display().to_string())?;
    let b = parse_vector(&read_text(rhs)?, &rhs.display().to_string())?;
    validate(a, b, DEFAULT_RANK_TOL)
}
