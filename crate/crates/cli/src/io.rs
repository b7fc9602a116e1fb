//! Matrix files and plant bundles.

use std::fs;
use std::path::{Path, PathBuf};

use faer::Mat;
use hinf_core::{
    validate_generator, PlantEst, PlantSF, StateSpace, SymmetricGenerator, SYMMETRY_TOL,
};
use serde::Deserialize;

use crate::error::CliError;

/// Reads a dense CSV matrix or a MatrixMarket coordinate file.
pub fn read_matrix(path: &Path) -> Result<Mat<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(&text, path)
    } else {
        parse_csv(&text, path)
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_number(s: &str, path: &Path, line: usize) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("not a number: {:?}", s.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, "non-finite entry"));
    }
    Ok(v)
}

fn parse_csv(text: &str, path: &Path) -> Result<Mat<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| parse_number(f, path, line))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::Dimension(format!(
                    "{}:{line}: row has {} columns, expected {}",
                    path.display(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Dimension(format!(
            "{}: empty matrix",
            path.display()
        )));
    }
    Ok(Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]))
}

fn parse_matrix_market(text: &str, path: &Path) -> Result<Mat<f64>, CliError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(
            path,
            1,
            "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`",
        ));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(
            path,
            1,
            format!("unsupported field {:?}", tokens[3]),
        ));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(parse_err(
                path,
                1,
                format!("unsupported symmetry {other:?}"),
            ))
        }
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(path, 2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(path, size_line, "bad size line"))
        })
        .collect::<Result<_, _>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(parse_err(
            path,
            size_line,
            "size line needs rows, cols, entries",
        ));
    };
    if symmetric && rows != cols {
        return Err(CliError::Dimension(format!(
            "{}: symmetric matrix must be square, got {rows}x{cols}",
            path.display()
        )));
    }
    let mut m = Mat::<f64>::zeros(rows, cols);
    let mut seen = 0;
    for (line, entry) in body {
        let t: Vec<&str> = entry.split_whitespace().collect();
        if t.len() != 3 {
            return Err(parse_err(path, line, "entry needs row, col, value"));
        }
        let idx = |s: &str, bound: usize| -> Result<usize, CliError> {
            match s.parse::<usize>() {
                Ok(k) if k >= 1 && k <= bound => Ok(k - 1),
                _ => Err(parse_err(
                    path,
                    line,
                    format!("index {s:?} out of range 1..={bound}"),
                )),
            }
        };
        let (i, j) = (idx(t[0], rows)?, idx(t[1], cols)?);
        let v = parse_number(t[2], path, line)?;
        m[(i, j)] += v;
        if symmetric && i != j {
            m[(j, i)] += v;
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(CliError::Dimension(format!(
            "{}: header declares {nnz} entries, found {seen}",
            path.display()
        )));
    }
    Ok(m)
}

/// Dense CSV with shortest round-trip formatting.
pub fn write_matrix_csv(path: &Path, m: &Mat<f64>) -> Result<(), CliError> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// MatrixMarket coordinate file; `symmetric` stores the lower triangle only.
pub fn write_matrix_market(path: &Path, m: &Mat<f64>, symmetric: bool) -> Result<(), CliError> {
    let mut entries = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != 0.0 && (!symmetric || i >= j) {
                entries.push(format!("{} {} {}", i + 1, j + 1, m[(i, j)]));
            }
        }
    }
    let kind = if symmetric { "symmetric" } else { "general" };
    let mut out = format!(
        "%%MatrixMarket matrix coordinate real {kind}\n{} {} {}\n",
        m.nrows(),
        m.ncols(),
        entries.len()
    );
    for e in entries {
        out.push_str(&e);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleKind {
    StateFeedback,
    Estimator,
    StateSpace,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Manifest {
    pub kind: BundleKind,
    #[serde(default)]
    pub name: Option<String>,
}

/// A directory holding one file per matrix (`X.mtx` or `X.csv`) and an
/// optional `manifest.json`.
pub struct Bundle {
    dir: PathBuf,
    pub manifest: Option<Manifest>,
}

impl Bundle {
    pub fn open(dir: &Path, expected: BundleKind) -> Result<Self, CliError> {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!(
                "{} is not a directory",
                dir.display()
            )));
        }
        let mpath = dir.join("manifest.json");
        let manifest = if mpath.exists() {
            let text = fs::read_to_string(&mpath).map_err(|e| CliError::io(&mpath, e))?;
            let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: mpath.clone(),
                line: e.line(),
                msg: e.to_string(),
            })?;
            if m.kind != expected {
                return Err(CliError::Usage(format!(
                    "{}: bundle kind {:?}, expected {:?}",
                    mpath.display(),
                    m.kind,
                    expected
                )));
            }
            Some(m)
        } else {
            None
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    fn find(&self, name: &str) -> Option<PathBuf> {
        ["mtx", "csv"]
            .iter()
            .map(|ext| self.dir.join(format!("{name}.{ext}")))
            .find(|p| p.exists())
    }

    pub fn matrix(&self, name: &str) -> Result<Mat<f64>, CliError> {
        let path = self.find(name).ok_or_else(|| {
            CliError::Usage(format!(
                "{}: missing {name}.mtx or {name}.csv",
                self.dir.display()
            ))
        })?;
        read_matrix(&path)
    }

    pub fn optional(&self, name: &str) -> Result<Option<Mat<f64>>, CliError> {
        self.find(name).map(|p| read_matrix(&p)).transpose()
    }

    pub fn generator(&self) -> Result<SymmetricGenerator, CliError> {
        Ok(validate_generator(
            self.matrix("A")?.as_ref(),
            SYMMETRY_TOL,
        )?)
    }
}

pub fn load_plant_sf(dir: &Path) -> Result<PlantSF, CliError> {
    let b = Bundle::open(dir, BundleKind::StateFeedback)?;
    Ok(PlantSF::new(
        b.generator()?,
        b.matrix("B")?,
        b.matrix("H")?,
        b.matrix("R")?,
    )?)
}

pub fn load_plant_est(dir: &Path) -> Result<PlantEst, CliError> {
    let b = Bundle::open(dir, BundleKind::Estimator)?;
    Ok(PlantEst::new(
        b.generator()?,
        b.matrix("C")?,
        b.matrix("Q")?,
        b.matrix("S")?,
    )?)
}

pub fn load_state_space(dir: &Path) -> Result<StateSpace, CliError> {
    let b = Bundle::open(dir, BundleKind::StateSpace)?;
    let a = b.matrix("A")?;
    let bm = b.matrix("B")?;
    let c = b.matrix("C")?;
    let d = match b.optional("D")? {
        Some(d) => d,
        None => Mat::zeros(c.nrows(), bm.ncols()),
    };
    Ok(StateSpace::new(a, bm, c, d)?)
}
