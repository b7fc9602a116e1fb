//! Command output: a flat list of named values rendered as text on stdout
//! and mirrored to JSON or CSV.

use std::fmt::Write as _;

use faer::Mat;
use serde_json::{json, Map, Value};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`-style formatting.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let p = SIGNIFICANT_DIGITS;
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to 12 significant digits; non-finite values become `null`.
pub fn json_number(x: f64) -> Value {
    fmt_g(x)
        .parse::<f64>()
        .ok()
        .and_then(serde_json::Number::from_f64)
        .map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone)]
pub enum Entry {
    Scalar(f64),
    Count(usize),
    Text(String),
    Matrix(Mat<f64>),
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    pub entries: Vec<(String, Entry)>,
    pub table: Option<Table>,
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), fmt_g),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            ..Self::default()
        }
    }

    pub fn scalar(&mut self, name: &str, v: f64) -> &mut Self {
        self.entries.push((name.into(), Entry::Scalar(v)));
        self
    }

    pub fn count(&mut self, name: &str, v: usize) -> &mut Self {
        self.entries.push((name.into(), Entry::Count(v)));
        self
    }

    pub fn text(&mut self, name: &str, v: impl Into<String>) -> &mut Self {
        self.entries.push((name.into(), Entry::Text(v.into())));
        self
    }

    pub fn matrix(&mut self, name: &str, m: Mat<f64>) -> &mut Self {
        self.entries.push((name.into(), Entry::Matrix(m)));
        self
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (name, e) in &self.entries {
            match e {
                Entry::Scalar(v) => writeln!(out, "{name} = {}", fmt_g(*v)),
                Entry::Count(v) => writeln!(out, "{name} = {v}"),
                Entry::Text(v) => writeln!(out, "{name} = {v}"),
                Entry::Matrix(m) if m.nrows() * m.ncols() == 1 => {
                    writeln!(out, "{name} = {}", fmt_g(m[(0, 0)]))
                }
                Entry::Matrix(m) => {
                    let mut s = writeln!(out, "{name} ({}x{}) =", m.nrows(), m.ncols());
                    for i in 0..m.nrows() {
                        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_g(m[(i, j)])).collect();
                        s = s.and(writeln!(out, "  {}", row.join(" ")));
                    }
                    s
                }
            }
            .expect("writing to a String");
        }
        if let Some(t) = &self.table {
            writeln!(
                out,
                "table = {} rows ({})",
                t.rows.len(),
                t.columns.join(", ")
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("command".into(), Value::String(self.command.clone()));
        for (name, e) in &self.entries {
            let v = match e {
                Entry::Scalar(v) => json_number(*v),
                Entry::Count(v) => json!(v),
                Entry::Text(v) => Value::String(v.clone()),
                Entry::Matrix(m) => Value::Array(
                    (0..m.nrows())
                        .map(|i| {
                            Value::Array((0..m.ncols()).map(|j| json_number(m[(i, j)])).collect())
                        })
                        .collect(),
                ),
            };
            obj.insert(name.clone(), v);
        }
        if let Some(t) = &self.table {
            obj.insert(
                "table".into(),
                json!({ "columns": t.columns, "rows": t.rows }),
            );
        }
        Value::Object(obj)
    }

    /// The table if there is one, otherwise `name,value` lines with matrices
    /// flattened as `name[i,j]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.table {
            out.push_str(&t.columns.join(","));
            out.push('\n');
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(cell_text).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            return out;
        }
        out.push_str("name,value\n");
        for (name, e) in &self.entries {
            match e {
                Entry::Scalar(v) => out.push_str(&format!("{name},{}\n", fmt_g(*v))),
                Entry::Count(v) => out.push_str(&format!("{name},{v}\n")),
                Entry::Text(v) => out.push_str(&format!("{name},\"{}\"\n", v.replace('"', "\"\""))),
                Entry::Matrix(m) => {
                    for i in 0..m.nrows() {
                        for j in 0..m.ncols() {
                            out.push_str(&format!("{name}[{i},{j}],{}\n", fmt_g(m[(i, j)])));
                        }
                    }
                }
            }
        }
        out
    }
}
