//! Stable-ordered report structure the command line emits: same input, same
//! flags, same bytes, in JSON or as plain text.

use crate::fixtures::MatrixData;
use crate::linalg::CMat;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct KeyValue {
    pub key: String,
    pub value: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub name: String,
    pub value: f64,
    /// The bound the value was held against.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// One command's findings.  Field order is emission order; every entry is
/// appended exactly once, so rendered bytes depend only on the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub input: String,
    pub digest: String,
    /// Truncation frontier every claim is subject to.
    pub fock_level: usize,
    pub tol: f64,
    pub verdicts: Vec<KeyValue>,
    pub residuals: Vec<ResidualRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
    /// Wall-clock cost; only present on request since it varies run to run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
    #[serde(skip)]
    pub exit_code: i32,
}

impl Report {
    pub fn new(command: &str, input: &str, digest: &str, fock_level: usize, tol: f64) -> Report {
        Report {
            command: command.into(),
            input: input.into(),
            digest: digest.into(),
            fock_level,
            tol,
            verdicts: Vec::new(),
            residuals: Vec::new(),
            tables: Vec::new(),
            timing_ms: None,
            exit_code: 0,
        }
    }

    pub fn verdict(&mut self, key: &str, value: impl Into<Value>) {
        self.verdicts.push(KeyValue { key: key.into(), value: value.into() });
    }

    pub fn residual(&mut self, name: &str, value: f64, tolerance: f64) {
        self.residuals.push(ResidualRow { name: name.into(), value, tolerance });
    }

    pub fn table(&mut self, title: &str, columns: &[&str], rows: Vec<Vec<String>>) {
        self.tables.push(Table {
            title: title.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
        });
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let mut s = serde_json::to_string_pretty(self).expect("report serializes");
            s.push('\n');
            return s;
        }
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.command, self.input));
        out.push_str(&format!("  digest {}  frontier N={}  tol {:e}\n", self.digest, self.fock_level, self.tol));
        if !self.verdicts.is_empty() {
            out.push_str("verdicts\n");
            for kv in &self.verdicts {
                out.push_str(&format!("  {:<28} {}\n", kv.key, render_value(&kv.value)));
            }
        }
        if !self.residuals.is_empty() {
            out.push_str("residuals (value / allowed)\n");
            for r in &self.residuals {
                out.push_str(&format!("  {:<28} {:.6e} / {:.1e}\n", r.name, r.value, r.tolerance));
            }
        }
        for t in &self.tables {
            out.push_str(&format!("table: {}\n", t.title));
            out.push_str(&format!("  {}\n", t.columns.join(" | ")));
            for row in &t.rows {
                out.push_str(&format!("  {}\n", row.join(" | ")));
            }
        }
        if let Some(ms) = self.timing_ms {
            out.push_str(&format!("elapsed {ms} ms\n"));
        }
        out
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// FNV-1a digest of the raw input bytes, eight hex digits.
pub fn digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{:016x}", h)
}

pub fn matrix_value(m: &CMat) -> Value {
    serde_json::to_value(MatrixData::from_mat(m)).expect("matrix serializes")
}

/// Symbols travel as their coefficient list.
pub fn coefficients_value(coeffs: &[CMat]) -> Value {
    serde_json::json!({
        "coefficients": coeffs.iter().map(matrix_value).collect::<Vec<_>>(),
    })
}

/// Complex scalar as a [re, im] pair.
pub fn complex_value(z: num_complex::Complex64) -> Value {
    serde_json::json!([z.re, z.im])
}

/// Fixed-precision scientific text for table cells.
pub fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

/// Compact complex text for table cells.
pub fn cforms(z: num_complex::Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.6e}", z.re)
    } else {
        format!("{:.6e}{:+.6e}i", z.re, z.im)
    }
}
