use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::error::CliError;

pub const TOOL: &str = "ionjcm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seventeen significant digits in scientific notation; `-0` prints as `0`.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// JSON number carrying exactly the text of [`fmt_f64`]; non-finite values map to null.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_f64(x).parse().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

pub fn complex(z: Complex64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

pub fn complex_list<'a>(zs: impl IntoIterator<Item = &'a Complex64>) -> Value {
    Value::Array(zs.into_iter().map(|&z| complex(z)).collect())
}

pub fn num_list<'a>(xs: impl IntoIterator<Item = &'a f64>) -> Value {
    Value::Array(xs.into_iter().map(|&x| num(x)).collect())
}

/// Builds a JSON object from key/value pairs; keys come out sorted.
pub fn object<const N: usize>(pairs: [(&str, Value); N]) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

#[derive(Clone, Debug)]
pub struct Envelope {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl Envelope {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            config: Map::new(),
            warnings: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.config.insert(key.to_string(), value);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn meta(&self) -> Value {
        object([
            ("command", Value::from(self.command)),
            ("config", Value::Object(self.config.clone())),
            ("tool", Value::from(TOOL)),
            ("version", Value::from(VERSION)),
            (
                "warnings",
                Value::Array(self.warnings.iter().map(|w| Value::from(w.as_str())).collect()),
            ),
        ])
    }

    pub fn csv_preamble(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# tool: {TOOL} {VERSION}").unwrap();
        writeln!(s, "# command: {}", self.command).unwrap();
        writeln!(s, "# config: {}", Value::Object(self.config.clone())).unwrap();
        for w in &self.warnings {
            writeln!(s, "# warning: {}", w.replace('\n', " ")).unwrap();
        }
        s
    }

    /// Wraps a body object with the `meta` envelope.
    pub fn json_document(&self, mut body: Map<String, Value>) -> String {
        body.insert("meta".into(), self.meta());
        let mut s = serde_json::to_string_pretty(&Value::Object(body)).expect("JSON values serialize");
        s.push('\n');
        s
    }
}

pub fn write_output(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, contents).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// `fig1a.csv` -> `fig1a.events.json`.
pub fn events_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.events.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_f64(0.75), "7.5000000000000000e-1");
        assert_eq!(fmt_f64(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(num(0.75).to_string(), "7.5000000000000000e-1");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
        let back: f64 = fmt_f64(0.1 + 0.2).parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn json_keys_are_sorted() {
        let mut env = Envelope::new("roots");
        env.set("zeta", num(1.0));
        env.set("alpha", num(2.0));
        let doc = env.json_document(Map::new());
        let a = doc.find("\"alpha\"").unwrap();
        let z = doc.find("\"zeta\"").unwrap();
        assert!(a < z);
        assert!(doc.find("\"command\"").unwrap() < doc.find("\"tool\"").unwrap());
        assert!(!doc.contains('\r'));
    }

    #[test]
    fn sibling_events_path() {
        assert_eq!(events_path(Path::new("out/fig1a.csv")), PathBuf::from("out/fig1a.events.json"));
        assert_eq!(events_path(Path::new("scan")), PathBuf::from("scan.events.json"));
    }
}
