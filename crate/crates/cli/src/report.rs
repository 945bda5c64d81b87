//! Reports: an ordered JSON document rendered either as JSON or as
//! indented `key: value` text.

use serde_json::{Map, Value};

/// Insertion-ordered report builder.
#[derive(Debug, Clone, Default)]
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn set_f64(&mut self, key: &str, x: f64) -> &mut Self {
        self.set(key, float(x))
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.fields)
    }
}

impl From<Report> for Value {
    fn from(r: Report) -> Value {
        r.into_value()
    }
}

/// A float as a JSON value; non-finite values become the strings `inf`,
/// `-inf` and `nan`.
pub fn float(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| float(x)).collect())
}

pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report values serialize");
    s.push('\n');
    s
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Object(_) | Value::Array(_))
}

pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    match v {
        Value::Object(m) => write_object(m, 0, &mut out),
        other => {
            out.push_str(&scalar(other));
            out.push('\n');
        }
    }
    out
}

fn write_object(m: &Map<String, Value>, indent: usize, out: &mut String) {
    for (k, v) in m {
        write_entry(k, v, indent, out);
    }
}

fn write_entry(k: &str, v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(m) if m.is_empty() => out.push_str(&format!("{pad}{k}: {{}}\n")),
        Value::Object(m) => {
            out.push_str(&format!("{pad}{k}:\n"));
            write_object(m, indent + 2, out);
        }
        Value::Array(a) if a.iter().all(is_scalar) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            out.push_str(&format!("{pad}{k}: [{}]\n", items.join(", ")));
        }
        Value::Array(a) => {
            out.push_str(&format!("{pad}{k}:\n"));
            for item in a {
                write_item(item, indent + 2, out);
            }
        }
        other => out.push_str(&format!("{pad}{k}: {}\n", scalar(other))),
    }
}

fn write_item(v: &Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(m) if !m.is_empty() => {
            let mut first = true;
            for (k, val) in m {
                let mut line = String::new();
                write_entry(k, val, indent + 2, &mut line);
                if first {
                    // Replace the leading indentation of the first line with the bullet.
                    out.push_str(&pad);
                    out.push_str("- ");
                    out.push_str(&line[indent + 2..]);
                    first = false;
                } else {
                    out.push_str(&line);
                }
            }
        }
        Value::Array(a) if !a.iter().all(is_scalar) => {
            out.push_str(&format!("{pad}-\n"));
            for item in a {
                write_item(item, indent + 2, out);
            }
        }
        Value::Array(a) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            out.push_str(&format!("{pad}- [{}]\n", items.join(", ")));
        }
        other => out.push_str(&format!("{pad}- {}\n", scalar(other))),
    }
}
