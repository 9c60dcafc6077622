//! Deterministic text output: every float is written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::CliError;

/// `{:.16e}` for finite values, `NaN`/`inf`/`-inf` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with two-space indentation and fixed float formatting.
pub fn to_json_string(v: &Value) -> String {
    let mut s = String::new();
    write_value(&mut s, v, 0);
    s.push('\n');
    s
}

fn write_value(s: &mut String, v: &Value, depth: usize) {
    let pad = |s: &mut String, d: usize| s.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => s.push_str("null"),
        Value::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => {
                let _ = write!(s, "{u}");
            }
            (_, Some(i), _) => {
                let _ = write!(s, "{i}");
            }
            (_, _, Some(x)) => s.push_str(&fmt_f64(x)),
            _ => s.push_str("null"),
        },
        Value::String(t) => s.push_str(&serde_json::to_string(t).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                s.push_str("[]");
                return;
            }
            // short numeric rows stay on one line
            if items.iter().all(|x| x.is_number() || x.is_null()) && items.len() <= 8 {
                s.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        s.push_str(", ");
                    }
                    write_value(s, x, depth);
                }
                s.push(']');
                return;
            }
            s.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                pad(s, depth + 1);
                write_value(s, x, depth + 1);
                s.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(s, depth);
            s.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                s.push_str("{}");
                return;
            }
            s.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                pad(s, depth + 1);
                s.push_str(&serde_json::to_string(key).expect("string serializes"));
                s.push_str(": ");
                write_value(s, x, depth + 1);
                s.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(s, depth);
            s.push('}');
        }
    }
}

/// Writes to `path`, or stdout when absent.
pub fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
