//! Deterministic JSON output: every float rounded to 15 significant digits.

use std::path::Path;

use anyhow::{Context, Result};
use nodal_core::output::round15;
use serde::Serialize;
use serde_json::Value;

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round15(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes `value` with rounded floats, pretty-printed, newline-terminated.
pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_string(value)?).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_rounded() {
        let s = to_string(&serde_json::json!({"a": 0.1 + 0.2, "b": [1, 2.0], "c": "x"})).unwrap();
        assert!(s.contains("\"a\": 0.3"));
        assert!(s.contains("2.0"));
        assert!(s.ends_with("}\n"));
    }
}
