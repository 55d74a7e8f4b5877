//! Deterministic report emission.
//!
//! Reports are JSON documents rendered canonically: object keys sorted,
//! floats in a fixed scientific format with 12 significant digits, no
//! locale- or thread-dependent state. Two runs with the same inputs produce
//! byte-identical output.

use serde_json::Value;

/// Canonical envelope for every CLI report.
///
/// `seed` is `None` for fully deterministic commands; `config` captures the
/// effective options after defaulting, `result` the payload.
pub fn envelope(command: &str, seed: Option<u64>, config: Value, result: Value) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("tool".into(), Value::from("maccoop"));
    map.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    map.insert("command".into(), Value::from(command));
    map.insert(
        "seed".into(),
        seed.map(Value::from).unwrap_or(Value::Null),
    );
    map.insert("config".into(), config);
    map.insert("result".into(), result);
    Value::Object(map)
}

/// Renders a JSON value canonically.
///
/// Keys are emitted in sorted order (the underlying map is ordered), floats
/// as `{:.11e}` (12 significant digits), and non-finite floats as `null`.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| n.is_f64()) {
                if f.is_finite() {
                    out.push_str(&format!("{f:.11e}"));
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings serialize"))
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(indent + 1, out);
                write_value(item, indent + 1, out);
            }
            newline(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            // serde_json's default map is a BTreeMap, so iteration is
            // already key-sorted; sort defensively anyway.
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(indent + 1, out);
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push_str(": ");
                write_value(&map[*key], indent + 1, out);
            }
            newline(indent, out);
            out.push('}');
        }
    }
}

fn newline(indent: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_use_fixed_scientific_format() {
        let v = json!({"x": 0.5, "y": 1.0 / 3.0});
        let s = canonical_json(&v);
        assert!(s.contains("5.00000000000e-1"), "{s}");
        assert!(s.contains("3.33333333333e-1"), "{s}");
    }

    #[test]
    fn integers_stay_integral() {
        let s = canonical_json(&json!({"n": 12, "k": -3}));
        assert!(s.contains("\"n\": 12"));
        assert!(s.contains("\"k\": -3"));
    }

    #[test]
    fn keys_are_sorted() {
        let s = canonical_json(&json!({"zeta": 1, "alpha": 2, "mid": 3}));
        let za = s.find("zeta").unwrap();
        let al = s.find("alpha").unwrap();
        let mi = s.find("mid").unwrap();
        assert!(al < mi && mi < za);
    }

    #[test]
    fn rendering_is_reproducible() {
        let v = envelope("capacity dueck", Some(7), json!({"alphas": "0:1:0.5"}), json!([1.0]));
        assert_eq!(canonical_json(&v), canonical_json(&v));
    }
}
