//! Deterministic report rendering: JSON with sorted keys and 17 significant
//! digits for floats, or flat `key,value` CSV.

use std::fmt::Write;

use serde_json::Value;

fn write_number(n: &serde_json::Number, out: &mut String) {
    if n.is_i64() || n.is_u64() {
        write!(out, "{n}").unwrap();
    } else {
        let f = n.as_f64().unwrap_or(f64::NAN);
        write!(out, "{f:.16e}").unwrap();
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("strings serialize"));
}

fn newline(out: &mut String, depth: usize) {
    out.push('\n');
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, out: &mut String, depth: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out),
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // short arrays of scalars stay on one line
            let flat = items.len() <= 8 && items.iter().all(|x| !x.is_array() && !x.is_object())
                || items.iter().all(|x| matches!(x, Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_number)));
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if flat {
                        out.push(' ');
                    }
                }
                if !flat {
                    newline(out, depth + 1);
                }
                write_value(x, out, depth + 1);
            }
            if !flat {
                newline(out, depth);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, x)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write_string(k, out);
                out.push_str(": ");
                write_value(x, out, depth + 1);
            }
            newline(out, depth);
            out.push('}');
        }
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out, 0);
    out.push('\n');
    out
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, rows);
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                rows.push((prefix.to_string(), String::new()));
            }
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, rows);
            }
        }
        Value::Number(n) => {
            let mut s = String::new();
            write_number(n, &mut s);
            rows.push((prefix.to_string(), s));
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv_string(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, x) in rows {
        out.push_str(&csv_field(&k));
        out.push(',');
        out.push_str(&csv_field(&x));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_keep_seventeen_digits() {
        let s = to_json_string(&json!({"x": 0.1, "n": 3, "b": [1.5, 2]}));
        assert!(s.contains("1.0000000000000001e-1"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
        assert_eq!(back["n"], 3);
        assert!(s.find("\"b\"").unwrap() < s.find("\"n\"").unwrap());
    }

    #[test]
    fn csv_flattens_paths() {
        let s = to_csv_string(&json!({"a": {"b": [1, "x,y"]}}));
        assert_eq!(s, "key,value\na.b[0],1\na.b[1],\"x,y\"\n");
    }
}
