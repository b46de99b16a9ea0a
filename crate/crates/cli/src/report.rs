//! Command reports: one JSON value per command, printed either as JSON or as
//! indented `key: value` lines. Numbers carry 6 significant digits either way.

use serde_json::{Map, Value};

pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(round6(x)).map_or(Value::Null, Value::Number)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn fmt_num(n: &serde_json::Number) -> String {
    match n.as_f64() {
        Some(x) if !(n.is_i64() || n.is_u64()) => {
            let a = x.abs();
            if a != 0.0 && !(1e-4..1e6).contains(&a) {
                format!("{x:.5e}")
            } else {
                let digits = if a == 0.0 { 0 } else { 5 - a.log10().floor() as i32 };
                let s = format!("{x:.*}", digits.max(0) as usize);
                if s.contains('.') {
                    s.trim_end_matches('0').trim_end_matches('.').to_string()
                } else {
                    s
                }
            }
        }
        _ => n.to_string(),
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(fmt_num(n)),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => Some(format!(
            "[{}]",
            items.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")
        )),
        _ => None,
    }
}

fn render_object(map: &Map<String, Value>, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for (k, v) in map {
        if let Some(s) = scalar(v) {
            out.push_str(&format!("{pad}{k}: {s}\n"));
            continue;
        }
        out.push_str(&format!("{pad}{k}:\n"));
        match v {
            Value::Object(m) => render_object(m, indent + 1, out),
            Value::Array(items) => {
                for item in items {
                    match item {
                        Value::Object(m) => {
                            out.push_str(&format!("{pad}  -\n"));
                            render_object(m, indent + 2, out);
                        }
                        other => out.push_str(&format!("{pad}  - {}\n", scalar(other).unwrap_or_default())),
                    }
                }
            }
            _ => {}
        }
    }
}

pub fn render(report: &Value, json: bool) -> String {
    if json {
        return serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    }
    let mut out = String::new();
    match report {
        Value::Object(m) => render_object(m, 0, &mut out),
        other => out.push_str(&scalar(other).unwrap_or_default()),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn six_significant_digits() {
        assert_eq!(round6(1.234567891), 1.23457);
        assert_eq!(round6(0.000123456789), 0.000123457);
        let r = json!({"d": num(0.654321987), "n": 3, "big": num(123456789.0), "r": num(f64::INFINITY)});
        let text = render(&r, false);
        assert!(text.contains("d: 0.654322"), "{text}");
        assert!(text.contains("n: 3"));
        assert!(text.contains("big: 1.23457e8"), "{text}");
        assert!(text.contains("r: inf"));
    }
}
