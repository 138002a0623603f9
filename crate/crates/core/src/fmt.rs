//! Float output at nine significant digits, so reruns are byte-identical.

use serde::Serialize;
use serde_json::Value;

pub fn round_sig9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

pub fn sig9(v: f64) -> String {
    format!("{}", round_sig9(v))
}

/// Rounds every float inside a JSON value.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig9(n.as_f64().expect("f64 number"));
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn rounded<T: Serialize>(v: &T) -> Value {
    let mut value = serde_json::to_value(v).expect("serializable");
    round_json(&mut value);
    value
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(&rounded(v)).expect("serializable");
    s.push('\n');
    s
}

pub fn to_json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(&rounded(v)).expect("serializable");
    s.push('\n');
    s
}
