//! JSON run records with every float cut to 12 significant digits.

use serde::Serialize;
use serde_json::{json, Value};
use willmore_lab::report::Check;

/// Round `x` to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = json!(sig12(x));
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Result of one subcommand, ready to print.
pub struct Record {
    pub command: &'static str,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
}

impl Record {
    pub fn new(command: &'static str, inputs: &impl Serialize) -> Self {
        Record {
            command,
            inputs: serde_json::to_value(inputs).unwrap_or(Value::Null),
            results: json!({}),
            checks: vec![],
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "checks": self.checks,
            "pass": self.pass(),
        });
        round_floats(&mut v);
        serde_json::to_string_pretty(&v).expect("serializable")
    }
}

pub fn error_json(command: &str, kind: &str, message: &str) -> String {
    serde_json::to_string_pretty(&json!({
        "command": command,
        "error": { "kind": kind, "message": message },
        "pass": false,
    }))
    .expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(19.739208802178716), 19.7392088022);
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        let mut v = json!({"a": [1.0 / 3.0, 2], "b": {"c": 2.0f64.sqrt()}});
        round_floats(&mut v);
        assert_eq!(v.to_string(), r#"{"a":[0.333333333333,2],"b":{"c":1.41421356237}}"#);
    }
}
