//! Line-delimited JSON report records.

use std::io::Write;

use serde_json::{Map, Number, Value};

const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to 12 significant digits so recorded decimals do not depend
/// on last-bit floating-point noise.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"));
            Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// Writes one self-describing record per line: `{"kind": ..., "tick": ..., ...}`.
pub struct Reporter<W: Write> {
    out: W,
    tick: u64,
}

impl<W: Write> Reporter<W> {
    pub fn new(out: W) -> Self {
        Reporter { out, tick: 0 }
    }

    /// `fields` must serialize to an object.
    pub fn emit(&mut self, kind: &str, fields: Value) -> std::io::Result<()> {
        let mut rec = Map::new();
        rec.insert("kind".into(), Value::from(kind));
        rec.insert("tick".into(), Value::from(self.tick));
        match normalize(fields) {
            Value::Object(o) => rec.extend(o),
            Value::Null => {}
            other => {
                rec.insert("value".into(), other);
            }
        }
        self.tick += 1;
        serde_json::to_writer(&mut self.out, &Value::Object(rec))?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
