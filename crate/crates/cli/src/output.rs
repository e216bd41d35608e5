use std::fs;
use std::io::{self, Write};
use std::path::Path;

use bcfb_core::GaussianEngine;
use serde_json::{json, Map, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats `v` with 12 significant digits, in the style of C's `%.12g`.
pub fn sig12(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Builds a JSON document with the provenance fields every output carries.
pub fn document(seed: Option<u64>, tol: Option<f64>, body: Value) -> Value {
    let engine = GaussianEngine::default();
    let mut tolerances = Map::new();
    if let Some(t) = tol {
        tolerances.insert("converse_nats".into(), json!(t));
    }
    tolerances.insert("jitter_rel".into(), json!(engine.jitter_rel));
    tolerances.insert("pinv_rel".into(), json!(engine.pinv_rel));
    let mut doc = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    doc.insert("tool_version".into(), json!(TOOL_VERSION));
    doc.insert("seed".into(), json!(seed));
    doc.insert("tolerances".into(), Value::Object(tolerances));
    Value::Object(doc)
}

pub fn json_text(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Writes `text` to `out`, or to stdout when `out` is absent or `-`/`stdout`.
pub fn emit(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(p) if p != Path::new("-") && p != Path::new("stdout") => fs::write(p, text),
        _ => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}
