use std::io::Write;

use probrely::{ConvexSet, Distribution, IpBes, Rational, StateSpace};
use serde_json::{json, Value};

pub fn rational(r: &Rational) -> Value {
    json!({ "exact": r.to_string(), "decimal": r.to_decimal(6) })
}

pub fn dense(mu: &Distribution) -> Value {
    Value::Array(mu.to_dense().iter().map(|w| Value::String(w.to_string())).collect())
}

pub fn set(x: &ConvexSet) -> probrely::Result<Value> {
    Ok(Value::Array(x.vertices()?.iter().map(dense).collect()))
}

pub fn structure(es: &IpBes) -> Value {
    let events: Vec<Value> = es.events().map(|e| json!({ "id": e, "name": es.name(e) })).collect();
    let mut conflicts = Vec::new();
    for a in es.events() {
        for b in es.conflicts(a).iter().filter(|&b| b > a) {
            conflicts.push(json!([a, b]));
        }
    }
    let bundles: Vec<Value> =
        es.bundles().iter().map(|(x, e)| json!({ "from": x.iter().collect::<Vec<_>>(), "to": e })).collect();
    let finals: Vec<Value> = es.finals().iter().map(|f| json!(f.iter().collect::<Vec<_>>())).collect();
    json!({ "events": events, "conflicts": conflicts, "bundles": bundles, "finals": finals })
}

pub fn states(sp: &StateSpace) -> Value {
    json!(sp.names())
}

/// Writes a line to stdout; a closed pipe is not an error.
pub fn line(s: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{s}");
}

pub fn print(v: &Value) {
    line(&serde_json::to_string_pretty(v).expect("values serialize"));
}
