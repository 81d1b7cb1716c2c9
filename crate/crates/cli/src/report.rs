//! The JSON run report and its table rendering.

use serde::Serialize;
use serde_json::{json, Value};

use formality::formality::{rational_label, Estimate, Numeric, Weighted};
use formality::weights::{WeightEstimate, INTEGRAND_VERSION};
use formality::Rational;

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    #[serde(rename = "integrandVersion")]
    pub integrand_version: String,
    pub code: String,
}

impl Default for Versions {
    fn default() -> Self {
        Versions { integrand_version: INTEGRAND_VERSION.into(), code: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: Value,
    pub seed: u64,
    pub versions: Versions,
    pub results: Value,
    /// For checking commands: whether every check passed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    pub timing: Timing,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub elapsed_ms: u128,
}

impl RunReport {
    pub fn new(command: &str, parameters: Value, seed: u64, results: Value) -> Self {
        RunReport {
            command: command.into(),
            parameters,
            seed,
            versions: Versions::default(),
            results,
            passed: None,
            timing: Timing::default(),
        }
    }

    pub fn with_passed(mut self, passed: bool) -> Self {
        self.passed = Some(passed);
        self
    }

    /// The report without the timing, which is the only part that varies
    /// between identical runs.
    pub fn deterministic_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat `key  value` lines for reading at a terminal.
    pub fn to_table(&self) -> String {
        let mut out = format!("command  {}\nseed     {}\n", self.command, self.seed);
        if let Some(p) = self.passed {
            out += &format!("passed   {p}\n");
        }
        let mut rows = vec![];
        flatten("", &self.results, &mut rows);
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            out += &format!("{k:width$}  {v}\n");
        }
        out += &format!("elapsed  {} ms\n", self.timing.elapsed_ms);
        out
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) if m.get("kind").is_some_and(|k| k == "mc") => {
            let val = m["value"].as_f64().unwrap_or(f64::NAN);
            let err = m["stderr"].as_f64().unwrap_or(f64::NAN);
            rows.push((prefix.into(), format!("{val:.6} ± {err:.2e} (mc)")));
        }
        Value::Object(m) if m.get("kind").is_some_and(|k| k == "exact") => {
            rows.push((prefix.into(), format!("{} (exact)", m["value"])));
        }
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&join(k), x, rows)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&join(&i.to_string()), x, rows)),
        other => rows.push((prefix.into(), other.to_string())),
    }
}

pub fn exact(r: &Rational) -> Value {
    json!({ "kind": "exact", "value": rational_label(r) })
}

pub fn mc(value: f64, stderr: f64, samples: u64) -> Value {
    json!({ "kind": "mc", "value": value, "stderr": stderr, "samples": samples })
}

pub fn weight(w: &WeightEstimate) -> Value {
    mc(w.value, w.stderr, w.samples)
}

pub fn estimate(e: &Estimate, samples: u64) -> Value {
    mc(e.value, e.stderr, samples)
}

pub fn numeric(n: &Numeric, samples: u64) -> Value {
    Value::Object(n.coeffs.iter().map(|(k, e)| (k.clone(), estimate(e, samples))).collect())
}

/// An ħ-coefficient: its exact value when it has one, its symbolic form
/// and its numeric value otherwise.
pub fn weighted<T: std::fmt::Display + formality::linfty::Graded>(w: &Weighted<T>, n: &Numeric, samples: u64) -> Value {
    match w.exact_part() {
        Some(t) if w.is_exact() => json!({ "kind": "exact", "value": t.to_string() }),
        _ if w.terms().is_empty() => json!({ "kind": "exact", "value": "0" }),
        _ => {
            let symbolic: serde_json::Map<String, Value> =
                w.terms().iter().map(|(m, t)| (if m.is_empty() { "1".into() } else { m.join("*") }, Value::String(t.to_string()))).collect();
            json!({ "symbolic": symbolic, "numeric": numeric(n, samples) })
        }
    }
}
