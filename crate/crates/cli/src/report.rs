//! Report documents: JSON trees with every real rounded to 12 significant
//! digits, plus flat CSV tables for sweep findings.
//!
//! Rounding goes through `format!("{:.11e}")`, which is locale-independent;
//! the rounded value is then written in shortest round-trip form, so parsing
//! a report gives back exactly the binary64 it was rendered from.

use myopic_core::search::Finding;
use myopic_core::PolicySpec;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{PolicyChoice, RunConfigDocument};
use crate::error::CliError;

/// Significant digits kept for every real number in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("scientific notation parses")
}

/// Rounds every floating-point number in the tree in place.
pub fn round_tree(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_tree),
        Value::Object(map) => map.values_mut().for_each(round_tree),
        _ => {}
    }
}

/// Converts anything serializable to a JSON tree.
pub fn to_tree<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report values serialize")
}

/// A command's structured output.
#[derive(Debug, Clone)]
pub struct Report {
    command: &'static str,
    inputs: Map<String, Value>,
    result: Map<String, Value>,
}

impl Report {
    /// Empty report for `command`.
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            inputs: Map::new(),
            result: Map::new(),
        }
    }

    /// Records an input parameter.
    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.inputs.insert(key.to_owned(), to_tree(&value));
        self
    }

    /// Records a result value.
    pub fn value(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.result.insert(key.to_owned(), to_tree(&value));
        self
    }

    /// The complete document tree, rounded.
    pub fn tree(&self) -> Value {
        let mut doc = json!({
            "tool": "myopic",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "inputs": self.inputs,
            "result": self.result,
        });
        round_tree(&mut doc);
        doc
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.tree()).expect("tree serializes");
        s.push('\n');
        s
    }
}

/// Report entry for one finding: a re-runnable config, the gap and the witness tree.
pub fn finding_tree(f: &Finding) -> Value {
    let witness = match &f.witness_policy {
        PolicySpec::ExplicitTree(tree) => to_tree(tree),
        other => to_tree(other),
    };
    json!({
        "config": RunConfigDocument::describe(&f.cfg, PolicyChoice::Named(crate::config::PolicyName::Optimal)),
        "gap": f.gap,
        "witness_tree": witness,
    })
}

/// Findings as CSV: one row per finding, beliefs and first action `;`-joined.
pub fn findings_csv(findings: &[Finding]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Output(std::io::Error::other(e));
    w.write_record([
        "channels",
        "sense_k",
        "horizon_T",
        "p01",
        "p11",
        "utility",
        "initial_belief",
        "gap",
        "witness_first_action",
    ])
    .map_err(io)?;
    for f in findings {
        let belief = f
            .cfg
            .initial_belief()
            .as_slice()
            .iter()
            .map(|&x| round_sig(x).to_string())
            .collect::<Vec<_>>()
            .join(";");
        let first = match &f.witness_policy {
            PolicySpec::ExplicitTree(t) => t
                .action()
                .channels()
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            _ => String::new(),
        };
        let utility = match to_tree(&f.cfg.utility()) {
            Value::String(s) => s,
            other => other.to_string(),
        };
        w.write_record([
            f.cfg.channels().to_string(),
            f.cfg.sense_k().to_string(),
            f.cfg.horizon().to_string(),
            round_sig(f.cfg.model().p01()).to_string(),
            round_sig(f.cfg.model().p11()).to_string(),
            utility,
            belief,
            round_sig(f.gap).to_string(),
            first,
        ])
        .map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Output(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits_and_round_trips() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(1.33125e-5), 1.33125e-5);
        assert_eq!(round_sig(-2.0 / 3.0), -0.666666666667);
        assert_eq!(round_sig(0.0), 0.0);
        for x in [1.0 / 7.0, 123456.789012345, 9.99999999999951e-3, 1e-300] {
            let r = round_sig(x);
            let text = serde_json::to_string(&r).unwrap();
            assert_eq!(text.parse::<f64>().unwrap().to_bits(), r.to_bits());
            assert_eq!(round_sig(r), r);
            assert!(((r - x) / x).abs() <= 5e-12);
        }
    }

    #[test]
    fn trees_are_rounded_recursively() {
        let mut r = Report::new("eval");
        r.input("p", 1.0 / 3.0)
            .value("list", [2.0 / 3.0, 1.0])
            .value("n", 7u64);
        let t = r.tree();
        assert_eq!(t["inputs"]["p"], json!(0.333333333333));
        assert_eq!(t["result"]["list"][0], json!(0.666666666667));
        assert_eq!(t["result"]["n"], json!(7));
        assert_eq!(t["command"], "eval");
        assert_eq!(r.to_json(), r.to_json());
    }

    #[test]
    fn non_finite_values_become_null() {
        let mut v = to_tree(&f64::INFINITY);
        round_tree(&mut v);
        assert_eq!(v, Value::Null);
    }
}
