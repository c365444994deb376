//! The single JSON document written by every command.

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const SCHEMA: &str = "superint-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        }
    }
}

/// Outcome of one command before rendering.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub warnings: Vec<String>,
    pub result: Value,
    /// Human-readable table lines.
    pub text: Vec<String>,
    pub latex: Option<String>,
}

impl Outcome {
    pub fn new(status: Status, result: Value) -> Self {
        Outcome { status, warnings: Vec::new(), result, text: Vec::new(), latex: None }
    }

    /// Failure report for an error raised after the configuration was accepted.
    pub fn error(message: String) -> Self {
        let mut o = Outcome::new(Status::Error, serde_json::json!({ "error": message }));
        o.text.push(format!("error: {message}"));
        o
    }
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub schema: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub status: Status,
    pub warnings: &'a [String],
    pub result: &'a Value,
}

/// Pretty JSON with a trailing newline; no timings or paths, so equal
/// inputs give equal bytes.
pub fn render_json(command: &str, config: &RunConfig, o: &Outcome) -> String {
    let r = Report { schema: SCHEMA, command, config, status: o.status, warnings: &o.warnings, result: &o.result };
    let mut s = serde_json::to_string_pretty(&r).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_text(command: &str, o: &Outcome) -> String {
    let mut s = format!("superint {command}: {}\n", o.status.label());
    for l in &o.text {
        s.push_str(l);
        s.push('\n');
    }
    for w in &o.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

/// `1.234e-5` style with three significant digits for tables.
pub fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_is_versioned_and_ordered() {
        let cfg = RunConfig { case: Some("polar-flat".into()), ..Default::default() };
        let mut o = Outcome::new(Status::Pass, serde_json::json!({"n": 1}));
        o.warnings.push("w".into());
        let s = render_json("verify", &cfg, &o);
        assert_eq!(
            s,
            "{\n  \"schema\": \"superint-report/1\",\n  \"command\": \"verify\",\n  \"config\": {\n    \"case\": \"polar-flat\"\n  },\n  \"status\": \"pass\",\n  \"warnings\": [\n    \"w\"\n  ],\n  \"result\": {\n    \"n\": 1\n  }\n}\n"
        );
    }

    #[test]
    fn text_lists_warnings_last() {
        let mut o = Outcome::new(Status::Fail, Value::Null);
        o.text.push("row".into());
        o.warnings.push("careful".into());
        assert_eq!(render_text("numcheck", &o), "superint numcheck: FAIL\nrow\nwarning: careful\n");
    }
}
