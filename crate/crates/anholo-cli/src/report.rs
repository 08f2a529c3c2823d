//! Reports: JSON with stable key order and 17 significant digits, plus CSV tables.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

pub const REPORT_SCHEMA_VERSION: &str = "1.0.0";

/// Prints a float with 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A float as a JSON value; non-finite numbers become null.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

pub fn vec1(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn vec2(v: &[Vec<f64>]) -> Value {
    Value::Array(v.iter().map(|r| vec1(r)).collect())
}

pub fn vec3(v: &[Vec<Vec<f64>>]) -> Value {
    Value::Array(v.iter().map(|r| vec2(r)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Outcome of one command, serialized as the JSON report.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub op: Option<String>,
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
    pub results: Map<String, Value>,
    pub notes: Vec<String>,
    pub error: Option<(String, String)>,
}

impl Report {
    pub fn new(command: &str, op: Option<&str>) -> Report {
        Report {
            command: command.to_string(),
            op: op.map(|s| s.to_string()),
            scenario: None,
            seed: None,
            checks: Vec::new(),
            results: Map::new(),
            notes: Vec::new(),
            error: None,
        }
    }

    /// Records `value ≤ tolerance`; NaN fails.
    pub fn check(&mut self, name: &str, value: f64, tolerance: f64) -> bool {
        let pass = value <= tolerance;
        self.checks.push(Check { name: name.to_string(), value, tolerance, pass });
        pass
    }

    pub fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.to_string(), v.into());
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn status(&self) -> &'static str {
        if self.error.is_some() {
            "error"
        } else if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }

    pub fn to_value(&self) -> Value {
        let mut o = Map::new();
        o.insert("schema_version".into(), REPORT_SCHEMA_VERSION.into());
        o.insert("tool".into(), format!("anholo {}", env!("CARGO_PKG_VERSION")).into());
        o.insert("command".into(), self.command.clone().into());
        o.insert("op".into(), self.op.clone().map(Value::from).unwrap_or(Value::Null));
        o.insert("scenario".into(), self.scenario.clone().map(Value::from).unwrap_or(Value::Null));
        o.insert("seed".into(), self.seed.map(Value::from).unwrap_or(Value::Null));
        o.insert("status".into(), self.status().into());
        let checks = self
            .checks
            .iter()
            .map(|c| {
                let mut m = Map::new();
                m.insert("name".into(), c.name.clone().into());
                m.insert("value".into(), num(c.value));
                m.insert("tolerance".into(), num(c.tolerance));
                m.insert("pass".into(), c.pass.into());
                Value::Object(m)
            })
            .collect();
        o.insert("checks".into(), Value::Array(checks));
        o.insert("results".into(), Value::Object(self.results.clone()));
        o.insert("notes".into(), Value::Array(self.notes.iter().map(|s| Value::from(s.as_str())).collect()));
        o.insert(
            "error".into(),
            match &self.error {
                Some((kind, msg)) => {
                    let mut m = Map::new();
                    m.insert("kind".into(), kind.clone().into());
                    m.insert("message".into(), msg.clone().into());
                    Value::Object(m)
                }
                None => Value::Null,
            },
        );
        Value::Object(o)
    }

    pub fn to_json(&self) -> String {
        to_json_string(&self.to_value())
    }
}

/// Pretty printer that writes floats with 17 significant digits.
struct Fmt17<'a>(PrettyFormatter<'a>);

impl Formatter for Fmt17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fmt17(PrettyFormatter::new()));
    v.serialize(&mut ser).expect("serializing a JSON value to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// A rectangular table written as RFC 4180 CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Table {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory CSV write");
        for r in &self.rows {
            w.write_record(r.iter().map(|&v| fmt_f64(v))).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid_json_with_version() {
        let r = Report::new("verify", None);
        let text = r.to_json();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], REPORT_SCHEMA_VERSION);
        assert_eq!(v["checks"], Value::Array(vec![]));
        assert_eq!(v["results"], Value::Object(Map::new()));
        assert_eq!(v["status"], "pass");
    }

    #[test]
    fn floats_have_17_significant_digits_and_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -2.5] {
            let s = fmt_f64(x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        let text = to_json_string(&serde_json::json!({"a": 0.1, "b": [1.5, 2]}));
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("1.5000000000000000e0"));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
        assert_eq!(back["b"][1], 2);
    }

    #[test]
    fn key_order_is_insertion_order() {
        let mut r = Report::new("mech", Some("hessian"));
        r.put("zeta", 1);
        r.put("alpha", 2);
        let text = r.to_json();
        assert!(text.find("\"zeta\"").unwrap() < text.find("\"alpha\"").unwrap());
        assert!(text.find("\"schema_version\"").unwrap() < text.find("\"command\"").unwrap());
    }

    #[test]
    fn nan_is_null_and_fails_checks() {
        let mut r = Report::new("verify", None);
        assert!(!r.check("x", f64::NAN, 1.0));
        assert_eq!(num(f64::INFINITY), Value::Null);
        assert_eq!(r.status(), "fail");
    }

    #[test]
    fn csv_is_rfc4180() {
        let mut t = Table::new(vec!["t".into(), "x1".into()]);
        t.push(vec![0.0, 1.0]);
        let s = t.to_csv();
        assert_eq!(s, "t,x1\r\n0.0000000000000000e0,1.0000000000000000e0\r\n");
    }
}
