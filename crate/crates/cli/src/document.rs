//! Serialized form of a [`ScenarioReport`]: JSON, CSV or a plain table.

use std::io;

use friendsim::qsim::GENERATOR_NAME;
use friendsim::report::{Check, Comparison, ScenarioReport, Value};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub const SCHEMA_VERSION: &str = "friendsim-report/1";

/// Digits written for every float in JSON output.
pub const SIGNIFICANT_DIGITS: usize = 17;

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub comparison: &'static str,
    pub pass: bool,
}

impl From<&Check> for CheckEntry {
    fn from(c: &Check) -> Self {
        Self {
            name: c.name.clone(),
            expected: c.expected,
            actual: c.actual,
            tolerance: c.tolerance,
            comparison: match c.comparison {
                Comparison::Close => "close",
                Comparison::AtMost => "at_most",
                Comparison::AtLeast => "at_least",
            },
            pass: c.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub schema_version: &'static str,
    pub scenario: String,
    pub conventions: serde_json::Value,
    pub parameters: serde_json::Value,
    pub results: serde_json::Value,
    pub checks: Vec<CheckEntry>,
    pub all_passed: bool,
}

fn conventions() -> serde_json::Value {
    serde_json::json!({
        "register_order": "big-endian: first register is the most significant digit",
        "spin_basis": "[up, down]; spin(phi) = cos(phi) Z + sin(phi) X",
        "up_phi": "(cos(phi/2), sin(phi/2))",
        "down_phi": "(-sin(phi/2), cos(phi/2))",
        "outcome_values": "up/+1/heads -> +1, down/-1/tails -> -1",
        "rng": GENERATOR_NAME,
    })
}

pub fn to_json_value(v: &Value) -> serde_json::Value {
    match v {
        Value::Number(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
        Value::Integer(i) => (*i).into(),
        Value::Bool(b) => (*b).into(),
        Value::Text(s) => s.clone().into(),
        Value::List(items) => items.iter().map(to_json_value).collect(),
        Value::Map(entries) => map_value(entries),
        Value::Null => serde_json::Value::Null,
    }
}

fn map_value(entries: &[(String, Value)]) -> serde_json::Value {
    serde_json::Value::Object(entries.iter().map(|(k, v)| (k.clone(), to_json_value(v))).collect())
}

impl From<&ScenarioReport> for ReportDocument {
    fn from(r: &ScenarioReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: r.scenario.clone(),
            conventions: conventions(),
            parameters: map_value(&r.parameters),
            results: map_value(&r.results),
            checks: r.checks.iter().map(CheckEntry::from).collect(),
            all_passed: r.all_passed(),
        }
    }
}

/// `%.{digits}g`-style rendering that always stays a JSON float.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits_only: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    if exp < -5 || exp >= digits as i32 {
        let m = mantissa.trim_end_matches('0');
        let m = if m.ends_with('.') { format!("{m}0") } else { m.to_string() };
        return format!("{sign}{m}e{exp}");
    }
    let (int, frac) = if exp >= 0 {
        let split = exp as usize + 1;
        (digits_only[..split].to_string(), digits_only[split..].to_string())
    } else {
        ("0".to_string(), format!("{}{}", "0".repeat((-exp - 1) as usize), digits_only))
    };
    let frac = frac.trim_end_matches('0');
    let frac = if frac.is_empty() { "0" } else { frac };
    format!("{sign}{int}.{frac}")
}

/// Pretty JSON with every float written to [`SIGNIFICANT_DIGITS`].
struct SignificantFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SignificantFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_significant(value, SIGNIFICANT_DIGITS).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
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

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantFormatter(PrettyFormatter::new()));
        self.serialize(&mut ser).expect("in-memory serialization");
        out.push(b'\n');
        String::from_utf8(out).expect("serde_json writes UTF-8")
    }
}

fn flatten(prefix: &str, v: &Value, digits: usize, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Map(entries) => {
            for (k, v) in entries {
                flatten(&key(k), v, digits, out);
            }
        }
        Value::List(items) if items.iter().all(|i| !matches!(i, Value::Map(_) | Value::List(_))) => {
            let parts: Vec<String> = items.iter().map(|i| scalar_text(i, digits)).collect();
            out.push((prefix.to_string(), format!("[{}]", parts.join(", "))));
        }
        Value::List(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, digits, out);
            }
        }
        other => out.push((prefix.to_string(), scalar_text(other, digits))),
    }
}

fn scalar_text(v: &Value, digits: usize) -> String {
    match v {
        Value::Number(x) => number(*x, digits),
        Value::Integer(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Text(s) => s.clone(),
        Value::Null => "-".into(),
        nested => format!("{nested:?}"),
    }
}

/// Table cells use fewer digits than JSON and CSV.
const TABLE_DIGITS: usize = 12;

fn number(x: f64, digits: usize) -> String {
    if x.is_finite() {
        format_significant(x, digits)
    } else {
        format!("{x}")
    }
}

fn rows(entries: &[(String, Value)], digits: usize) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (k, v) in entries {
        flatten(k, v, digits, &mut out);
    }
    out
}

pub fn to_table(r: &ScenarioReport) -> String {
    let params = rows(&r.parameters, TABLE_DIGITS);
    let results = rows(&r.results, TABLE_DIGITS);
    let width = params
        .iter()
        .chain(&results)
        .map(|(k, _)| k.len())
        .chain(r.checks.iter().map(|c| c.name.len()))
        .max()
        .unwrap_or(0);
    let mut s = format!("scenario: {}\n", r.scenario);
    for (title, block) in [("parameters", &params), ("results", &results)] {
        if block.is_empty() {
            continue;
        }
        s.push_str(&format!("\n{title}\n"));
        for (k, v) in block {
            s.push_str(&format!("  {k:<width$}  {v}\n"));
        }
    }
    if !r.checks.is_empty() {
        s.push_str("\nchecks\n");
        for c in &r.checks {
            let op = match c.comparison {
                Comparison::Close => "≈",
                Comparison::AtMost => "≤",
                Comparison::AtLeast => "≥",
            };
            s.push_str(&format!(
                "  {}  {:<width$}  {} {op} {} (tol {:e})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                number(c.actual, TABLE_DIGITS),
                number(c.expected, TABLE_DIGITS),
                c.tolerance
            ));
        }
        let failed = r.checks.iter().filter(|c| !c.pass).count();
        s.push_str(&format!("\n{} checks, {failed} failed\n", r.checks.len()));
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per parameter, result leaf and check.
pub fn to_csv(r: &ScenarioReport) -> String {
    let mut s = String::from("section,key,value,expected,tolerance,pass\n");
    for (section, block) in [("parameter", rows(&r.parameters, SIGNIFICANT_DIGITS)), ("result", rows(&r.results, SIGNIFICANT_DIGITS))] {
        for (k, v) in block {
            s.push_str(&format!("{section},{},{},,,\n", csv_field(&k), csv_field(&v)));
        }
    }
    for c in &r.checks {
        s.push_str(&format!(
            "check,{},{},{},{},{}\n",
            csv_field(&c.name),
            number(c.actual, SIGNIFICANT_DIGITS),
            number(c.expected, SIGNIFICANT_DIGITS),
            number(c.tolerance, SIGNIFICANT_DIGITS),
            c.pass
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_significant(1.0 / 12.0, 17), "0.083333333333333329");
        assert_eq!(format_significant(1.0, 17), "1.0");
        assert_eq!(format_significant(-2.0 * 2f64.sqrt(), 17), "-2.8284271247461903");
        assert_eq!(format_significant(1e-7, 17), "9.9999999999999995e-8");
        assert_eq!(format_significant(1.5e-7, 17), "1.4999999999999999e-7");
        assert_eq!(format_significant(123456.5, 17), "123456.5");
        assert_eq!(format_significant(0.0, 17), "0.0");
        assert_eq!(format_significant(1e20, 17), "1.0e20");
        for v in [0.1, 1.0 / 3.0, 5.0 / 6.0, -1e-300, 6.02e23] {
            let s = format_significant(v, 17);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn json_keeps_insertion_order_and_is_valid() {
        let mut r = ScenarioReport::new("t");
        r.result("zeta", 0.5).result("alpha", 1.0 / 3.0);
        r.check(Check::close("c", 1.0, 1.0, 1e-12));
        let json = ReportDocument::from(&r).to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["results"]["alpha"], 1.0 / 3.0);
        assert!(json.find("zeta").unwrap() < json.find("alpha").unwrap());
        assert!(json.contains("0.33333333333333331"));
    }

    #[test]
    fn table_and_csv_list_every_check() {
        let mut r = ScenarioReport::new("t");
        r.result("m", friendsim::report::MapBuilder::new().with("x", 1.0).build());
        r.check(Check::close("good", 1.0, 1.0, 0.0)).check(Check::close("bad", 1.0, 2.0, 0.0));
        let t = to_table(&r);
        assert!(t.contains("PASS  good") && t.contains("FAIL  bad") && t.contains("m.x"));
        let c = to_csv(&r);
        assert_eq!(c.lines().count(), 4);
        assert!(c.contains("result,m.x,1.0,,,"));
    }
}
