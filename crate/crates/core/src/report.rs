//! Structured scenario results. Kept serialization-free; the CLI turns these
//! into JSON, CSV or tables.

/// A result value. Maps keep insertion order.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
    List(Vec<Value>),
    Map(Vec<(String, Value)>),
    Null,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Number(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Integer(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Integer(v as i64)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Integer(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

impl<T: Into<Value>> From<Vec<T>> for Value {
    fn from(v: Vec<T>) -> Self {
        Value::List(v.into_iter().map(Into::into).collect())
    }
}

/// Builder for [`Value::Map`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapBuilder(Vec<(String, Value)>);

impl MapBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    pub fn push(&mut self, key: &str, value: impl Into<Value>) {
        self.0.push((key.to_string(), value.into()));
    }

    pub fn build(self) -> Value {
        Value::Map(self.0)
    }
}

/// Comparison behind a [`Check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// `|actual − expected| ≤ tolerance`
    Close,
    /// `actual ≤ expected + tolerance`
    AtMost,
    /// `actual ≥ expected − tolerance`
    AtLeast,
}

/// One named pass/fail check with an explicit tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn close(name: impl Into<String>, expected: f64, actual: f64, tolerance: f64) -> Self {
        let pass = (actual - expected).abs() <= tolerance;
        Self::build(name, expected, actual, tolerance, Comparison::Close, pass)
    }

    pub fn at_most(name: impl Into<String>, bound: f64, actual: f64, tolerance: f64) -> Self {
        let pass = actual <= bound + tolerance;
        Self::build(name, bound, actual, tolerance, Comparison::AtMost, pass)
    }

    pub fn at_least(name: impl Into<String>, bound: f64, actual: f64, tolerance: f64) -> Self {
        let pass = actual >= bound - tolerance;
        Self::build(name, bound, actual, tolerance, Comparison::AtLeast, pass)
    }

    /// Boolean check encoded as 1/0 with zero tolerance.
    pub fn flag(name: impl Into<String>, expected: bool, actual: bool) -> Self {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        Self::close(name, b(expected), b(actual), 0.0)
    }

    fn build(
        name: impl Into<String>,
        expected: f64,
        actual: f64,
        tolerance: f64,
        comparison: Comparison,
        pass: bool,
    ) -> Self {
        // NaN never passes.
        let pass = pass && actual.is_finite();
        Self { name: name.into(), expected, actual, tolerance, comparison, pass }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: String,
    pub parameters: Vec<(String, Value)>,
    pub results: Vec<(String, Value)>,
    pub checks: Vec<Check>,
}

impl ScenarioReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            parameters: Vec::new(),
            results: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn parameter(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.push((key.to_string(), value.into()));
        self
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.results.push((key.to_string(), value.into()));
        self
    }

    pub fn check(&mut self, check: Check) -> &mut Self {
        self.checks.push(check);
        self
    }

    pub fn get_result(&self, key: &str) -> Option<&Value> {
        self.results.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Appends another report's checks (prefixed) and results (nested).
    pub fn absorb(&mut self, prefix: &str, other: ScenarioReport) {
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.checks.push(c);
        }
        self.results.push((prefix.to_string(), Value::Map(other.results)));
    }
}
