//! The declarative test format: a YAML document with a top-level `tests`
//! list, one entry per HTTP test case. Parsing validates every invariant,
//! serialization is canonical (fixed key order, two-space indent, LF line
//! endings) so suites diff cleanly, and [`extract_tests`] pulls suites out of
//! fenced code blocks in model completions.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::openapi::{Method, StatusClass};
use crate::paths;

#[derive(Debug, Error)]
pub enum DslError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid test '{test}': {message}")]
    Validation { test: String, message: String },
}

/// Scalar parameter value. Kept as typed scalars so negative ids and quoted
/// strings survive a round trip unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    String(String),
}

impl ParamValue {
    /// Rendering used when the value is substituted into a URL.
    pub fn render(&self) -> String {
        match self {
            ParamValue::Bool(b) => b.to_string(),
            ParamValue::Int(i) => i.to_string(),
            ParamValue::Float(f) => f.to_string(),
            ParamValue::String(s) => s.clone(),
        }
    }
}

impl From<&str> for ParamValue {
    fn from(s: &str) -> Self {
        ParamValue::String(s.to_string())
    }
}

impl From<i64> for ParamValue {
    fn from(i: i64) -> Self {
        ParamValue::Int(i)
    }
}

/// Request payload: inline text or a file reference resolved against the
/// suite directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodySpec {
    Text(String),
    File {
        file: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestSpec {
    pub method: Method,
    /// Path template; `{x}` placeholders are filled from `path_params`.
    pub path: String,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub path_params: IndexMap<String, ParamValue>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub query_params: IndexMap<String, ParamValue>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub headers: IndexMap<String, ParamValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
}

/// What the test asserts about the response status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ExpectRepr", into = "ExpectRepr")]
pub enum StatusExpectation {
    Equals(u16),
    NotEquals(u16),
    ClassEquals(StatusClass),
}

impl StatusExpectation {
    /// True when the observed status satisfies the expectation.
    pub fn is_met_by(&self, observed: u16) -> bool {
        match self {
            StatusExpectation::Equals(code) => observed == *code,
            StatusExpectation::NotEquals(code) => observed != *code,
            StatusExpectation::ClassEquals(class) => StatusClass::of(observed) == Some(*class),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpectRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    not_status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    status_class: Option<StatusClass>,
}

impl TryFrom<ExpectRepr> for StatusExpectation {
    type Error = String;

    fn try_from(repr: ExpectRepr) -> Result<Self, Self::Error> {
        let check_code = |code: u16| {
            if (100..=599).contains(&code) {
                Ok(code)
            } else {
                Err(format!("status code {code} outside 100..=599"))
            }
        };
        match (repr.status, repr.not_status, repr.status_class) {
            (Some(code), None, None) => Ok(StatusExpectation::Equals(check_code(code)?)),
            (None, Some(code), None) => Ok(StatusExpectation::NotEquals(check_code(code)?)),
            (None, None, Some(class)) => {
                if class == StatusClass::Informational {
                    Err("status_class must be one of 2XX, 3XX, 4XX, 5XX".to_string())
                } else {
                    Ok(StatusExpectation::ClassEquals(class))
                }
            }
            _ => Err("expect needs exactly one of status, not_status, status_class".to_string()),
        }
    }
}

impl From<StatusExpectation> for ExpectRepr {
    fn from(exp: StatusExpectation) -> Self {
        let mut repr = ExpectRepr {
            status: None,
            not_status: None,
            status_class: None,
        };
        match exp {
            StatusExpectation::Equals(code) => repr.status = Some(code),
            StatusExpectation::NotEquals(code) => repr.not_status = Some(code),
            StatusExpectation::ClassEquals(class) => repr.status_class = Some(class),
        }
        repr
    }
}

/// How the test entered the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestSource {
    #[default]
    Generated,
    Seed,
    Edited,
}

impl TestSource {
    fn is_generated(&self) -> bool {
        matches!(self, TestSource::Generated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCase {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub request: RequestSpec,
    pub expect: StatusExpectation,
    #[serde(default, skip_serializing_if = "TestSource::is_generated")]
    pub source: TestSource,
    /// Manual bug-exposure override; when present it wins over the
    /// classification heuristic for failed tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bug: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteDoc {
    tests: Vec<TestCase>,
}

/// Why a fenced block could not be turned into tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum RejectReason {
    ParseError(String),
    ValidationError(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedBlock {
    /// The block body, verbatim, so a human can still hand-port it.
    pub text: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub tests: Vec<TestCase>,
    pub rejected_blocks: Vec<RejectedBlock>,
    /// No fenced code blocks at all: the completion answered in prose and
    /// the orchestrator should issue the follow-up question.
    pub natural_language_only: bool,
}

/// Parses a suite document and validates every test.
pub fn parse_test_document(text: &str) -> Result<Vec<TestCase>, DslError> {
    let doc: SuiteDoc = serde_yaml::from_str(text).map_err(|e| DslError::Parse(e.to_string()))?;
    validate_suite(&doc.tests)?;
    Ok(doc.tests)
}

/// Canonical serialization: fixed key order, two-space indent, LF endings.
/// `parse_test_document(&serialize_test_document(t)) == t` for valid suites.
pub fn serialize_test_document(tests: &[TestCase]) -> String {
    let doc = SuiteDoc { tests: tests.to_vec() };
    serde_yaml::to_string(&doc).expect("suite serialization cannot fail")
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn validate_suite(tests: &[TestCase]) -> Result<(), DslError> {
    let mut seen = std::collections::BTreeSet::new();
    for test in tests {
        validate_test(test)?;
        if !seen.insert(test.name.as_str()) {
            return Err(DslError::Validation {
                test: test.name.clone(),
                message: "duplicate test name in suite".to_string(),
            });
        }
    }
    Ok(())
}

fn validate_test(test: &TestCase) -> Result<(), DslError> {
    if !valid_name(&test.name) {
        return Err(DslError::Validation {
            test: test.name.clone(),
            message: "name must be non-empty and match [A-Za-z0-9_]+".to_string(),
        });
    }
    if !test.request.path.starts_with('/') {
        return Err(DslError::Validation {
            test: test.name.clone(),
            message: format!("request.path must start with '/': {}", test.request.path),
        });
    }
    for segment in paths::segments(&test.request.path) {
        if let Some(name) = paths::placeholder(segment) {
            if !test.request.path_params.contains_key(name) {
                return Err(DslError::Validation {
                    test: test.name.clone(),
                    message: format!("path parameter '{name}' has no binding in path_params"),
                });
            }
        }
    }
    Ok(())
}

/// Scans completion text for fenced code blocks and tries each one as a test
/// document. All failures are captured, never fatal.
pub fn extract_tests(completion_text: &str) -> ExtractionResult {
    let blocks = fenced_blocks(completion_text);
    let natural_language_only = blocks.is_empty();

    let mut tests: Vec<TestCase> = Vec::new();
    let mut rejected_blocks = Vec::new();
    let mut taken = std::collections::BTreeSet::new();

    for block in blocks {
        match parse_test_document(&block) {
            Ok(parsed) => {
                for mut test in parsed {
                    // Same name in an earlier block: deterministically rename
                    // so the combined suite stays valid.
                    if !taken.insert(test.name.clone()) {
                        let mut n = 2;
                        while !taken.insert(format!("{}_{n}", test.name)) {
                            n += 1;
                        }
                        test.name = format!("{}_{n}", test.name);
                    }
                    tests.push(test);
                }
            }
            Err(DslError::Parse(message)) => rejected_blocks.push(RejectedBlock {
                text: block,
                reason: RejectReason::ParseError(message),
            }),
            Err(DslError::Validation { test, message }) => rejected_blocks.push(RejectedBlock {
                text: block,
                reason: RejectReason::ValidationError(format!("{test}: {message}")),
            }),
        }
    }

    ExtractionResult {
        tests,
        rejected_blocks,
        natural_language_only,
    }
}

/// Returns the bodies of all fenced code blocks. A fence is a line starting
/// with three backticks; the info string on the opening fence is ignored. An
/// unterminated block runs to the end of the text.
fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if line.starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(String::new()),
            }
            continue;
        }
        if let Some(block) = current.as_mut() {
            block.push_str(line);
            block.push('\n');
        }
    }
    if let Some(block) = current {
        blocks.push(block);
    }
    blocks
}
