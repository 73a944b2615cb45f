//! Executes test cases against a base URL over HTTP, evaluates status
//! expectations, and appends every completed exchange to a trace sink.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use indexmap::IndexMap;
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{write_trace_line, HttpInteraction};
use crate::dsl::{BodySpec, StatusExpectation, TestCase};
use crate::openapi::Method;
use crate::paths;

/// Everything except RFC 3986 unreserved characters gets percent-encoded, so
/// reserved characters in parameter values cannot alter the URL structure.
const COMPONENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("test '{test}': path parameter '{name}' has no binding")]
    MissingBinding { test: String, name: String },
    #[error("test '{test}': body file not found: {path}")]
    BodyFileNotFound { test: String, path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Passed,
    Failed,
    Error,
}

/// Result of executing one test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestOutcome {
    pub test_name: String,
    pub verdict: Verdict,
    pub observed_status: Option<u16>,
    pub interaction: Option<HttpInteraction>,
    pub failure_message: Option<String>,
}

/// A test case with its path template filled in and payload loaded, ready to
/// send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRequest {
    pub method: Method,
    /// Full URL including the query string.
    pub url: String,
    /// Percent-encoded request path, as it will be recorded in the trace.
    pub url_path: String,
    pub query_params: IndexMap<String, Vec<String>>,
    pub headers: IndexMap<String, String>,
    pub content_type: Option<String>,
    pub body: Option<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub base_url: String,
    /// Directory body file references are resolved against.
    pub suite_dir: PathBuf,
    pub timeout: Duration,
    /// Number of worker threads; 1 executes in suite order.
    pub parallelism: usize,
}

impl RunConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        RunConfig {
            base_url: base_url.into(),
            suite_dir: PathBuf::from("."),
            timeout: Duration::from_secs(30),
            parallelism: 1,
        }
    }
}

/// Substitutes path parameters (percent-encoding reserved characters),
/// assembles the query string in declaration order, and loads body file
/// references relative to the suite directory.
pub fn resolve_request(
    test: &TestCase,
    base_url: &str,
    suite_dir: &Path,
) -> Result<ResolvedRequest, RunnerError> {
    let mut url_path = String::new();
    for segment in paths::segments(&test.request.path) {
        url_path.push('/');
        match paths::placeholder(segment) {
            Some(name) => {
                let value = test.request.path_params.get(name).ok_or_else(|| {
                    RunnerError::MissingBinding {
                        test: test.name.clone(),
                        name: name.to_string(),
                    }
                })?;
                url_path.push_str(&utf8_percent_encode(&value.render(), COMPONENT).to_string());
            }
            None => url_path.push_str(segment),
        }
    }
    if url_path.is_empty() {
        url_path.push('/');
    }

    let mut query_params = IndexMap::new();
    let mut query = String::new();
    for (name, value) in &test.request.query_params {
        let rendered = value.render();
        if !query.is_empty() {
            query.push('&');
        }
        query.push_str(&utf8_percent_encode(name, COMPONENT).to_string());
        query.push('=');
        query.push_str(&utf8_percent_encode(&rendered, COMPONENT).to_string());
        query_params
            .entry(name.clone())
            .or_insert_with(Vec::new)
            .push(rendered);
    }

    let body = match &test.request.body {
        None => None,
        Some(BodySpec::Text(text)) => Some(text.clone().into_bytes()),
        Some(BodySpec::File { file }) => {
            let path = suite_dir.join(file);
            Some(std::fs::read(&path).map_err(|_| RunnerError::BodyFileNotFound {
                test: test.name.clone(),
                path: path.display().to_string(),
            })?)
        }
    };

    let headers = test
        .request
        .headers
        .iter()
        .map(|(k, v)| (k.clone(), v.render()))
        .collect();

    let mut url = format!("{}{}", base_url.trim_end_matches('/'), url_path);
    if !query.is_empty() {
        url.push('?');
        url.push_str(&query);
    }

    Ok(ResolvedRequest {
        method: test.request.method,
        url,
        url_path,
        query_params,
        headers,
        content_type: test.request.content_type.clone(),
        body,
    })
}

/// Applies a status expectation to an observed status code.
pub fn evaluate_expectation(expectation: &StatusExpectation, observed: u16) -> Verdict {
    if expectation.is_met_by(observed) {
        Verdict::Passed
    } else {
        Verdict::Failed
    }
}

fn failure_message(expectation: &StatusExpectation, observed: u16) -> String {
    match expectation {
        StatusExpectation::Equals(code) => format!("expected status {code}, observed {observed}"),
        StatusExpectation::NotEquals(code) => {
            format!("expected a status other than {code}, observed {observed}")
        }
        StatusExpectation::ClassEquals(class) => {
            format!("expected a {class} status, observed {observed}")
        }
    }
}

/// Executes tests in suite order (or with bounded parallelism), evaluating
/// each expectation and appending every completed HTTP exchange to the trace
/// sink exactly once. Failures to reach the service become `Error` verdicts,
/// which produce no trace line.
pub fn run_suite<W: Write + Send>(
    tests: &[TestCase],
    config: &RunConfig,
    trace_sink: &mut W,
) -> Vec<TestOutcome> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .max_redirects(0)
        .timeout_global(Some(config.timeout))
        .build()
        .new_agent();

    let sink = Mutex::new(trace_sink);
    let outcomes: Vec<Mutex<Option<TestOutcome>>> =
        tests.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = config.parallelism.clamp(1, tests.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= tests.len() {
                    break;
                }
                let outcome = run_one(&tests[index], config, &agent, &sink);
                *outcomes[index].lock().unwrap() = Some(outcome);
            });
        }
    });

    outcomes
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

fn run_one<W: Write>(
    test: &TestCase,
    config: &RunConfig,
    agent: &ureq::Agent,
    sink: &Mutex<&mut W>,
) -> TestOutcome {
    let error_outcome = |message: String| TestOutcome {
        test_name: test.name.clone(),
        verdict: Verdict::Error,
        observed_status: None,
        interaction: None,
        failure_message: Some(message),
    };

    let resolved = match resolve_request(test, &config.base_url, &config.suite_dir) {
        Ok(r) => r,
        Err(e) => return error_outcome(e.to_string()),
    };

    let mut builder = ureq::http::Request::builder()
        .method(resolved.method.as_str())
        .uri(&resolved.url);
    for (name, value) in &resolved.headers {
        builder = builder.header(name, value);
    }
    if let Some(content_type) = &resolved.content_type {
        builder = builder.header("content-type", content_type);
    }
    let request = match builder.body(resolved.body.clone().unwrap_or_default()) {
        Ok(r) => r,
        Err(e) => return error_outcome(format!("invalid request: {e}")),
    };

    let response = match agent.run(request) {
        Ok(r) => r,
        Err(ureq::Error::Timeout(_)) => {
            return error_outcome(format!(
                "request timed out after {}s",
                config.timeout.as_secs()
            ))
        }
        Err(e) => return error_outcome(format!("request failed: {e}")),
    };

    let observed = response.status().as_u16();
    let response_content_type = response
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .map(|v| v.to_string());

    let interaction = HttpInteraction {
        method: resolved.method,
        url_path: resolved.url_path.clone(),
        query_params: resolved.query_params.clone(),
        header_params: resolved.headers.clone(),
        request_content_type: resolved.content_type.clone(),
        request_body: resolved.body.clone(),
        response_status: observed,
        response_content_type,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        test_name: Some(test.name.clone()),
    };

    {
        let mut sink = sink.lock().unwrap();
        // An unwritable sink is a harness failure, not a test failure.
        write_trace_line(&mut **sink, &interaction).expect("trace sink write failed");
    }

    let verdict = evaluate_expectation(&test.expect, observed);
    TestOutcome {
        test_name: test.name.clone(),
        verdict,
        observed_status: Some(observed),
        interaction: Some(interaction),
        failure_message: match verdict {
            Verdict::Failed => Some(failure_message(&test.expect, observed)),
            _ => None,
        },
    }
}
