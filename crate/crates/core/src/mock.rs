//! A rule-driven HTTP service implementing a PetStore-subset behavior table,
//! so the full pipeline is testable offline. Rules are matched in order,
//! first match wins, and a catch-all rule guarantees a response for every
//! request.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::ParamValue;
use crate::openapi::Method;
use crate::paths;

#[derive(Debug, Error)]
pub enum MockError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid behavior config: {0}")]
    Validation(String),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

/// Condition on a path parameter bound by the rule's template, e.g.
/// `petId < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Predicate {
    pub param: String,
    pub op: PredicateOp,
    pub value: ParamValue,
}

impl Predicate {
    fn holds(&self, bound: &str) -> bool {
        let ordering = match (bound.parse::<f64>(), self.value.render().parse::<f64>()) {
            (Ok(a), Ok(b)) => a.partial_cmp(&b),
            _ => None,
        };
        match self.op {
            PredicateOp::Lt => ordering == Some(std::cmp::Ordering::Less),
            PredicateOp::Le => matches!(
                ordering,
                Some(std::cmp::Ordering::Less | std::cmp::Ordering::Equal)
            ),
            PredicateOp::Gt => ordering == Some(std::cmp::Ordering::Greater),
            PredicateOp::Ge => matches!(
                ordering,
                Some(std::cmp::Ordering::Greater | std::cmp::Ordering::Equal)
            ),
            // Equality falls back to string comparison for non-numeric values.
            PredicateOp::Eq => match ordering {
                Some(o) => o == std::cmp::Ordering::Equal,
                None => bound == self.value.render(),
            },
            PredicateOp::Ne => match ordering {
                Some(o) => o != std::cmp::Ordering::Equal,
                None => bound != self.value.render(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleResponse {
    pub status: u16,
    pub content_type: String,
    /// Body template; `{name}` placeholders are replaced with the path
    /// parameter values bound by the rule's template.
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorRule {
    /// Absent means any method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    /// Path template, or `*` to match every path.
    pub path: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub when: Vec<Predicate>,
    pub response: RuleResponse,
}

impl BehaviorRule {
    fn is_catch_all(&self) -> bool {
        self.method.is_none() && self.path == "*" && self.when.is_empty()
    }

    /// Returns the substituted response when the rule matches.
    fn apply(&self, method: Method, path: &str) -> Option<(u16, String, String)> {
        if self.method.is_some_and(|m| m != method) {
            return None;
        }
        let bound = if self.path == "*" {
            Vec::new()
        } else {
            paths::match_template(&self.path, path)?
        };
        for predicate in &self.when {
            let value = bound.iter().find(|(name, _)| *name == predicate.param)?;
            if !predicate.holds(value.1) {
                return None;
            }
        }
        let mut body = self.response.body.clone();
        for (name, value) in bound {
            body = body.replace(&format!("{{{name}}}"), value);
        }
        Some((self.response.status, self.response.content_type.clone(), body))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorConfig {
    rules: Vec<BehaviorRule>,
}

/// Parses and validates an ordered rule list from YAML.
pub fn load_behaviors(config_text: &str) -> Result<Vec<BehaviorRule>, MockError> {
    let config: BehaviorConfig =
        serde_yaml::from_str(config_text).map_err(|e| MockError::Parse(e.to_string()))?;
    let rules = config.rules;
    if !rules.iter().any(BehaviorRule::is_catch_all) {
        return Err(MockError::Validation(
            "rule list needs a catch-all rule (path '*', any method, no conditions)".into(),
        ));
    }
    for (index, rule) in rules.iter().enumerate() {
        if rule.path != "*" && !rule.path.starts_with('/') {
            return Err(MockError::Validation(format!(
                "rule {index}: path must start with '/' or be '*': {}",
                rule.path
            )));
        }
        if !(100..=599).contains(&rule.response.status) {
            return Err(MockError::Validation(format!(
                "rule {index}: status {} outside 100..=599",
                rule.response.status
            )));
        }
        for predicate in &rule.when {
            let declared = paths::segments(&rule.path)
                .iter()
                .filter_map(|s| paths::placeholder(s))
                .any(|name| name == predicate.param);
            if !declared {
                return Err(MockError::Validation(format!(
                    "rule {index}: predicate parameter '{}' not in template {}",
                    predicate.param, rule.path
                )));
            }
        }
    }
    Ok(rules)
}

/// Picks the first matching rule and returns (status, content type, body).
/// The catch-all guarantees a response.
pub fn handle_request(rules: &[BehaviorRule], method: Method, path: &str) -> (u16, String, String) {
    let normalized = paths::normalize(path);
    rules
        .iter()
        .find_map(|rule| rule.apply(method, normalized))
        .expect("validated rule list always has a catch-all")
}

/// A running mock service on a local port.
pub struct MockServer {
    server: Arc<tiny_http::Server>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
}

/// Fixed Date header so identical requests produce byte-identical responses.
const FIXED_DATE: &str = "Thu, 01 Jan 2015 00:00:00 GMT";

impl MockServer {
    /// Binds `127.0.0.1:port` (0 picks an ephemeral port) and serves the rule
    /// table on a small thread pool until `shutdown` is called.
    pub fn start(rules: Vec<BehaviorRule>, port: u16) -> Result<MockServer, MockError> {
        let server = tiny_http::Server::http(("127.0.0.1", port))
            .map_err(|e| MockError::Io(std::io::Error::other(e.to_string())))?;
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(addr) => addr,
            #[allow(unreachable_patterns)]
            _ => unreachable!("http listener always has an IP address"),
        };
        let server = Arc::new(server);
        let rules = Arc::new(rules);

        let workers = (0..4)
            .map(|_| {
                let server = Arc::clone(&server);
                let rules = Arc::clone(&rules);
                std::thread::spawn(move || loop {
                    let request = match server.recv() {
                        Ok(r) => r,
                        Err(_) => break, // unblocked for shutdown
                    };
                    respond(&rules, request);
                })
            })
            .collect();

        Ok(MockServer { server, workers, addr })
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    pub fn base_url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port())
    }

    pub fn shutdown(self) {}
}

impl Drop for MockServer {
    fn drop(&mut self) {
        // unblock() wakes a single thread stuck in recv(), so issue one per
        // worker before joining.
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

fn respond(rules: &[BehaviorRule], request: tiny_http::Request) {
    let method = request.method().as_str().parse::<Method>();
    let path = request.url().split('?').next().unwrap_or("/").to_string();
    let (status, content_type, body) = match method {
        Ok(method) => handle_request(rules, method, &path),
        Err(_) => (
            405,
            "application/json".to_string(),
            r#"{"code": 405, "type": "error", "message": "method not allowed"}"#.to_string(),
        ),
    };
    let response = tiny_http::Response::from_string(body)
        .with_status_code(status)
        .with_header(
            tiny_http::Header::from_bytes(&b"Content-Type"[..], content_type.as_bytes())
                .expect("valid content-type header"),
        )
        .with_header(
            tiny_http::Header::from_bytes(&b"Date"[..], FIXED_DATE.as_bytes())
                .expect("valid date header"),
        );
    let _ = request.respond(response);
}
