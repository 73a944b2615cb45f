//! Structural API coverage: matches recorded HTTP interactions against a
//! coverage universe and computes the seven metrics (path, operation,
//! parameter, request content-type, status class, status, response
//! content-type) as ratios of distinct documented elements touched.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::openapi::{
    normalize_media, CoverageUniverse, Method, OperationKey, ParameterLocation, StatusClass,
};
use crate::paths;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("coverage reports were computed against different universes")]
    UniverseMismatch,
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("ambiguous path match for {path}: {candidates:?}")]
    Ambiguous { path: String, candidates: Vec<String> },
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace line {line}: {message}")]
    Invalid { line: usize, message: String },
}

/// One observed request/response pair, the atom of coverage measurement.
/// Also the line format of trace files: one JSON object per line with
/// exactly these fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpInteraction {
    pub method: Method,
    /// Concrete request path: no host, no query string.
    pub url_path: String,
    pub query_params: IndexMap<String, Vec<String>>,
    pub header_params: IndexMap<String, String>,
    pub request_content_type: Option<String>,
    #[serde(with = "base64_bytes")]
    pub request_body: Option<Vec<u8>>,
    pub response_status: u16,
    pub response_content_type: Option<String>,
    /// RFC3339 timestamp of the exchange.
    pub timestamp: String,
    pub test_name: Option<String>,
}

impl HttpInteraction {
    pub fn validate(&self) -> Result<(), String> {
        if !self.url_path.starts_with('/') {
            return Err(format!("url_path must start with '/': {}", self.url_path));
        }
        if !(100..=599).contains(&self.response_status) {
            return Err(format!("response_status {} outside 100..=599", self.response_status));
        }
        Ok(())
    }

    /// Short human-readable descriptor used in unmatched listings.
    fn descriptor(&self) -> String {
        match &self.test_name {
            Some(name) => format!("{} {} -> {} [{name}]", self.method, self.url_path, self.response_status),
            None => format!("{} {} -> {}", self.method, self.url_path, self.response_status),
        }
    }
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<Vec<u8>>, ser: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(bytes) => ser.serialize_some(&STANDARD.encode(bytes)),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<Vec<u8>>, D::Error> {
        let raw: Option<String> = Option::deserialize(de)?;
        raw.map(|s| STANDARD.decode(s.as_bytes()).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// An interaction resolved against the universe: the operation it exercised
/// (if any), which documented parameters carried a value, and the effective
/// media types with parameters stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedInteraction {
    pub interaction: HttpInteraction,
    /// `None` when no documented operation matches.
    pub operation: Option<OperationKey>,
    pub bound_parameters: BTreeSet<(String, ParameterLocation)>,
    pub request_media: Option<String>,
    pub response_media: Option<String>,
}

/// Resolves an interaction's path against the documented templates. Literal
/// segments must match exactly, `{x}` matches any single non-empty segment,
/// and the template with the most literal segments wins. Two templates with
/// equal specificity are an [`MatchError::Ambiguous`] match.
pub fn match_interaction(
    universe: &CoverageUniverse,
    interaction: &HttpInteraction,
) -> Result<MatchedInteraction, MatchError> {
    let mut matched = MatchedInteraction {
        interaction: interaction.clone(),
        operation: None,
        bound_parameters: BTreeSet::new(),
        request_media: interaction.request_content_type.as_deref().map(normalize_media),
        response_media: interaction.response_content_type.as_deref().map(normalize_media),
    };

    let mut best: Vec<&str> = Vec::new();
    let mut best_score = 0usize;
    for template in &universe.paths {
        if paths::match_template(template, &interaction.url_path).is_none() {
            continue;
        }
        let score = paths::literal_count(template);
        if best.is_empty() || score > best_score {
            best = vec![template];
            best_score = score;
        } else if score == best_score {
            best.push(template);
        }
    }

    let template = match best.as_slice() {
        [] => return Ok(matched),
        [single] => *single,
        _ => {
            return Err(MatchError::Ambiguous {
                path: interaction.url_path.clone(),
                candidates: best.iter().map(|t| t.to_string()).collect(),
            })
        }
    };

    let key = OperationKey {
        path: template.to_string(),
        method: interaction.method,
    };
    let Some(op) = universe.operations.get(&key) else {
        // The path template matched but the method is not documented.
        return Ok(matched);
    };

    let bindings = paths::match_template(template, &interaction.url_path)
        .expect("template matched above");
    for param in &op.parameters {
        let carried = match param.location {
            // Bound by the template match; only declared parameters count.
            ParameterLocation::Path => bindings.iter().any(|(name, _)| *name == param.name),
            ParameterLocation::Query => interaction.query_params.contains_key(&param.name),
            ParameterLocation::Header => interaction
                .header_params
                .keys()
                .any(|h| h.eq_ignore_ascii_case(&param.name)),
            ParameterLocation::Body => interaction.request_body.is_some(),
        };
        if carried {
            matched
                .bound_parameters
                .insert((param.name.clone(), param.location));
        }
    }
    matched.operation = Some(key);
    Ok(matched)
}

/// One coverage metric: the set of distinct documented elements touched and
/// the size of the documented denominator set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metric<T: Ord> {
    pub covered: BTreeSet<T>,
    pub total: usize,
}

impl<T: Ord> Metric<T> {
    fn empty(total: usize) -> Self {
        Metric { covered: BTreeSet::new(), total }
    }

    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered.len() as f64 / self.total as f64
        }
    }

    /// Integer percentage, round half up.
    pub fn percent(&self) -> u32 {
        percent(self.covered.len(), self.total)
    }
}

/// Round-half-up integer percentage, 0 when the denominator is 0.
pub fn percent(numerator: usize, denominator: usize) -> u32 {
    if denominator == 0 {
        0
    } else {
        ((200 * numerator + denominator) / (2 * denominator)) as u32
    }
}

pub type ParameterKey = (OperationKey, String, ParameterLocation);
pub type MediaKey = (OperationKey, String);
pub type StatusKey = (OperationKey, String);
pub type ClassKey = (OperationKey, StatusClass);

/// The seven coverage metrics plus the interactions that matched nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    universe_digest: String,
    pub paths: Metric<String>,
    pub operations: Metric<OperationKey>,
    pub parameters: Metric<ParameterKey>,
    pub request_types: Metric<MediaKey>,
    pub status_classes: Metric<ClassKey>,
    pub statuses: Metric<StatusKey>,
    pub response_types: Metric<MediaKey>,
    pub unmatched: BTreeSet<String>,
}

/// Metric names in the order coverage tables are printed.
pub const METRIC_NAMES: [&str; 7] = [
    "Path",
    "Operation",
    "Status Class",
    "Status",
    "Response Type",
    "Request Type",
    "Parameter",
];

impl CoverageReport {
    /// A report with nothing covered; the identity element of `merge`.
    pub fn empty(universe: &CoverageUniverse) -> Self {
        CoverageReport {
            universe_digest: universe.digest(),
            paths: Metric::empty(universe.paths.len()),
            operations: Metric::empty(universe.operations.len()),
            parameters: Metric::empty(universe.parameter_count),
            request_types: Metric::empty(universe.request_type_pairs.len()),
            status_classes: Metric::empty(universe.status_class_pairs.len()),
            statuses: Metric::empty(universe.status_pairs.len()),
            response_types: Metric::empty(universe.response_type_pairs.len()),
            unmatched: BTreeSet::new(),
        }
    }

    /// `(name, covered, total, percent)` rows in display order.
    pub fn rows(&self) -> [(&'static str, usize, usize, u32); 7] {
        [
            ("Path", self.paths.covered.len(), self.paths.total, self.paths.percent()),
            (
                "Operation",
                self.operations.covered.len(),
                self.operations.total,
                self.operations.percent(),
            ),
            (
                "Status Class",
                self.status_classes.covered.len(),
                self.status_classes.total,
                self.status_classes.percent(),
            ),
            ("Status", self.statuses.covered.len(), self.statuses.total, self.statuses.percent()),
            (
                "Response Type",
                self.response_types.covered.len(),
                self.response_types.total,
                self.response_types.percent(),
            ),
            (
                "Request Type",
                self.request_types.covered.len(),
                self.request_types.total,
                self.request_types.percent(),
            ),
            (
                "Parameter",
                self.parameters.covered.len(),
                self.parameters.total,
                self.parameters.percent(),
            ),
        ]
    }

    pub fn ratios(&self) -> [f64; 7] {
        [
            self.paths.ratio(),
            self.operations.ratio(),
            self.status_classes.ratio(),
            self.statuses.ratio(),
            self.response_types.ratio(),
            self.request_types.ratio(),
            self.parameters.ratio(),
        ]
    }
}

/// Computes all seven metrics over a trace. Unmatched interactions are
/// listed, never fatal; observed-but-undocumented statuses or media types do
/// not increase any numerator.
pub fn compute_coverage(universe: &CoverageUniverse, trace: &[HttpInteraction]) -> CoverageReport {
    let mut report = CoverageReport::empty(universe);
    for interaction in trace {
        let matched = match match_interaction(universe, interaction) {
            Ok(m) => m,
            Err(MatchError::Ambiguous { .. }) => {
                report
                    .unmatched
                    .insert(format!("{} (ambiguous templates)", interaction.descriptor()));
                continue;
            }
        };
        let Some(key) = matched.operation else {
            report.unmatched.insert(interaction.descriptor());
            continue;
        };

        report.paths.covered.insert(key.path.clone());
        report.operations.covered.insert(key.clone());
        for (name, location) in matched.bound_parameters {
            report.parameters.covered.insert((key.clone(), name, location));
        }
        if let Some(media) = matched.request_media {
            let pair = (key.clone(), media);
            if universe.request_type_pairs.contains(&pair) {
                report.request_types.covered.insert(pair);
            }
        }
        if let Some(media) = matched.response_media {
            let pair = (key.clone(), media);
            if universe.response_type_pairs.contains(&pair) {
                report.response_types.covered.insert(pair);
            }
        }
        let status_pair = (key.clone(), interaction.response_status.to_string());
        if universe.status_pairs.contains(&status_pair) {
            report.statuses.covered.insert(status_pair);
        }
        if let Some(class) = StatusClass::of(interaction.response_status) {
            let class_pair = (key.clone(), class);
            if universe.status_class_pairs.contains(&class_pair) {
                report.status_classes.covered.insert(class_pair);
            }
        }
    }
    report
}

/// Unions the numerator sets of two reports computed against the same
/// universe. Denominators are unchanged.
pub fn merge_coverage(a: &CoverageReport, b: &CoverageReport) -> Result<CoverageReport, CoverageError> {
    if a.universe_digest != b.universe_digest {
        return Err(CoverageError::UniverseMismatch);
    }
    fn union<T: Ord + Clone>(a: &Metric<T>, b: &Metric<T>) -> Metric<T> {
        Metric {
            covered: a.covered.union(&b.covered).cloned().collect(),
            total: a.total,
        }
    }
    Ok(CoverageReport {
        universe_digest: a.universe_digest.clone(),
        paths: union(&a.paths, &b.paths),
        operations: union(&a.operations, &b.operations),
        parameters: union(&a.parameters, &b.parameters),
        request_types: union(&a.request_types, &b.request_types),
        status_classes: union(&a.status_classes, &b.status_classes),
        statuses: union(&a.statuses, &b.statuses),
        response_types: union(&a.response_types, &b.response_types),
        unmatched: a.unmatched.union(&b.unmatched).cloned().collect(),
    })
}

/// Serializes an interaction as one canonical JSON trace line.
pub fn trace_line(interaction: &HttpInteraction) -> String {
    serde_json::to_string(interaction).expect("interaction serialization cannot fail")
}

/// Appends one interaction to a trace sink.
pub fn write_trace_line<W: Write>(sink: &mut W, interaction: &HttpInteraction) -> std::io::Result<()> {
    sink.write_all(trace_line(interaction).as_bytes())?;
    sink.write_all(b"\n")
}

/// Reads a trace file: one JSON interaction per line, unknown fields
/// rejected, invariants enforced.
pub fn read_trace(text: &str) -> Result<Vec<HttpInteraction>, TraceError> {
    let mut interactions = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let interaction: HttpInteraction =
            serde_json::from_str(line).map_err(|e| TraceError::Parse {
                line: index + 1,
                message: e.to_string(),
            })?;
        interaction.validate().map_err(|message| TraceError::Invalid {
            line: index + 1,
            message,
        })?;
        interactions.push(interaction);
    }
    Ok(interactions)
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, covered, total, pct) in self.rows() {
            writeln!(f, "{name}: {covered}/{total} = {pct}%")?;
        }
        Ok(())
    }
}
