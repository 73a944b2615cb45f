//! OpenAPI 3.x document model and extraction of the coverage universe: the
//! set of documentation elements (paths, operations, parameters, content
//! types, status codes) that coverage metrics are measured against.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_yaml::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::paths;

#[derive(Debug, Error)]
pub enum OpenApiError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported specification version: {0} (only OpenAPI 3.x is supported)")]
    UnsupportedVersion(String),
    #[error("schema error: {0}")]
    Schema(String),
}

/// Input encoding of a specification document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecFormat {
    Yaml,
    Json,
}

impl SpecFormat {
    /// Picks a format from a file extension, defaulting to YAML.
    pub fn from_path(path: &str) -> Self {
        if path.rsplit('.').next().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            SpecFormat::Json
        } else {
            SpecFormat::Yaml
        }
    }
}

/// HTTP methods that can appear as operation keys in a path item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Get,
    Put,
    Post,
    Delete,
    Options,
    Head,
    Patch,
    Trace,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Get,
        Method::Put,
        Method::Post,
        Method::Delete,
        Method::Options,
        Method::Head,
        Method::Patch,
        Method::Trace,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Put => "PUT",
            Method::Post => "POST",
            Method::Delete => "DELETE",
            Method::Options => "OPTIONS",
            Method::Head => "HEAD",
            Method::Patch => "PATCH",
            Method::Trace => "TRACE",
        }
    }

    fn spec_key(&self) -> &'static str {
        match self {
            Method::Get => "get",
            Method::Put => "put",
            Method::Post => "post",
            Method::Delete => "delete",
            Method::Options => "options",
            Method::Head => "head",
            Method::Patch => "patch",
            Method::Trace => "trace",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown HTTP method: {s}"))
    }
}

/// Status code class, i.e. the leading digit of a three-digit status code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StatusClass {
    #[serde(rename = "1XX")]
    Informational,
    #[serde(rename = "2XX")]
    Success,
    #[serde(rename = "3XX")]
    Redirection,
    #[serde(rename = "4XX")]
    ClientError,
    #[serde(rename = "5XX")]
    ServerError,
}

impl StatusClass {
    pub fn of(status: u16) -> Option<StatusClass> {
        match status / 100 {
            1 => Some(StatusClass::Informational),
            2 => Some(StatusClass::Success),
            3 => Some(StatusClass::Redirection),
            4 => Some(StatusClass::ClientError),
            5 => Some(StatusClass::ServerError),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StatusClass::Informational => "1XX",
            StatusClass::Success => "2XX",
            StatusClass::Redirection => "3XX",
            StatusClass::ClientError => "4XX",
            StatusClass::ServerError => "5XX",
        }
    }
}

impl fmt::Display for StatusClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatusClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "1XX" => Ok(StatusClass::Informational),
            "2XX" => Ok(StatusClass::Success),
            "3XX" => Ok(StatusClass::Redirection),
            "4XX" => Ok(StatusClass::ClientError),
            "5XX" => Ok(StatusClass::ServerError),
            _ => Err(format!("unknown status class: {s}")),
        }
    }
}

/// Where a documented input parameter lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterLocation {
    Path,
    Query,
    Header,
    /// Request payload, covering both raw bodies and form-encoded fields.
    Body,
}

impl fmt::Display for ParameterLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParameterLocation::Path => "path",
            ParameterLocation::Query => "query",
            ParameterLocation::Header => "header",
            ParameterLocation::Body => "body",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub location: ParameterLocation,
    pub required: bool,
}

/// One documented operation: a (path, method) pair with its inputs and
/// documented responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationSpec {
    pub path: String,
    pub method: Method,
    pub parameters: Vec<ParameterSpec>,
    /// Accepted request media types, normalized; wildcards retained here but
    /// excluded from the universe pairs.
    pub request_content_types: BTreeSet<String>,
    /// Documented status code -> response media types (normalized).
    pub documented_responses: BTreeMap<String, BTreeSet<String>>,
    pub deprecated: bool,
    /// Set when the operation documents a `default` response; such entries
    /// carry no concrete status code and stay out of the status universes.
    pub has_default_response: bool,
}

impl OperationSpec {
    pub fn key(&self) -> OperationKey {
        OperationKey {
            path: self.path.clone(),
            method: self.method,
        }
    }

    /// Documented response media types across all responses, wildcards
    /// included.
    pub fn response_content_types(&self) -> BTreeSet<String> {
        self.documented_responses
            .values()
            .flat_map(|set| set.iter().cloned())
            .collect()
    }

    /// Status classes derived from concrete documented codes.
    pub fn documented_classes(&self) -> BTreeSet<StatusClass> {
        self.documented_responses
            .keys()
            .filter_map(|code| code.parse::<u16>().ok())
            .filter_map(StatusClass::of)
            .collect()
    }
}

/// Identifies an operation inside a universe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OperationKey {
    pub path: String,
    pub method: Method,
}

impl fmt::Display for OperationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.method, self.path)
    }
}

/// A parsed and structurally validated OpenAPI document.
#[derive(Debug, Clone)]
pub struct ApiDocument {
    pub version: String,
    pub info: Value,
    /// Path templates in document order, already normalized.
    pub paths: Vec<String>,
    /// Operations in document order.
    pub operations: Vec<OperationSpec>,
    /// Original document text, kept verbatim for prompt embedding.
    pub raw: String,
}

/// Everything the coverage metrics can count, with the exact denominator
/// sets. All sets are recomputable from `operations`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageUniverse {
    pub paths: BTreeSet<String>,
    pub operations: BTreeMap<OperationKey, OperationSpec>,
    pub parameter_count: usize,
    pub request_type_pairs: BTreeSet<(OperationKey, String)>,
    pub response_type_pairs: BTreeSet<(OperationKey, String)>,
    pub status_pairs: BTreeSet<(OperationKey, String)>,
    pub status_class_pairs: BTreeSet<(OperationKey, StatusClass)>,
}

/// True when a media type contains a wildcard (e.g. `application/*`), which
/// the coverage metrics exclude.
pub fn is_wildcard_media(media: &str) -> bool {
    media.contains('*')
}

/// Lowercases the type/subtype and strips parameters:
/// `application/json; charset=utf-8` becomes `application/json`.
pub fn normalize_media(media: &str) -> String {
    media
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase()
}

/// Parses an OpenAPI 3.x document from YAML or JSON text.
pub fn parse_specification(text: &str, format: SpecFormat) -> Result<ApiDocument, OpenApiError> {
    let root: Value = match format {
        SpecFormat::Yaml => {
            serde_yaml::from_str(text).map_err(|e| OpenApiError::Parse(e.to_string()))?
        }
        SpecFormat::Json => {
            let json: serde_json::Value =
                serde_json::from_str(text).map_err(|e| OpenApiError::Parse(e.to_string()))?;
            serde_yaml::to_value(json).map_err(|e| OpenApiError::Parse(e.to_string()))?
        }
    };

    let root_map = root
        .as_mapping()
        .ok_or_else(|| OpenApiError::Schema("document root must be a mapping".into()))?;

    let version = match get_str(root_map, "openapi") {
        Some(v) => v.to_string(),
        None => {
            if let Some(v) = get_str(root_map, "swagger") {
                return Err(OpenApiError::UnsupportedVersion(v.to_string()));
            }
            return Err(OpenApiError::Schema("missing 'openapi' version field".into()));
        }
    };
    if !version.starts_with("3.") {
        return Err(OpenApiError::UnsupportedVersion(version));
    }

    let info = root_map
        .get(Value::from("info"))
        .cloned()
        .unwrap_or(Value::Null);

    let paths_value = root_map
        .get(Value::from("paths"))
        .ok_or_else(|| OpenApiError::Schema("missing 'paths' section".into()))?;
    let paths_map = paths_value
        .as_mapping()
        .ok_or_else(|| OpenApiError::Schema("'paths' must be a mapping".into()))?;

    let mut seen = BTreeSet::new();
    let mut templates = Vec::new();
    let mut operations = Vec::new();

    for (key, item) in paths_map {
        let template = key
            .as_str()
            .ok_or_else(|| OpenApiError::Schema("path template key must be a string".into()))?;
        validate_template(template)?;
        let normalized = paths::normalize(template).to_string();
        if !seen.insert(normalized.clone()) {
            return Err(OpenApiError::Schema(format!(
                "duplicate path template after normalization: {normalized}"
            )));
        }

        let item = deref(&root, item, 0)?;
        let item_map = item.as_mapping().ok_or_else(|| {
            OpenApiError::Schema(format!("path item for {normalized} must be a mapping"))
        })?;

        let shared_params = parse_parameters(&root, item_map, &normalized)?;

        for method in Method::ALL {
            let Some(op_value) = item_map.get(Value::from(method.spec_key())) else {
                continue;
            };
            let op = parse_operation(&root, &normalized, method, op_value, &shared_params)?;
            operations.push(op);
        }
        templates.push(normalized);
    }

    Ok(ApiDocument {
        version,
        info,
        paths: templates,
        operations,
        raw: text.to_string(),
    })
}

/// Builds the coverage universe from a validated document.
pub fn extract_universe(doc: &ApiDocument) -> CoverageUniverse {
    CoverageUniverse::from_operations(doc.operations.iter().cloned())
}

impl CoverageUniverse {
    /// Assembles a universe directly from operations. Callers must provide
    /// unique (path, method) pairs; `parse_specification` guarantees this.
    pub fn from_operations(ops: impl IntoIterator<Item = OperationSpec>) -> Self {
        let mut universe = CoverageUniverse {
            paths: BTreeSet::new(),
            operations: BTreeMap::new(),
            parameter_count: 0,
            request_type_pairs: BTreeSet::new(),
            response_type_pairs: BTreeSet::new(),
            status_pairs: BTreeSet::new(),
            status_class_pairs: BTreeSet::new(),
        };
        for op in ops {
            let key = op.key();
            universe.paths.insert(op.path.clone());
            universe.parameter_count += op.parameters.len();
            for media in &op.request_content_types {
                if !is_wildcard_media(media) {
                    universe.request_type_pairs.insert((key.clone(), media.clone()));
                }
            }
            for media in op.response_content_types() {
                if !is_wildcard_media(&media) {
                    universe.response_type_pairs.insert((key.clone(), media));
                }
            }
            for code in op.documented_responses.keys() {
                if code != "default" {
                    universe.status_pairs.insert((key.clone(), code.clone()));
                }
            }
            for class in op.documented_classes() {
                universe.status_class_pairs.insert((key.clone(), class));
            }
            universe.operations.insert(key, op);
        }
        universe
    }

    /// Stable content hash used to detect that two coverage reports were
    /// computed against the same universe.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for path in &self.paths {
            hasher.update(path.as_bytes());
            hasher.update([0]);
        }
        for (key, op) in &self.operations {
            hasher.update(key.to_string().as_bytes());
            hasher.update([0]);
            for p in &op.parameters {
                hasher.update(format!("{}@{}", p.name, p.location).as_bytes());
                hasher.update([0]);
            }
            hasher.update([1, u8::from(op.deprecated)]);
        }
        for (key, media) in self.request_type_pairs.iter().chain(&self.response_type_pairs) {
            hasher.update(format!("{key} {media}").as_bytes());
            hasher.update([0]);
        }
        for (key, code) in &self.status_pairs {
            hasher.update(format!("{key} {code}").as_bytes());
            hasher.update([0]);
        }
        for (key, class) in &self.status_class_pairs {
            hasher.update(format!("{key} {class}").as_bytes());
            hasher.update([0]);
        }
        hex_string(&hasher.finalize())
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn get_str<'a>(map: &'a serde_yaml::Mapping, key: &str) -> Option<&'a str> {
    map.get(Value::from(key)).and_then(Value::as_str)
}

/// Resolves `{"$ref": "#/..."}` indirections against the document root.
/// Only local references are supported; remote URLs are rejected.
fn deref<'a>(root: &'a Value, value: &'a Value, depth: u8) -> Result<&'a Value, OpenApiError> {
    let Some(map) = value.as_mapping() else {
        return Ok(value);
    };
    let Some(target) = get_str(map, "$ref") else {
        return Ok(value);
    };
    if depth > 8 {
        return Err(OpenApiError::Schema(format!("$ref chain too deep at {target}")));
    }
    let pointer = target
        .strip_prefix("#/")
        .ok_or_else(|| OpenApiError::Schema(format!("unsupported non-local $ref: {target}")))?;
    let mut current = root;
    for raw in pointer.split('/') {
        let token = raw.replace("~1", "/").replace("~0", "~");
        current = current
            .as_mapping()
            .and_then(|m| m.get(Value::from(token.as_str())))
            .ok_or_else(|| OpenApiError::Schema(format!("unresolved $ref: {target}")))?;
    }
    deref(root, current, depth + 1)
}

fn validate_template(template: &str) -> Result<(), OpenApiError> {
    if !template.starts_with('/') {
        return Err(OpenApiError::Schema(format!(
            "path template must start with '/': {template}"
        )));
    }
    for segment in paths::segments(template) {
        let has_brace = segment.contains(['{', '}']);
        if has_brace && paths::placeholder(segment).is_none() {
            return Err(OpenApiError::Schema(format!(
                "unbalanced parameter braces in segment '{segment}' of {template}"
            )));
        }
    }
    Ok(())
}

fn parse_parameters(
    root: &Value,
    obj: &serde_yaml::Mapping,
    template: &str,
) -> Result<Vec<ParameterSpec>, OpenApiError> {
    let Some(list) = obj.get(Value::from("parameters")) else {
        return Ok(Vec::new());
    };
    let list = list.as_sequence().ok_or_else(|| {
        OpenApiError::Schema(format!("'parameters' of {template} must be a list"))
    })?;

    let mut params = Vec::new();
    for entry in list {
        let entry = deref(root, entry, 0)?;
        let map = entry.as_mapping().ok_or_else(|| {
            OpenApiError::Schema(format!("parameter of {template} must be a mapping"))
        })?;
        let name = get_str(map, "name")
            .ok_or_else(|| OpenApiError::Schema(format!("parameter of {template} has no name")))?
            .to_string();
        let location = match get_str(map, "in") {
            Some("path") => ParameterLocation::Path,
            Some("query") => ParameterLocation::Query,
            Some("header") => ParameterLocation::Header,
            // Other locations (e.g. cookie) are preserved in the raw text but
            // not part of the coverage model.
            Some(_) => continue,
            None => {
                return Err(OpenApiError::Schema(format!(
                    "parameter {name} of {template} has no location"
                )))
            }
        };
        let required = map
            .get(Value::from("required"))
            .and_then(Value::as_bool)
            .unwrap_or(false);
        params.push(ParameterSpec { name, location, required });
    }
    Ok(params)
}

fn parse_operation(
    root: &Value,
    template: &str,
    method: Method,
    op_value: &Value,
    shared_params: &[ParameterSpec],
) -> Result<OperationSpec, OpenApiError> {
    let label = format!("{method} {template}");
    let op_value = deref(root, op_value, 0)?;
    let op_map = op_value
        .as_mapping()
        .ok_or_else(|| OpenApiError::Schema(format!("operation {label} must be a mapping")))?;

    let mut parameters = shared_params.to_vec();
    for own in parse_parameters(root, op_map, template)? {
        // Operation-level parameters override path-level ones of the same
        // (name, location).
        parameters.retain(|p| !(p.name == own.name && p.location == own.location));
        parameters.push(own);
    }

    let mut request_content_types = BTreeSet::new();
    if let Some(body) = op_map.get(Value::from("requestBody")) {
        let body = deref(root, body, 0)?;
        let body_map = body.as_mapping().ok_or_else(|| {
            OpenApiError::Schema(format!("requestBody of {label} must be a mapping"))
        })?;
        if let Some(content) = body_map.get(Value::from("content")).and_then(Value::as_mapping) {
            for media in content.keys() {
                let media = media.as_str().ok_or_else(|| {
                    OpenApiError::Schema(format!("media type key of {label} must be a string"))
                })?;
                request_content_types.insert(normalize_media(media));
            }
        }
        let required = body_map
            .get(Value::from("required"))
            .and_then(Value::as_bool)
            .unwrap_or(false);
        parameters.push(ParameterSpec {
            name: "body".to_string(),
            location: ParameterLocation::Body,
            required,
        });
    }

    // Every {x} segment needs a declared path parameter.
    for segment in paths::segments(template) {
        if let Some(name) = paths::placeholder(segment) {
            let declared = parameters
                .iter()
                .any(|p| p.location == ParameterLocation::Path && p.name == name);
            if !declared {
                return Err(OpenApiError::Schema(format!(
                    "path parameter '{name}' of {label} is not declared"
                )));
            }
        }
    }

    let mut documented_responses = BTreeMap::new();
    let mut has_default_response = false;
    if let Some(responses) = op_map.get(Value::from("responses")) {
        let responses = responses.as_mapping().ok_or_else(|| {
            OpenApiError::Schema(format!("responses of {label} must be a mapping"))
        })?;
        for (code, response) in responses {
            let code = match code {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => {
                    return Err(OpenApiError::Schema(format!(
                        "response key of {label} must be a status code or 'default'"
                    )))
                }
            };
            if code == "default" {
                has_default_response = true;
            } else if code.len() != 3 || code.parse::<u16>().is_err() {
                return Err(OpenApiError::Schema(format!(
                    "response key '{code}' of {label} is not a three-digit status code"
                )));
            }
            let response = deref(root, response, 0)?;
            let mut medias = BTreeSet::new();
            if let Some(content) = response
                .as_mapping()
                .and_then(|m| m.get(Value::from("content")))
                .and_then(Value::as_mapping)
            {
                for media in content.keys() {
                    let media = media.as_str().ok_or_else(|| {
                        OpenApiError::Schema(format!(
                            "response media type key of {label} must be a string"
                        ))
                    })?;
                    medias.insert(normalize_media(media));
                }
            }
            documented_responses.insert(code, medias);
        }
    }

    Ok(OperationSpec {
        path: template.to_string(),
        method,
        parameters,
        request_content_types,
        documented_responses,
        deprecated: op_map
            .get(Value::from("deprecated"))
            .and_then(Value::as_bool)
            .unwrap_or(false),
        has_default_response,
    })
}
