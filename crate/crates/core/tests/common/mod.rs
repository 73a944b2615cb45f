//! Random universe/trace generation and an independent brute-force coverage
//! oracle. The oracle re-derives template matching and element incidence on
//! its own so it can stand as a second opinion against the engine.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use rand::rngs::StdRng;
use rand::Rng;

use restamp_core::coverage::HttpInteraction;
use restamp_core::openapi::{
    CoverageUniverse, Method, OperationKey, OperationSpec, ParameterLocation, ParameterSpec,
    StatusClass,
};

const LITERALS: [&str; 5] = ["pets", "users", "orders", "items", "find"];
const PLACEHOLDERS: [&str; 2] = ["{id}", "{name}"];
const REQUEST_MEDIA: [&str; 4] = ["application/json", "application/xml", "text/plain", "application/*"];
const RESPONSE_MEDIA: [&str; 4] = ["application/json", "application/xml", "text/plain", "*/*"];
const STATUS_POOL: [&str; 6] = ["200", "201", "204", "400", "404", "500"];
const VALUE_POOL: [&str; 5] = ["1", "2", "42", "-1", "abc"];

pub fn arbitrary_universe(rng: &mut StdRng) -> CoverageUniverse {
    let target = rng.random_range(1..=5);
    let methods = [Method::Get, Method::Post, Method::Put, Method::Delete];
    let mut ops: BTreeMap<(String, Method), OperationSpec> = BTreeMap::new();

    let mut guard = 0;
    while ops.len() < target && guard < 60 {
        guard += 1;
        let depth = rng.random_range(1..=3);
        let mut placeholder_pool: Vec<&str> = PLACEHOLDERS.to_vec();
        let mut segments = Vec::new();
        for position in 0..depth {
            let want_param = position > 0 && rng.random_bool(0.35) && !placeholder_pool.is_empty();
            if want_param {
                let index = rng.random_range(0..placeholder_pool.len());
                segments.push(placeholder_pool.remove(index).to_string());
            } else {
                segments.push(LITERALS[rng.random_range(0..LITERALS.len())].to_string());
            }
        }
        let path = format!("/{}", segments.join("/"));
        let method = methods[rng.random_range(0..methods.len())];
        if ops.contains_key(&(path.clone(), method)) {
            continue;
        }

        let mut parameters: Vec<ParameterSpec> = segments
            .iter()
            .filter_map(|s| s.strip_prefix('{').and_then(|s| s.strip_suffix('}')))
            .map(|name| ParameterSpec {
                name: name.to_string(),
                location: ParameterLocation::Path,
                required: true,
            })
            .collect();
        for name in ["q1", "q2"] {
            if rng.random_bool(0.4) {
                parameters.push(ParameterSpec {
                    name: name.to_string(),
                    location: ParameterLocation::Query,
                    required: rng.random_bool(0.5),
                });
            }
        }
        if rng.random_bool(0.3) {
            parameters.push(ParameterSpec {
                name: "x-token".to_string(),
                location: ParameterLocation::Header,
                required: false,
            });
        }

        let mut request_content_types = BTreeSet::new();
        if rng.random_bool(0.4) {
            for _ in 0..rng.random_range(1..=2) {
                request_content_types
                    .insert(REQUEST_MEDIA[rng.random_range(0..REQUEST_MEDIA.len())].to_string());
            }
            parameters.push(ParameterSpec {
                name: "body".to_string(),
                location: ParameterLocation::Body,
                required: rng.random_bool(0.5),
            });
        }

        let mut documented_responses = BTreeMap::new();
        for _ in 0..rng.random_range(0..=3) {
            let code = STATUS_POOL[rng.random_range(0..STATUS_POOL.len())].to_string();
            let mut medias = BTreeSet::new();
            for _ in 0..rng.random_range(0..=2) {
                medias.insert(RESPONSE_MEDIA[rng.random_range(0..RESPONSE_MEDIA.len())].to_string());
            }
            documented_responses.insert(code, medias);
        }
        let has_default_response = rng.random_bool(0.2);
        if has_default_response {
            documented_responses.insert("default".to_string(), BTreeSet::new());
        }

        ops.insert(
            (path.clone(), method),
            OperationSpec {
                path,
                method,
                parameters,
                request_content_types,
                documented_responses,
                deprecated: rng.random_bool(0.1),
                has_default_response,
            },
        );
    }

    CoverageUniverse::from_operations(ops.into_values())
}

fn jitter_case(rng: &mut StdRng, text: &str) -> String {
    text.chars()
        .map(|c| if rng.random_bool(0.3) { c.to_ascii_uppercase() } else { c })
        .collect()
}

pub fn arbitrary_interaction(rng: &mut StdRng, universe: &CoverageUniverse) -> HttpInteraction {
    let methods = [Method::Get, Method::Post, Method::Put, Method::Delete];
    let documented: Vec<&OperationSpec> = universe.operations.values().collect();

    let mut query_params = IndexMap::new();
    let mut header_params = IndexMap::new();
    let mut request_content_type = None;
    let mut response_content_type = None;
    let mut request_body = None;

    let (url_path, method, op) = if !documented.is_empty() && rng.random_bool(0.75) {
        let op = documented[rng.random_range(0..documented.len())];
        let concrete: Vec<String> = op.path[1..]
            .split('/')
            .map(|segment| {
                if segment.starts_with('{') {
                    VALUE_POOL[rng.random_range(0..VALUE_POOL.len())].to_string()
                } else {
                    segment.to_string()
                }
            })
            .collect();
        let method = if rng.random_bool(0.9) {
            op.method
        } else {
            methods[rng.random_range(0..methods.len())]
        };
        (format!("/{}", concrete.join("/")), method, Some(op))
    } else {
        (
            format!("/junk{}", rng.random_range(0..9)),
            methods[rng.random_range(0..methods.len())],
            None,
        )
    };

    if let Some(op) = op {
        for param in &op.parameters {
            match param.location {
                ParameterLocation::Query if rng.random_bool(0.5) => {
                    query_params.insert(param.name.clone(), vec!["x".to_string()]);
                }
                ParameterLocation::Header if rng.random_bool(0.5) => {
                    header_params.insert(jitter_case(rng, &param.name), "v".to_string());
                }
                _ => {}
            }
        }
        if rng.random_bool(0.5) {
            request_body = Some(b"payload".to_vec());
        }
        if rng.random_bool(0.6) {
            let pool: Vec<&String> = op.request_content_types.iter().collect();
            if !pool.is_empty() {
                let media = pool[rng.random_range(0..pool.len())];
                let decorated = if rng.random_bool(0.3) {
                    format!("{}; charset=utf-8", jitter_case(rng, media))
                } else {
                    media.to_string()
                };
                request_content_type = Some(decorated);
            }
        }
        if rng.random_bool(0.6) {
            let medias: Vec<String> = op
                .documented_responses
                .values()
                .flat_map(|set| set.iter().cloned())
                .collect();
            if !medias.is_empty() {
                let media = &medias[rng.random_range(0..medias.len())];
                response_content_type = Some(if rng.random_bool(0.3) {
                    format!("{media}; charset=utf-8")
                } else {
                    media.to_string()
                });
            }
        }
    }
    if rng.random_bool(0.2) {
        query_params.insert("zz".to_string(), vec!["junk".to_string()]);
    }
    if request_content_type.is_none() && rng.random_bool(0.2) {
        request_content_type = Some("application/octet-stream".to_string());
    }
    if response_content_type.is_none() && rng.random_bool(0.2) {
        response_content_type = Some("text/html".to_string());
    }

    let documented_codes: Vec<u16> = op
        .map(|op| {
            op.documented_responses
                .keys()
                .filter_map(|code| code.parse().ok())
                .collect()
        })
        .unwrap_or_default();
    let response_status = if !documented_codes.is_empty() && rng.random_bool(0.5) {
        documented_codes[rng.random_range(0..documented_codes.len())]
    } else {
        [200, 201, 204, 301, 400, 404, 500, 503][rng.random_range(0..8)]
    };

    HttpInteraction {
        method,
        url_path,
        query_params,
        header_params,
        request_content_type,
        request_body,
        response_status,
        response_content_type,
        timestamp: "2024-05-21T10:00:00Z".to_string(),
        test_name: None,
    }
}

pub fn arbitrary_trace(
    rng: &mut StdRng,
    universe: &CoverageUniverse,
    max: usize,
) -> Vec<HttpInteraction> {
    (0..rng.random_range(0..=max))
        .map(|_| arbitrary_interaction(rng, universe))
        .collect()
}

/// Element sets the oracle decided are covered.
#[derive(Debug, PartialEq, Eq)]
pub struct OracleSets {
    pub paths: BTreeSet<String>,
    pub operations: BTreeSet<OperationKey>,
    pub parameters: BTreeSet<(OperationKey, String, ParameterLocation)>,
    pub request_types: BTreeSet<(OperationKey, String)>,
    pub status_classes: BTreeSet<(OperationKey, StatusClass)>,
    pub statuses: BTreeSet<(OperationKey, String)>,
    pub response_types: BTreeSet<(OperationKey, String)>,
}

fn oracle_template_match(template: &str, concrete: &str) -> bool {
    let t: Vec<&str> = template.trim_start_matches('/').split('/').collect();
    let c: Vec<&str> = concrete.trim_start_matches('/').split('/').collect();
    t.len() == c.len()
        && t.iter().zip(&c).all(|(ts, cs)| {
            if ts.starts_with('{') && ts.ends_with('}') {
                !cs.is_empty()
            } else {
                ts == cs
            }
        })
}

fn oracle_literals(template: &str) -> usize {
    template
        .trim_start_matches('/')
        .split('/')
        .filter(|s| !(s.starts_with('{') && s.ends_with('}')))
        .count()
}

/// Resolves an interaction to an operation exactly like the engine claims
/// to: most-literal template wins, ties are unmatched, method must be
/// documented.
fn oracle_resolve(universe: &CoverageUniverse, ix: &HttpInteraction) -> Option<OperationKey> {
    let matching: Vec<&String> = universe
        .paths
        .iter()
        .filter(|t| oracle_template_match(t, &ix.url_path))
        .collect();
    let best = matching.iter().map(|t| oracle_literals(t)).max()?;
    let winners: Vec<&&String> = matching
        .iter()
        .filter(|t| oracle_literals(t) == best)
        .collect();
    if winners.len() != 1 {
        return None;
    }
    let key = OperationKey {
        path: winners[0].to_string(),
        method: ix.method,
    };
    universe.operations.contains_key(&key).then_some(key)
}

fn oracle_media(raw: &str) -> String {
    raw.split(';').next().unwrap_or("").trim().to_ascii_lowercase()
}

/// Tests every universe element against every interaction independently.
pub fn oracle_coverage(universe: &CoverageUniverse, trace: &[HttpInteraction]) -> OracleSets {
    let resolved: Vec<(Option<OperationKey>, &HttpInteraction)> = trace
        .iter()
        .map(|ix| (oracle_resolve(universe, ix), ix))
        .collect();
    let hits = |key: &OperationKey| {
        resolved
            .iter()
            .filter(move |(k, _)| k.as_ref() == Some(key))
            .map(|(_, ix)| *ix)
            .collect::<Vec<_>>()
    };

    let mut sets = OracleSets {
        paths: BTreeSet::new(),
        operations: BTreeSet::new(),
        parameters: BTreeSet::new(),
        request_types: BTreeSet::new(),
        status_classes: BTreeSet::new(),
        statuses: BTreeSet::new(),
        response_types: BTreeSet::new(),
    };

    for path in &universe.paths {
        let touched = universe
            .operations
            .keys()
            .filter(|key| &key.path == path)
            .any(|key| !hits(key).is_empty());
        if touched {
            sets.paths.insert(path.clone());
        }
    }
    for (key, op) in &universe.operations {
        let interactions = hits(key);
        if !interactions.is_empty() {
            sets.operations.insert(key.clone());
        }
        for param in &op.parameters {
            let bound = interactions.iter().any(|ix| match param.location {
                ParameterLocation::Path => op.path.contains(&format!("{{{}}}", param.name)),
                ParameterLocation::Query => ix.query_params.contains_key(&param.name),
                ParameterLocation::Header => ix
                    .header_params
                    .keys()
                    .any(|h| h.eq_ignore_ascii_case(&param.name)),
                ParameterLocation::Body => ix.request_body.is_some(),
            });
            if bound {
                sets.parameters
                    .insert((key.clone(), param.name.clone(), param.location));
            }
        }
    }
    for (key, media) in &universe.request_type_pairs {
        let exercised = hits(key).iter().any(|ix| {
            ix.request_content_type
                .as_deref()
                .is_some_and(|raw| oracle_media(raw) == *media)
        });
        if exercised {
            sets.request_types.insert((key.clone(), media.clone()));
        }
    }
    for (key, media) in &universe.response_type_pairs {
        let observed = hits(key).iter().any(|ix| {
            ix.response_content_type
                .as_deref()
                .is_some_and(|raw| oracle_media(raw) == *media)
        });
        if observed {
            sets.response_types.insert((key.clone(), media.clone()));
        }
    }
    for (key, code) in &universe.status_pairs {
        if hits(key).iter().any(|ix| ix.response_status.to_string() == *code) {
            sets.statuses.insert((key.clone(), code.clone()));
        }
    }
    for (key, class) in &universe.status_class_pairs {
        if hits(key)
            .iter()
            .any(|ix| StatusClass::of(ix.response_status) == Some(*class))
        {
            sets.status_classes.insert((key.clone(), *class));
        }
    }
    sets
}
