//! Segment-level path template handling shared by the matcher, the runner
//! and the mock service.

/// Strips a trailing slash so `/pet/` and `/pet` refer to the same template.
/// The root path `/` is left alone.
pub fn normalize(path: &str) -> &str {
    if path.len() > 1 {
        path.strip_suffix('/').unwrap_or(path)
    } else {
        path
    }
}

/// Splits a path into segments, ignoring the leading slash.
pub fn segments(path: &str) -> Vec<&str> {
    normalize(path).trim_start_matches('/').split('/').collect()
}

/// Returns the parameter name when a segment is a `{name}` placeholder.
pub fn placeholder(segment: &str) -> Option<&str> {
    let inner = segment.strip_prefix('{')?.strip_suffix('}')?;
    if inner.is_empty() || inner.contains(['{', '}']) {
        None
    } else {
        Some(inner)
    }
}

/// Matches a concrete path against a template segment by segment. Literal
/// segments must match exactly; `{x}` matches any single non-empty segment.
/// Returns the bound `(name, value)` pairs in template order, or `None`.
pub fn match_template<'a>(template: &'a str, path: &'a str) -> Option<Vec<(&'a str, &'a str)>> {
    let tpl = segments(template);
    let real = segments(path);
    if tpl.len() != real.len() {
        return None;
    }
    let mut bound = Vec::new();
    for (t, r) in tpl.iter().zip(&real) {
        match placeholder(t) {
            Some(name) => {
                if r.is_empty() {
                    return None;
                }
                bound.push((name, *r));
            }
            None => {
                if t != r {
                    return None;
                }
            }
        }
    }
    Some(bound)
}

/// Number of literal (non-placeholder) segments, used to rank competing
/// template matches: the most literal template wins.
pub fn literal_count(template: &str) -> usize {
    segments(template)
        .iter()
        .filter(|s| placeholder(s).is_none())
        .count()
}
