//! Outcome classification (successful / failed / not acceptable, with a
//! bug-exposing refinement on failures), descriptive statistics per session,
//! and the post-processing effort measure: number of lines edited.

use serde::{Deserialize, Serialize};

use crate::amplify::AmplificationSession;
use crate::coverage::{match_interaction, HttpInteraction};
use crate::dsl::{StatusExpectation, TestCase};
use crate::openapi::{CoverageUniverse, OperationKey, StatusClass};
use crate::paths;
use crate::runner::{TestOutcome, Verdict};

/// Three-way classification of an executed test. `Failed` carries the
/// bug-exposing refinement: the failure indicates API misbehavior rather
/// than a defective test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    Successful,
    Failed { bug_exposing: bool },
    NotAcceptable,
}

/// Per-session descriptive statistics. `errored` counts tests that never
/// completed an HTTP exchange; they stay outside the three-way partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionStatistics {
    pub generated: usize,
    pub successful: usize,
    pub failed: usize,
    pub not_acceptable: usize,
    pub bugs_exposed: usize,
    pub errored: usize,
    pub lines_edited: usize,
}

/// Finds the operation a test targets: an exact template lookup first, then
/// a segment match of the substituted path for tests written with concrete
/// paths.
fn resolve_operation<'u>(
    test: &TestCase,
    universe: &'u CoverageUniverse,
) -> Option<&'u crate::openapi::OperationSpec> {
    let key = OperationKey {
        path: paths::normalize(&test.request.path).to_string(),
        method: test.request.method,
    };
    if let Some(op) = universe.operations.get(&key) {
        return Some(op);
    }
    let mut concrete = String::new();
    for segment in paths::segments(&test.request.path) {
        concrete.push('/');
        match paths::placeholder(segment) {
            Some(name) => concrete.push_str(
                &test
                    .request
                    .path_params
                    .get(name)
                    .map(|v| v.render())
                    .unwrap_or_else(|| "_".to_string()),
            ),
            None => concrete.push_str(segment),
        }
    }
    let probe = HttpInteraction {
        method: test.request.method,
        url_path: concrete,
        query_params: Default::default(),
        header_params: Default::default(),
        request_content_type: None,
        request_body: None,
        response_status: 200,
        response_content_type: None,
        timestamp: String::new(),
        test_name: None,
    };
    let key = match_interaction(universe, &probe).ok()?.operation?;
    universe.operations.get(&key)
}

fn heuristic_bug(expectation: &StatusExpectation, observed: u16) -> bool {
    if StatusClass::of(observed) == Some(StatusClass::ServerError) {
        return true;
    }
    // The API accepted input the test deemed invalid.
    let expected_rejection = match expectation {
        StatusExpectation::NotEquals(code) => StatusClass::of(*code) == Some(StatusClass::Success),
        StatusExpectation::ClassEquals(class) => {
            matches!(class, StatusClass::ClientError | StatusClass::ServerError)
        }
        StatusExpectation::Equals(_) => false,
    };
    expected_rejection && StatusClass::of(observed) == Some(StatusClass::Success)
}

/// Classifies one executed test. Tests on deprecated operations are
/// NotAcceptable regardless of verdict; error verdicts (no HTTP exchange)
/// return `None` and are tallied separately. A `bug` field on the test
/// overrides the heuristic for failed tests.
pub fn classify_outcome(
    outcome: &TestOutcome,
    test: &TestCase,
    universe: &CoverageUniverse,
) -> Option<OutcomeClass> {
    if resolve_operation(test, universe).is_some_and(|op| op.deprecated) {
        return Some(OutcomeClass::NotAcceptable);
    }
    match outcome.verdict {
        Verdict::Error => None,
        Verdict::Passed => Some(OutcomeClass::Successful),
        Verdict::Failed => {
            let bug_exposing = test.bug.unwrap_or_else(|| {
                outcome
                    .observed_status
                    .is_some_and(|observed| heuristic_bug(&test.expect, observed))
            });
            Some(OutcomeClass::Failed { bug_exposing })
        }
    }
}

/// Minimal number of edited lines to turn `original` into `edited`: an
/// adjacent delete+insert pair counts as one modified line, pure insertions
/// and deletions count one each.
pub fn count_edited_lines(original: &str, edited: &str) -> usize {
    let a: Vec<&str> = original.lines().collect();
    let b: Vec<&str> = edited.lines().collect();
    // Two-row dynamic program over prefix pairs; a modified line costs 1
    // just like an insertion or deletion.
    let mut previous: Vec<usize> = (0..=b.len()).collect();
    let mut current = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        current[0] = i;
        for j in 1..=b.len() {
            current[j] = if a[i - 1] == b[j - 1] {
                previous[j - 1]
            } else {
                1 + previous[j - 1].min(previous[j]).min(current[j - 1])
            };
        }
        std::mem::swap(&mut previous, &mut current);
    }
    previous[b.len()]
}

/// Tallies classified outcomes into descriptive statistics. `generated` is the
/// extracted test count; error verdicts are excluded from the
/// successful/failed/not-acceptable partition.
pub fn summarize_outcomes(
    tests: &[TestCase],
    outcomes: &[TestOutcome],
    universe: &CoverageUniverse,
    generated: usize,
    lines_edited: usize,
) -> SessionStatistics {
    let mut stats = SessionStatistics {
        generated,
        lines_edited,
        ..Default::default()
    };
    for outcome in outcomes {
        let Some(test) = tests.iter().find(|t| t.name == outcome.test_name) else {
            stats.errored += 1;
            continue;
        };
        match classify_outcome(outcome, test, universe) {
            Some(OutcomeClass::Successful) => stats.successful += 1,
            Some(OutcomeClass::Failed { bug_exposing }) => {
                stats.failed += 1;
                if bug_exposing {
                    stats.bugs_exposed += 1;
                }
            }
            Some(OutcomeClass::NotAcceptable) => stats.not_acceptable += 1,
            None => stats.errored += 1,
        }
    }
    stats
}

/// [`summarize_outcomes`] over a session's own extracted tests and outcomes.
pub fn summarize_session(
    session: &AmplificationSession,
    universe: &CoverageUniverse,
    lines_edited: usize,
) -> SessionStatistics {
    summarize_outcomes(
        &session.extracted,
        &session.outcomes,
        universe,
        session.extracted.len(),
        lines_edited,
    )
}
