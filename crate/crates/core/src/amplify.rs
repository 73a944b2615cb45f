//! Prompt construction for the three amplification strategies, provider
//! back ends (offline replay and an OpenAI-compatible chat endpoint), and
//! session orchestration: build prompt, invoke, extract, with at most one
//! follow-up when the model answers in prose.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::SessionStatistics;
use crate::dsl::{extract_tests, serialize_test_document, RejectedBlock, TestCase};
use crate::openapi::hex_string;
use crate::runner::TestOutcome;

/// Fixed system instruction describing the test DSL the model must emit.
pub const SYSTEM_INSTRUCTIONS: &str = include_str!("../prompts/system.txt");
const AMPLIFY_QUESTION: &str = include_str!("../prompts/amplify_question.txt");
const MAXIMIZE_REQUEST: &str = include_str!("../prompts/maximize_request.txt");
const FOLLOWUP_QUESTION: &str = include_str!("../prompts/followup_question.txt");

/// Environment variable holding the chat-http credential.
pub const API_KEY_ENV: &str = "RESTAMP_API_KEY";

#[derive(Debug, Error)]
pub enum AmplifyError {
    #[error("strategy {0} requires the OpenAPI document text")]
    MissingSpec(u8),
    #[error("strategy 1 takes no OpenAPI document")]
    SpecProvided,
    #[error("no recorded completion for prompt fingerprint {0}")]
    ReplayMiss(String),
    #[error("provider request timed out after {0}s")]
    Timeout(u64),
    #[error("provider http error: {0}")]
    Http(String),
    #[error("transcript error: {0}")]
    Transcript(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The three prompt strategies, in increasing order of provided context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStrategy {
    /// Seed test plus the amplification question.
    SeedOnly,
    /// Seed test, the OpenAPI document, then the same question.
    WithSpec,
    /// Seed test, the OpenAPI document, and a request for the maximum
    /// number of test cases placed at the very end.
    MaximizeTests,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 3] = [
        PromptStrategy::SeedOnly,
        PromptStrategy::WithSpec,
        PromptStrategy::MaximizeTests,
    ];

    pub fn id(&self) -> u8 {
        match self {
            PromptStrategy::SeedOnly => 1,
            PromptStrategy::WithSpec => 2,
            PromptStrategy::MaximizeTests => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<PromptStrategy> {
        PromptStrategy::ALL.into_iter().find(|s| s.id() == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

/// A fully rendered prompt. The fingerprint is a stable content hash of the
/// strategy and messages, used as the replay key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub strategy: PromptStrategy,
    pub messages: Vec<Message>,
    pub fingerprint: String,
}

fn fingerprint(strategy: PromptStrategy, messages: &[Message]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("strategy:{}", strategy.id()).as_bytes());
    hasher.update([0]);
    for message in messages {
        let role = match message.role {
            Role::System => "system",
            Role::User => "user",
        };
        hasher.update(role.as_bytes());
        hasher.update([10]);
        hasher.update(message.text.as_bytes());
        hasher.update([0]);
    }
    hex_string(&hasher.finalize())
}

fn seed_block(seed: &TestCase) -> String {
    format!(
        "Here is an existing REST API test:\n\n```yaml\n{}```\n",
        serialize_test_document(std::slice::from_ref(seed))
    )
}

fn spec_block(spec_text: &str) -> String {
    let newline = if spec_text.ends_with('\n') { "" } else { "\n" };
    format!(
        "Here is the OpenAPI documentation for the API under test:\n\n```\n{spec_text}{newline}```\n"
    )
}

/// Builds the prompt for a strategy. Strategies 2 and 3 require the OpenAPI
/// document text; strategy 1 forbids it. Pure: identical inputs produce a
/// byte-identical prompt and fingerprint.
pub fn build_prompt(
    strategy: PromptStrategy,
    seed: &TestCase,
    spec_text: Option<&str>,
) -> Result<Prompt, AmplifyError> {
    let text = match (strategy, spec_text) {
        (PromptStrategy::SeedOnly, None) => {
            format!("{}\n{AMPLIFY_QUESTION}", seed_block(seed))
        }
        (PromptStrategy::SeedOnly, Some(_)) => return Err(AmplifyError::SpecProvided),
        (PromptStrategy::WithSpec, Some(spec)) => {
            format!("{}\n{}\n{AMPLIFY_QUESTION}", seed_block(seed), spec_block(spec))
        }
        (PromptStrategy::MaximizeTests, Some(spec)) => {
            // The maximize request goes at the end, after seed and document.
            format!("{}\n{}\n{MAXIMIZE_REQUEST}", seed_block(seed), spec_block(spec))
        }
        (s, None) => return Err(AmplifyError::MissingSpec(s.id())),
    };
    let messages = vec![
        Message {
            role: Role::System,
            text: SYSTEM_INSTRUCTIONS.to_string(),
        },
        Message {
            role: Role::User,
            text,
        },
    ];
    Ok(Prompt {
        fingerprint: fingerprint(strategy, &messages),
        strategy,
        messages,
    })
}

/// The single follow-up issued when a completion contained no code blocks.
/// The previous answer is quoted in the user turn so a live provider keeps
/// its own scenarios in context.
pub fn followup_prompt(original: &Prompt, previous_completion: &str) -> Prompt {
    let mut messages = original.messages.clone();
    messages.push(Message {
        role: Role::User,
        text: format!(
            "You answered with test scenarios in natural language:\n\n{previous_completion}\n\n{FOLLOWUP_QUESTION}"
        ),
    });
    Prompt {
        fingerprint: fingerprint(original.strategy, &messages),
        strategy: original.strategy,
        messages,
    }
}

/// One prompt/completion exchange as recorded in a transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub fingerprint: String,
    pub provider: String,
    pub timestamp: String,
    pub strategy: u8,
    pub messages: Vec<Message>,
    pub completion: String,
}

/// Append-only record of every exchange in a session, replayable byte for
/// byte.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProviderTranscript {
    entries: Vec<TranscriptEntry>,
}

#[derive(Serialize, Deserialize)]
struct PromptDoc {
    fingerprint: String,
    provider: String,
    timestamp: String,
    strategy: u8,
    messages: Vec<Message>,
}

#[derive(Serialize, Deserialize)]
struct CompletionDoc {
    text: String,
}

impl TranscriptEntry {
    /// Two-document YAML stream: the prompt, then the completion.
    pub fn to_yaml(&self) -> String {
        let prompt = PromptDoc {
            fingerprint: self.fingerprint.clone(),
            provider: self.provider.clone(),
            timestamp: self.timestamp.clone(),
            strategy: self.strategy,
            messages: self.messages.clone(),
        };
        let completion = CompletionDoc {
            text: self.completion.clone(),
        };
        format!(
            "{}---\n{}",
            serde_yaml::to_string(&prompt).expect("prompt serializes"),
            serde_yaml::to_string(&completion).expect("completion serializes"),
        )
    }

    pub fn from_yaml(text: &str) -> Result<TranscriptEntry, AmplifyError> {
        let mut documents = serde_yaml::Deserializer::from_str(text);
        let prompt_doc = documents
            .next()
            .ok_or_else(|| AmplifyError::Transcript("missing prompt document".into()))?;
        let prompt = PromptDoc::deserialize(prompt_doc)
            .map_err(|e| AmplifyError::Transcript(e.to_string()))?;
        let completion_doc = documents
            .next()
            .ok_or_else(|| AmplifyError::Transcript("missing completion document".into()))?;
        let completion = CompletionDoc::deserialize(completion_doc)
            .map_err(|e| AmplifyError::Transcript(e.to_string()))?;
        Ok(TranscriptEntry {
            fingerprint: prompt.fingerprint,
            provider: prompt.provider,
            timestamp: prompt.timestamp,
            strategy: prompt.strategy,
            messages: prompt.messages,
            completion: completion.text,
        })
    }
}

impl ProviderTranscript {
    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn push(&mut self, entry: TranscriptEntry) {
        self.entries.push(entry);
    }

    /// Writes one `<fingerprint>.yaml` file per exchange.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for entry in &self.entries {
            std::fs::write(dir.join(format!("{}.yaml", entry.fingerprint)), entry.to_yaml())?;
        }
        Ok(())
    }

    /// Loads every `*.yaml` exchange in a directory, in file-name order.
    pub fn read_dir(dir: &Path) -> Result<ProviderTranscript, AmplifyError> {
        let mut names: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "yaml"))
            .collect();
        names.sort();
        let mut transcript = ProviderTranscript::default();
        for path in names {
            let text = std::fs::read_to_string(&path)?;
            transcript.push(TranscriptEntry::from_yaml(&text)?);
        }
        Ok(transcript)
    }
}

/// A completion returned by a provider. Replay providers return the recorded
/// timestamp so replayed sessions are byte-identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub timestamp: String,
}

pub trait Provider {
    fn id(&self) -> &str;
    fn complete(&self, prompt: &Prompt) -> Result<Completion, AmplifyError>;
}

/// Offline provider: answers from a transcript directory keyed by prompt
/// fingerprint.
pub struct ReplayProvider {
    index: HashMap<String, TranscriptEntry>,
}

impl ReplayProvider {
    pub fn open(dir: &Path) -> Result<ReplayProvider, AmplifyError> {
        let transcript = ProviderTranscript::read_dir(dir)?;
        let index = transcript
            .entries
            .into_iter()
            .map(|entry| (entry.fingerprint.clone(), entry))
            .collect();
        Ok(ReplayProvider { index })
    }
}

impl Provider for ReplayProvider {
    fn id(&self) -> &str {
        "replay"
    }

    fn complete(&self, prompt: &Prompt) -> Result<Completion, AmplifyError> {
        let entry = self
            .index
            .get(&prompt.fingerprint)
            .ok_or_else(|| AmplifyError::ReplayMiss(prompt.fingerprint.clone()))?;
        Ok(Completion {
            text: entry.completion.clone(),
            timestamp: entry.timestamp.clone(),
        })
    }
}

/// Speaks the de-facto OpenAI-compatible chat-completions protocol against a
/// configurable base URL. The credential comes from [`API_KEY_ENV`].
pub struct ChatHttpProvider {
    base_url: String,
    model: String,
    api_key: Option<String>,
    timeout: Duration,
}

impl ChatHttpProvider {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

    pub fn new(base_url: impl Into<String>, model: impl Into<String>, timeout: Duration) -> Self {
        ChatHttpProvider {
            base_url: base_url.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            timeout,
        }
    }
}

impl Provider for ChatHttpProvider {
    fn id(&self) -> &str {
        "chat-http"
    }

    fn complete(&self, prompt: &Prompt) -> Result<Completion, AmplifyError> {
        let messages: Vec<serde_json::Value> = prompt
            .messages
            .iter()
            .map(|m| {
                serde_json::json!({
                    "role": match m.role { Role::System => "system", Role::User => "user" },
                    "content": m.text,
                })
            })
            .collect();
        let payload = serde_json::json!({
            "model": self.model,
            "messages": messages,
            "temperature": 0,
        });

        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .new_agent();
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let mut request = agent.post(&url);
        if let Some(key) = &self.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request.send_json(&payload).map_err(|e| match e {
            ureq::Error::Timeout(_) => AmplifyError::Timeout(self.timeout.as_secs()),
            ureq::Error::StatusCode(code) => AmplifyError::Http(format!("status {code} from {url}")),
            other => AmplifyError::Http(other.to_string()),
        })?;

        let body: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| AmplifyError::Http(format!("unreadable response body: {e}")))?;
        let text = body["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| {
                AmplifyError::Http("response has no choices[0].message.content".into())
            })?
            .to_string();
        Ok(Completion {
            text,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }
}

/// Sends one prompt and appends the exchange to the transcript.
pub fn invoke_provider(
    provider: &dyn Provider,
    prompt: &Prompt,
    transcript: &mut ProviderTranscript,
) -> Result<String, AmplifyError> {
    let completion = provider.complete(prompt)?;
    transcript.push(TranscriptEntry {
        fingerprint: prompt.fingerprint.clone(),
        provider: provider.id().to_string(),
        timestamp: completion.timestamp,
        strategy: prompt.strategy.id(),
        messages: prompt.messages.clone(),
        completion: completion.text.clone(),
    });
    Ok(completion.text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Completed,
    /// Zero tests extracted even after the follow-up; a reported state, not
    /// an error.
    EmptyAmplification,
}

/// Everything produced by one amplification run. Outcomes and statistics are
/// filled in later by the runner and analysis stages.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationSession {
    pub seed: TestCase,
    pub strategy: PromptStrategy,
    pub spec_text: Option<String>,
    pub transcript: ProviderTranscript,
    pub extracted: Vec<TestCase>,
    pub rejected: Vec<RejectedBlock>,
    pub followup_sent: bool,
    pub state: SessionState,
    pub outcomes: Vec<TestOutcome>,
    pub statistics: Option<SessionStatistics>,
}

/// Runs one amplification conversation: build prompt, invoke, extract; when
/// the completion has no code blocks at all, issue exactly one follow-up
/// asking for test code and extract again.
pub fn run_amplification(
    seed: TestCase,
    strategy: PromptStrategy,
    spec_text: Option<&str>,
    provider: &dyn Provider,
) -> Result<AmplificationSession, AmplifyError> {
    let prompt = build_prompt(strategy, &seed, spec_text)?;
    let mut transcript = ProviderTranscript::default();

    let completion = invoke_provider(provider, &prompt, &mut transcript)?;
    let mut extraction = extract_tests(&completion);
    let mut followup_sent = false;

    if extraction.natural_language_only {
        let followup = followup_prompt(&prompt, &completion);
        let second = invoke_provider(provider, &followup, &mut transcript)?;
        extraction = extract_tests(&second);
        followup_sent = true;
    }

    let state = if extraction.tests.is_empty() {
        SessionState::EmptyAmplification
    } else {
        SessionState::Completed
    };

    Ok(AmplificationSession {
        seed,
        strategy,
        spec_text: spec_text.map(|s| s.to_string()),
        transcript,
        extracted: extraction.tests,
        rejected: extraction.rejected_blocks,
        followup_sent,
        state,
        outcomes: Vec::new(),
        statistics: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_test_document;
    use std::cell::RefCell;
    use std::collections::VecDeque;

    fn seed_test() -> TestCase {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/seed.resttest.yaml"
        ))
        .unwrap();
        parse_test_document(&text).unwrap().remove(0)
    }

    /// Deterministic in-memory provider replying with a fixed sequence.
    struct ScriptedProvider {
        responses: RefCell<VecDeque<String>>,
    }

    impl ScriptedProvider {
        fn new(responses: &[&str]) -> Self {
            ScriptedProvider {
                responses: RefCell::new(responses.iter().map(|s| s.to_string()).collect()),
            }
        }
    }

    impl Provider for ScriptedProvider {
        fn id(&self) -> &str {
            "scripted"
        }

        fn complete(&self, _prompt: &Prompt) -> Result<Completion, AmplifyError> {
            let text = self
                .responses
                .borrow_mut()
                .pop_front()
                .expect("scripted provider ran out of responses");
            Ok(Completion {
                text,
                timestamp: "2024-05-21T10:00:00Z".to_string(),
            })
        }
    }

    const DSL_COMPLETION: &str = "Sure:\n```yaml\ntests:\n- name: ping\n  request: {method: GET, path: /ping}\n  expect: {status: 200}\n```\n";

    #[test]
    fn strategy_one_prompt_ends_with_the_question() {
        let prompt = build_prompt(PromptStrategy::SeedOnly, &seed_test(), None).unwrap();
        assert_eq!(prompt.messages.len(), 2);
        assert_eq!(prompt.messages[0].role, Role::System);
        let user = &prompt.messages[1].text;
        assert!(user.contains("uploadImageHappyPath"));
        assert!(user.ends_with("Can you perform test amplification?"));
        assert!(!user.contains("openapi:"));
    }

    #[test]
    fn strategy_three_orders_seed_spec_maximize() {
        let spec = "openapi: 3.0.3\ninfo: {title: X}\npaths: {}";
        let prompt = build_prompt(PromptStrategy::MaximizeTests, &seed_test(), Some(spec)).unwrap();
        let user = &prompt.messages[1].text;
        let seed_at = user.find("uploadImageHappyPath").unwrap();
        let spec_at = user.find("openapi: 3.0.3").unwrap();
        let maximize_at = user.find("maximum number of test cases").unwrap();
        assert!(seed_at < spec_at && spec_at < maximize_at);
        assert!(user.trim_end().ends_with("you can."));
    }

    #[test]
    fn spec_requirements_are_enforced() {
        assert!(matches!(
            build_prompt(PromptStrategy::WithSpec, &seed_test(), None),
            Err(AmplifyError::MissingSpec(2))
        ));
        assert!(matches!(
            build_prompt(PromptStrategy::MaximizeTests, &seed_test(), None),
            Err(AmplifyError::MissingSpec(3))
        ));
        assert!(matches!(
            build_prompt(PromptStrategy::SeedOnly, &seed_test(), Some("x")),
            Err(AmplifyError::SpecProvided)
        ));
    }

    #[test]
    fn identical_inputs_give_identical_fingerprints() {
        let a = build_prompt(PromptStrategy::SeedOnly, &seed_test(), None).unwrap();
        let b = build_prompt(PromptStrategy::SeedOnly, &seed_test(), None).unwrap();
        assert_eq!(a, b);
        let c = build_prompt(PromptStrategy::WithSpec, &seed_test(), Some("spec")).unwrap();
        assert_ne!(a.fingerprint, c.fingerprint);
    }

    #[test]
    fn transcript_entry_round_trips_through_yaml() {
        let prompt = build_prompt(PromptStrategy::SeedOnly, &seed_test(), None).unwrap();
        let entry = TranscriptEntry {
            fingerprint: prompt.fingerprint.clone(),
            provider: "replay".to_string(),
            timestamp: "2024-05-21T10:00:00Z".to_string(),
            strategy: 1,
            messages: prompt.messages.clone(),
            completion: DSL_COMPLETION.to_string(),
        };
        let parsed = TranscriptEntry::from_yaml(&entry.to_yaml()).unwrap();
        assert_eq!(parsed, entry);
    }

    #[test]
    fn replay_returns_recorded_completion_byte_for_byte() {
        let dir = tempfile::tempdir().unwrap();
        let prompt = build_prompt(PromptStrategy::SeedOnly, &seed_test(), None).unwrap();
        let mut transcript = ProviderTranscript::default();
        transcript.push(TranscriptEntry {
            fingerprint: prompt.fingerprint.clone(),
            provider: "chat-http".to_string(),
            timestamp: "2024-05-21T10:00:00Z".to_string(),
            strategy: 1,
            messages: prompt.messages.clone(),
            completion: DSL_COMPLETION.to_string(),
        });
        transcript.write_dir(dir.path()).unwrap();

        let replay = ReplayProvider::open(dir.path()).unwrap();
        let first = replay.complete(&prompt).unwrap();
        let second = replay.complete(&prompt).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.text, DSL_COMPLETION);
        assert_eq!(first.timestamp, "2024-05-21T10:00:00Z");
    }

    #[test]
    fn replay_miss_on_unknown_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let replay = ReplayProvider::open(dir.path()).unwrap();
        let prompt = build_prompt(PromptStrategy::SeedOnly, &seed_test(), None).unwrap();
        assert!(matches!(
            replay.complete(&prompt),
            Err(AmplifyError::ReplayMiss(_))
        ));
    }

    #[test]
    fn direct_dsl_completion_needs_no_followup() {
        let provider = ScriptedProvider::new(&[DSL_COMPLETION]);
        let session =
            run_amplification(seed_test(), PromptStrategy::SeedOnly, None, &provider).unwrap();
        assert!(!session.followup_sent);
        assert_eq!(session.extracted.len(), 1);
        assert_eq!(session.state, SessionState::Completed);
        assert_eq!(session.transcript.entries().len(), 1);
    }

    #[test]
    fn prose_completion_triggers_exactly_one_followup() {
        let provider = ScriptedProvider::new(&["1. scenario only, no code\n", DSL_COMPLETION]);
        let session =
            run_amplification(seed_test(), PromptStrategy::SeedOnly, None, &provider).unwrap();
        assert!(session.followup_sent);
        assert_eq!(session.extracted.len(), 1);
        assert_eq!(session.transcript.entries().len(), 2);
        // The follow-up keeps the conversation and asks for the test code.
        let followup_messages = &session.transcript.entries()[1].messages;
        assert_eq!(followup_messages.len(), 3);
        assert!(followup_messages[2]
            .text
            .ends_with("Can you write the test code for these scenarios?"));
        assert!(followup_messages[2].text.contains("scenario only"));
    }

    #[test]
    fn empty_completions_end_in_empty_amplification() {
        let provider = ScriptedProvider::new(&["", ""]);
        let session =
            run_amplification(seed_test(), PromptStrategy::SeedOnly, None, &provider).unwrap();
        assert!(session.followup_sent);
        assert_eq!(session.state, SessionState::EmptyAmplification);
        assert!(session.extracted.is_empty());
        // At most one follow-up is ever sent.
        assert_eq!(session.transcript.entries().len(), 2);
    }

    #[test]
    fn replayed_sessions_are_deterministic_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let scripted = ScriptedProvider::new(&["prose first\n", DSL_COMPLETION]);
        let recorded =
            run_amplification(seed_test(), PromptStrategy::SeedOnly, None, &scripted).unwrap();
        recorded.transcript.write_dir(dir.path()).unwrap();

        let replay = ReplayProvider::open(dir.path()).unwrap();
        let first =
            run_amplification(seed_test(), PromptStrategy::SeedOnly, None, &replay).unwrap();
        let second =
            run_amplification(seed_test(), PromptStrategy::SeedOnly, None, &replay).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.extracted, recorded.extracted);
        assert!(first.followup_sent);
    }

    #[test]
    fn chat_http_provider_against_stub_server() {
        let profile = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/profiles/chat-stub.yaml"
        ))
        .unwrap();
        let rules = crate::mock::load_behaviors(&profile).unwrap();
        let server = crate::mock::MockServer::start(rules, 0).unwrap();

        let provider = ChatHttpProvider::new(
            format!("{}/v1", server.base_url()),
            "stub",
            Duration::from_secs(10),
        );
        let session =
            run_amplification(seed_test(), PromptStrategy::SeedOnly, None, &provider).unwrap();
        assert_eq!(session.transcript.entries().len(), 1);
        assert_eq!(session.extracted.len(), 1);
        assert_eq!(session.extracted[0].name, "pingRoundTrip");
        assert_eq!(session.transcript.entries()[0].provider, "chat-http");
        server.shutdown();
    }

    #[test]
    fn chat_http_maps_bad_status_to_http_error() {
        let profile = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/profiles/chat-stub.yaml"
        ))
        .unwrap();
        let rules = crate::mock::load_behaviors(&profile).unwrap();
        let server = crate::mock::MockServer::start(rules, 0).unwrap();
        // Wrong base path: the stub answers 404 with a JSON error body.
        let provider = ChatHttpProvider::new(server.base_url(), "stub", Duration::from_secs(10));
        let prompt = build_prompt(PromptStrategy::SeedOnly, &seed_test(), None).unwrap();
        assert!(matches!(provider.complete(&prompt), Err(AmplifyError::Http(_))));
        server.shutdown();
    }
}
