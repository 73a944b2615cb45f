//! Keeps the committed replay transcripts in sync with the prompt builder.
//!
//! The completion texts under fixtures/completions/ are authored by hand;
//! the transcript envelope (prompt messages + fingerprint file name) is
//! derived from them. After changing prompt templates or the seed test,
//! regenerate with:
//!
//! ```bash
//! cargo test -p restamp-core --test transcript_fixtures -- --ignored
//! ```

use std::path::{Path, PathBuf};

use restamp_core::amplify::{
    build_prompt, followup_prompt, PromptStrategy, ProviderTranscript, TranscriptEntry,
};
use restamp_core::dsl::parse_test_document;

const FIXED_TIMESTAMP: &str = "2024-05-21T10:00:00Z";

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read_fixture(rel: &str) -> String {
    let path = fixtures_dir().join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn entry(prompt: &restamp_core::amplify::Prompt, completion: String) -> TranscriptEntry {
    TranscriptEntry {
        fingerprint: prompt.fingerprint.clone(),
        provider: "chat-http".to_string(),
        timestamp: FIXED_TIMESTAMP.to_string(),
        strategy: prompt.strategy.id(),
        messages: prompt.messages.clone(),
        completion,
    }
}

/// (directory name, transcript) pairs for every committed replay fixture.
fn expected_transcripts() -> Vec<(&'static str, ProviderTranscript)> {
    let seed = parse_test_document(&read_fixture("seed.resttest.yaml"))
        .expect("seed suite parses")
        .remove(0);
    let prompt = build_prompt(PromptStrategy::SeedOnly, &seed, None).expect("prompt builds");
    let scenarios = read_fixture("completions/prompt1_scenarios.md");
    let tests = read_fixture("completions/prompt1_tests.md");

    let mut direct = ProviderTranscript::default();
    direct.push(entry(&prompt, tests.clone()));

    let mut followup = ProviderTranscript::default();
    followup.push(entry(&prompt, scenarios.clone()));
    let second = followup_prompt(&prompt, &scenarios);
    followup.push(entry(&second, tests));

    vec![
        ("transcripts/prompt1_direct", direct),
        ("transcripts/prompt1_followup", followup),
    ]
}

#[test]
#[ignore = "writes into fixtures/; run explicitly after prompt or seed changes"]
fn regenerate_transcript_fixtures() {
    for (rel, transcript) in expected_transcripts() {
        let dir = fixtures_dir().join(rel);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).unwrap();
        }
        transcript.write_dir(&dir).unwrap();
        println!("wrote {} ({} exchanges)", dir.display(), transcript.entries().len());
    }
}

#[test]
fn committed_transcripts_match_current_prompts() {
    for (rel, expected) in expected_transcripts() {
        let dir = fixtures_dir().join(rel);
        let committed = ProviderTranscript::read_dir(&dir).unwrap_or_else(|e| {
            panic!(
                "{}: {e}\nregenerate with: cargo test -p restamp-core --test transcript_fixtures -- --ignored",
                dir.display()
            )
        });
        // read_dir returns file-name order; compare as fingerprint-keyed sets.
        let by_fingerprint = |t: &ProviderTranscript| {
            let mut entries = t.entries().to_vec();
            entries.sort_by(|a, b| a.fingerprint.cmp(&b.fingerprint));
            entries
        };
        assert_eq!(
            by_fingerprint(&committed),
            by_fingerprint(&expected),
            "{} is stale; regenerate with: cargo test -p restamp-core --test transcript_fixtures -- --ignored",
            dir.display()
        );
    }
}
