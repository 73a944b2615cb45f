//! Command-line front end wiring the amplify -> run -> measure -> report
//! pipeline. Diagnostics go to stderr, reports to stdout or --out.
//! Exit codes: 0 success, 1 operational error, 2 usage error.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use restamp_core::amplify::{
    run_amplification, AmplificationSession, ChatHttpProvider, PromptStrategy, Provider,
    ReplayProvider, SessionState,
};
use restamp_core::analysis::{count_edited_lines, summarize_outcomes};
use restamp_core::coverage::{compute_coverage, read_trace};
use restamp_core::dsl::{parse_test_document, serialize_test_document, TestCase};
use restamp_core::mock::{load_behaviors, MockServer};
use restamp_core::openapi::{extract_universe, parse_specification, CoverageUniverse, SpecFormat};
use restamp_core::report::{coverage_json, coverage_table, statistics_json, statistics_table};
use restamp_core::runner::{run_suite, RunConfig, TestOutcome, Verdict};

#[derive(Parser)]
#[command(
    name = "restamp",
    version,
    about = "Amplify REST API test suites with a language model and measure structural API coverage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Build a prompt from a seed test, query a provider, and extract the
    /// generated tests into a session directory
    Amplify {
        /// Suite file containing exactly one seed test
        #[arg(long)]
        seed: PathBuf,
        /// OpenAPI document (required by strategies 2 and 3)
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Prompt strategy: 1 seed only, 2 adds the document, 3 asks for the
        /// maximum number of tests
        #[arg(long)]
        strategy: u8,
        /// Provider: "replay" (offline, needs --transcript-dir) or
        /// "chat-http" (needs --base-url; credential in RESTAMP_API_KEY)
        #[arg(long)]
        provider: String,
        /// Session directory to create
        #[arg(long)]
        out: PathBuf,
        /// Directory of recorded exchanges for the replay provider
        #[arg(long)]
        transcript_dir: Option<PathBuf>,
        /// Chat-completions base URL, e.g. https://api.example.com/v1
        #[arg(long)]
        base_url: Option<String>,
        #[arg(long, default_value = "gpt-3.5-turbo")]
        model: String,
        /// Provider timeout in seconds
        #[arg(long, default_value_t = 120)]
        timeout: u64,
    },
    /// Execute a test suite over HTTP and record the trace
    Run {
        /// Suite file, or a directory of *.resttest.yaml files
        #[arg(long)]
        tests: PathBuf,
        #[arg(long)]
        base_url: String,
        /// Trace output file (one JSON interaction per line)
        #[arg(long)]
        trace: PathBuf,
        /// Outcomes JSON file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-request timeout in seconds
        #[arg(long, default_value_t = 30)]
        timeout: u64,
        /// Worker threads; execution is sequential by default
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Compute the seven structural coverage metrics from a trace
    Coverage {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include a generation timestamp in the report
        #[arg(long)]
        timestamps: bool,
    },
    /// Classify a session's outcomes and print descriptive statistics
    Report {
        /// Session directory produced by amplify/run
        #[arg(long)]
        session: PathBuf,
        /// OpenAPI document for deprecation classification (defaults to the
        /// one recorded in the session)
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include a generation timestamp in the report
        #[arg(long)]
        timestamps: bool,
    },
    /// Serve a behavior profile over plain HTTP
    MockServe {
        #[arg(long)]
        profile: PathBuf,
        /// Port to bind on 127.0.0.1 (0 picks an ephemeral port)
        #[arg(long)]
        port: u16,
    },
    /// Count the lines edited between two canonical suite files
    DiffEdits {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        edited: PathBuf,
    },
}

enum CliError {
    /// Bad flags or flag combinations: exit 2.
    Usage(String),
    /// Everything that went wrong while doing the work: exit 1.
    Operational(String),
}

impl CliError {
    fn usage(message: impl Into<String>) -> CliError {
        CliError::Usage(message.into())
    }

    fn op(message: impl std::fmt::Display) -> CliError {
        CliError::Operational(message.to_string())
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Operational(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Amplify {
            seed,
            spec,
            strategy,
            provider,
            out,
            transcript_dir,
            base_url,
            model,
            timeout,
        } => amplify(
            &seed,
            spec.as_deref(),
            strategy,
            &provider,
            &out,
            transcript_dir.as_deref(),
            base_url.as_deref(),
            &model,
            timeout,
        ),
        Command::Run {
            tests,
            base_url,
            trace,
            out,
            timeout,
            parallel,
        } => run(&tests, &base_url, &trace, out.as_deref(), timeout, parallel),
        Command::Coverage {
            spec,
            trace,
            format,
            out,
            timestamps,
        } => coverage(&spec, &trace, format, out.as_deref(), timestamps),
        Command::Report {
            session,
            spec,
            format,
            out,
            timestamps,
        } => report(&session, spec.as_deref(), format, out.as_deref(), timestamps),
        Command::MockServe { profile, port } => mock_serve(&profile, port),
        Command::DiffEdits { original, edited } => diff_edits(&original, &edited),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::op(format!("reading stdin: {e}")))?;
        Ok(text)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::op(format!("{}: {e}", path.display())))
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::op(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            std::io::stdout().flush().map_err(CliError::op)
        }
    }
}

fn load_universe(path: &Path) -> Result<CoverageUniverse, CliError> {
    let text = read_input(path)?;
    let format = SpecFormat::from_path(&path.display().to_string());
    let doc = parse_specification(&text, format)
        .map_err(|e| CliError::op(format!("{}: {e}", path.display())))?;
    Ok(extract_universe(&doc))
}

/// Session directory layout: every pipeline stage reads and writes its own
/// file so each stage can be re-run independently.
const SESSION_META: &str = "session.yaml";
const SESSION_SUITE: &str = "suite.resttest.yaml";
const SESSION_EDITED_SUITE: &str = "suite.edited.resttest.yaml";
const SESSION_TRANSCRIPT: &str = "transcript";
const SESSION_OUTCOMES: &str = "outcomes.json";

#[derive(Serialize, Deserialize)]
struct SessionMeta {
    strategy: u8,
    provider: String,
    seed: String,
    spec: Option<String>,
    state: String,
    extracted: usize,
    rejected: usize,
    followup_sent: bool,
}

#[derive(Serialize, Deserialize)]
struct OutcomeRecord {
    test_name: String,
    verdict: Verdict,
    observed_status: Option<u16>,
    failure_message: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct OutcomesFile {
    outcomes: Vec<OutcomeRecord>,
}

#[allow(clippy::too_many_arguments)]
fn amplify(
    seed_path: &Path,
    spec_path: Option<&Path>,
    strategy_id: u8,
    provider_name: &str,
    out_dir: &Path,
    transcript_dir: Option<&Path>,
    base_url: Option<&str>,
    model: &str,
    timeout: u64,
) -> Result<(), CliError> {
    let strategy = PromptStrategy::from_id(strategy_id)
        .ok_or_else(|| CliError::usage(format!("--strategy must be 1, 2 or 3, got {strategy_id}")))?;
    if strategy != PromptStrategy::SeedOnly && spec_path.is_none() {
        return Err(CliError::usage(format!(
            "--strategy {strategy_id} requires --spec"
        )));
    }
    if strategy == PromptStrategy::SeedOnly && spec_path.is_some() {
        return Err(CliError::usage("--strategy 1 does not take --spec"));
    }

    let provider: Box<dyn Provider> = match provider_name {
        "replay" => {
            let dir = transcript_dir.ok_or_else(|| {
                CliError::usage("--provider replay requires --transcript-dir")
            })?;
            Box::new(ReplayProvider::open(dir).map_err(CliError::op)?)
        }
        "chat-http" => {
            let url = base_url
                .ok_or_else(|| CliError::usage("--provider chat-http requires --base-url"))?;
            Box::new(ChatHttpProvider::new(url, model, Duration::from_secs(timeout)))
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown provider '{other}' (expected replay or chat-http)"
            )))
        }
    };

    let seed_suite = parse_test_document(&read_input(seed_path)?)
        .map_err(|e| CliError::op(format!("{}: {e}", seed_path.display())))?;
    if seed_suite.len() != 1 {
        return Err(CliError::op(format!(
            "{}: seed file must contain exactly one test, found {}",
            seed_path.display(),
            seed_suite.len()
        )));
    }
    let seed = seed_suite.into_iter().next().expect("length checked");

    let spec_text = spec_path.map(read_input).transpose()?;

    let session = run_amplification(seed, strategy, spec_text.as_deref(), provider.as_ref())
        .map_err(CliError::op)?;

    write_session(out_dir, &session, provider.id(), seed_path, spec_path)?;
    eprintln!(
        "extracted {} tests ({} rejected blocks) -> {}",
        session.extracted.len(),
        session.rejected.len(),
        out_dir.display()
    );
    if session.state == SessionState::EmptyAmplification {
        eprintln!("note: amplification produced no tests");
    }
    Ok(())
}

fn write_session(
    dir: &Path,
    session: &AmplificationSession,
    provider: &str,
    seed_path: &Path,
    spec_path: Option<&Path>,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::op(format!("{}: {e}", dir.display())))?;
    session
        .transcript
        .write_dir(&dir.join(SESSION_TRANSCRIPT))
        .map_err(CliError::op)?;
    std::fs::write(
        dir.join(SESSION_SUITE),
        serialize_test_document(&session.extracted),
    )
    .map_err(CliError::op)?;
    let meta = SessionMeta {
        strategy: session.strategy.id(),
        provider: provider.to_string(),
        seed: seed_path.display().to_string(),
        spec: spec_path.map(|p| p.display().to_string()),
        state: match session.state {
            SessionState::Completed => "completed".to_string(),
            SessionState::EmptyAmplification => "empty_amplification".to_string(),
        },
        extracted: session.extracted.len(),
        rejected: session.rejected.len(),
        followup_sent: session.followup_sent,
    };
    std::fs::write(
        dir.join(SESSION_META),
        serde_yaml::to_string(&meta).expect("meta serializes"),
    )
    .map_err(CliError::op)?;
    if !session.rejected.is_empty() {
        let rejected = serde_yaml::to_string(&session.rejected).expect("rejected serializes");
        std::fs::write(dir.join("rejected_blocks.yaml"), rejected).map_err(CliError::op)?;
    }
    Ok(())
}

fn load_suite(path: &Path) -> Result<(Vec<TestCase>, PathBuf), CliError> {
    let meta = std::fs::metadata(path).map_err(|e| CliError::op(format!("{}: {e}", path.display())))?;
    if meta.is_file() {
        let tests = parse_test_document(&read_input(path)?)
            .map_err(|e| CliError::op(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        return Ok((tests, dir));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::op(format!("{}: {e}", path.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.display().to_string().ends_with(".resttest.yaml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::op(format!(
            "{}: no *.resttest.yaml files found",
            path.display()
        )));
    }
    let mut tests = Vec::new();
    for file in files {
        let mut suite = parse_test_document(&read_input(&file)?)
            .map_err(|e| CliError::op(format!("{}: {e}", file.display())))?;
        for test in &suite {
            if tests.iter().any(|t: &TestCase| t.name == test.name) {
                return Err(CliError::op(format!(
                    "{}: duplicate test name across suite files: {}",
                    file.display(),
                    test.name
                )));
            }
        }
        tests.append(&mut suite);
    }
    Ok((tests, path.to_path_buf()))
}

fn run(
    tests_path: &Path,
    base_url: &str,
    trace_path: &Path,
    out: Option<&Path>,
    timeout: u64,
    parallel: usize,
) -> Result<(), CliError> {
    let (tests, suite_dir) = load_suite(tests_path)?;
    let mut config = RunConfig::new(base_url);
    config.suite_dir = suite_dir;
    config.timeout = Duration::from_secs(timeout);
    config.parallelism = parallel.max(1);

    let mut sink = std::io::BufWriter::new(
        std::fs::File::create(trace_path)
            .map_err(|e| CliError::op(format!("{}: {e}", trace_path.display())))?,
    );
    let outcomes = run_suite(&tests, &config, &mut sink);
    sink.flush().map_err(CliError::op)?;

    let passed = outcomes.iter().filter(|o| o.verdict == Verdict::Passed).count();
    let failed = outcomes.iter().filter(|o| o.verdict == Verdict::Failed).count();
    let errored = outcomes.iter().filter(|o| o.verdict == Verdict::Error).count();
    eprintln!(
        "{} tests executed: {passed} passed, {failed} failed, {errored} errored; trace -> {}",
        outcomes.len(),
        trace_path.display()
    );

    let file = OutcomesFile {
        outcomes: outcomes
            .iter()
            .map(|o| OutcomeRecord {
                test_name: o.test_name.clone(),
                verdict: o.verdict,
                observed_status: o.observed_status,
                failure_message: o.failure_message.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file).expect("outcomes serialize");
    emit(&format!("{json}\n"), out)
}

fn coverage(
    spec: &Path,
    trace_path: &Path,
    format: Format,
    out: Option<&Path>,
    timestamps: bool,
) -> Result<(), CliError> {
    let universe = load_universe(spec)?;
    let trace = read_trace(&read_input(trace_path)?)
        .map_err(|e| CliError::op(format!("{}: {e}", trace_path.display())))?;
    let report = compute_coverage(&universe, &trace);
    let text = match format {
        Format::Table => {
            let mut table = coverage_table(&report);
            if timestamps {
                table.push_str(&format!("\nGenerated at {}\n", now()));
            }
            table
        }
        Format::Json => {
            let mut value = coverage_json(&report);
            if timestamps {
                value["generated_at"] = serde_json::Value::String(now());
            }
            format!("{}\n", serde_json::to_string_pretty(&value).expect("report serializes"))
        }
    };
    emit(&text, out)
}

fn report(
    session_dir: &Path,
    spec_override: Option<&Path>,
    format: Format,
    out: Option<&Path>,
    timestamps: bool,
) -> Result<(), CliError> {
    let meta_text = read_input(&session_dir.join(SESSION_META))?;
    let meta: SessionMeta = serde_yaml::from_str(&meta_text)
        .map_err(|e| CliError::op(format!("{}: {e}", session_dir.join(SESSION_META).display())))?;

    let suite_path = session_dir.join(SESSION_SUITE);
    let suite_text = read_input(&suite_path)?;
    let tests = parse_test_document(&suite_text)
        .map_err(|e| CliError::op(format!("{}: {e}", suite_path.display())))?;

    let outcomes_text = read_input(&session_dir.join(SESSION_OUTCOMES))?;
    let outcomes_file: OutcomesFile = serde_json::from_str(&outcomes_text).map_err(|e| {
        CliError::op(format!("{}: {e}", session_dir.join(SESSION_OUTCOMES).display()))
    })?;
    let outcomes: Vec<TestOutcome> = outcomes_file
        .outcomes
        .into_iter()
        .map(|record| TestOutcome {
            test_name: record.test_name,
            verdict: record.verdict,
            observed_status: record.observed_status,
            interaction: None,
            failure_message: record.failure_message,
        })
        .collect();

    // Deprecation classification needs the documentation; without it every
    // operation counts as current.
    let universe = match spec_override.map(Path::to_path_buf).or(meta.spec.map(PathBuf::from)) {
        Some(path) => load_universe(&path)?,
        None => CoverageUniverse::from_operations([]),
    };

    let edited_path = session_dir.join(SESSION_EDITED_SUITE);
    let lines_edited = if edited_path.exists() {
        count_edited_lines(&suite_text, &read_input(&edited_path)?)
    } else {
        0
    };

    let stats = summarize_outcomes(&tests, &outcomes, &universe, meta.extracted, lines_edited);
    let text = match format {
        Format::Table => {
            let mut table = statistics_table(&stats);
            if timestamps {
                table.push_str(&format!("\nGenerated at {}\n", now()));
            }
            table
        }
        Format::Json => {
            let mut value = statistics_json(&stats);
            if timestamps {
                value["generated_at"] = serde_json::Value::String(now());
            }
            format!("{}\n", serde_json::to_string_pretty(&value).expect("stats serialize"))
        }
    };
    emit(&text, out)
}

fn mock_serve(profile: &Path, port: u16) -> Result<(), CliError> {
    let rules = load_behaviors(&read_input(profile)?)
        .map_err(|e| CliError::op(format!("{}: {e}", profile.display())))?;
    let server = MockServer::start(rules, port).map_err(CliError::op)?;
    eprintln!(
        "mock service listening on 127.0.0.1:{} (profile: {})",
        server.port(),
        profile.display()
    );
    loop {
        std::thread::sleep(Duration::from_secs(3600));
    }
}

fn diff_edits(original: &Path, edited: &Path) -> Result<(), CliError> {
    let count = count_edited_lines(&read_input(original)?, &read_input(edited)?);
    println!("{count}");
    Ok(())
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
