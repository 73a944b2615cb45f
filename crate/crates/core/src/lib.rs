//! Toolkit for amplifying REST API test suites with large language models
//! and measuring the outcome.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! 1. [`amplify`] builds one of three prompt strategies from a seed test and
//!    an OpenAPI document, sends it to a provider (live or replayed), and
//!    extracts the generated tests.
//! 2. [`runner`] executes declarative test cases over HTTP and records every
//!    exchange as a trace.
//! 3. [`coverage`] matches recorded traffic against the documentation and
//!    computes seven structural coverage metrics.
//! 4. [`analysis`] classifies outcomes (successful / failed / not acceptable /
//!    bug-exposing) and measures post-processing effort in edited lines.
//!
//! [`mock`] provides a deterministic rule-driven HTTP service so the whole
//! pipeline runs offline.

pub mod amplify;
pub mod analysis;
pub mod coverage;
pub mod dsl;
pub mod mock;
pub mod openapi;
pub mod report;
pub mod runner;

pub(crate) mod paths;
