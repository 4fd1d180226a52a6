//! Benchmarking toolkit for LLM-generated Java method summaries.
//!
//! The pipeline mines methods with leading Javadoc from a source tree,
//! renders five prompt strategies (four lightweight prompts plus a
//! retrieval-augmented few-shot prompt with identifier and def-use facts),
//! optionally masks method names, dispatches prompts to a completion
//! endpoint (or a deterministic mock), scores candidates against the
//! developer-written summaries on eight metrics, and reports aggregate
//! tables, winner distributions, and one-sided significance tests.

pub mod config;
pub mod corpus;
pub mod error;
pub mod facts;
pub mod gateway;
pub mod jsonl;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod report;
pub mod retrieval;
pub mod stats;

mod hash;
mod http;
mod java;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use java::contains_identifier;
