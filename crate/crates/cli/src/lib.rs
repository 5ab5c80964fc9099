//! Batch front end: documents of named connections and linear data, a job
//! list, and structured reports.

pub mod document;
pub mod jobs;
pub mod locate;
pub mod number;

pub use document::{parse_document, serialize_document, Command, Diagnostic, DiagnosticKind, Document, Job, Object};
pub use jobs::{run_job, run_jobs, Report, Verdict};
