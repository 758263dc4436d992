pub mod cli;
pub mod client;
pub mod domain;
pub mod eval;
pub mod ingest;
pub mod report;
pub mod stats;
pub mod text;
