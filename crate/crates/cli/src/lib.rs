//! Library side of the `spreadfit` command-line tool: the experiment
//! harness, transmission-data ingestion, and the JSON report types.

pub mod experiment;
pub mod ingest;
pub mod report;
