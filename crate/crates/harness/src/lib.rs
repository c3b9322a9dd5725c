//! Evaluation harness for LLM-generated stochastic optimization models:
//! candidate execution, prompting pipeline, experiment sweeps and reports.

pub mod aggregate;
pub mod config;
pub mod corpus;
pub mod experiment;
pub mod pipeline;
pub mod replay;
pub mod report;
pub mod runner;
