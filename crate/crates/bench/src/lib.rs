//! Benchmark harness: dataset loading, the repeated consensus protocol and
//! its reports.

pub mod config;
pub mod dataset;
pub mod error;
pub mod protocol;
pub mod report;

pub use config::ProtocolConfig;
pub use dataset::{load_dataset, DatasetSpec};
pub use error::{BenchError, Result};
pub use protocol::{run_protocol, run_protocol_on, ProtocolOutput, RunRecord, RunStatus};
pub use report::emit_report;
