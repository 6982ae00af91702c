//! Model gateway: provider wire formats, retries, verdict parsing, a mock
//! oracle and the batch runner that turns probes into run records.

pub mod client;
pub mod config;
pub mod oracle;
pub mod runner;
pub mod verdict;
pub mod wire;

pub use client::{Gateway, GatewayError};
pub use config::{ConfigError, ModelConfig, Provider, RetryPolicy};
pub use oracle::mock_oracle;
pub use runner::{run_jobs, Job};
pub use verdict::parse_verdict;
