//! Transports for network programs.

pub mod http;
pub mod local;

pub use http::{HttpConfig, HttpEndpoint, RetryPolicy};
pub use local::{run_all, run_all_traced, DelayPolicy, EndpointRun, LocalFabric};
