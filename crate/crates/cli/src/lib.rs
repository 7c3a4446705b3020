//! Driver pieces for the `hanfq` binary: session replay and synthetic
//! workloads. Kept as a library so integration tests can exercise the same
//! code paths the binary runs.

pub mod session;
pub mod workload;
