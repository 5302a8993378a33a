//! Command line and HTTP front ends for `gtfs2stn-core`.
//!
//! Both surfaces go through [`ops`], so the same parameters produce the
//! same bytes whether they arrive as flags or as a JSON request.

pub mod cli;
pub mod ops;
pub mod server;
