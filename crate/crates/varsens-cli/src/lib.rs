//! Support library for the `varsens` command-line tool: parameter ingestion
//! (native JSON and the legacy `&`-separated form), method orchestration,
//! and report rendering.

pub mod legacy;
pub mod request;
