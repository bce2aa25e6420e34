//! Shared helpers for the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod fixture;
pub mod oracle;
pub mod props;
pub mod synthetic;
