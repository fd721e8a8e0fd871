//! Scenario harness, file formats, and reporting for [`osa_core`].

pub mod formats;
pub mod metrics;
pub mod runner;
pub mod scenario;
