//! Scenario-driven verification harness: parse a scenario file, run the
//! selected checks against the algebra library, and render the results.

pub mod report;
pub mod runner;
pub mod scenario;
