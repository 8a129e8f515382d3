//! Independent oracles and scenario generators for the test suites.

pub mod oracle;
pub mod random;
pub mod rational;
