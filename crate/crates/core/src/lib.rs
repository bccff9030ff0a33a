//! Finger-vein verification benchmark engine.
//!
//! The crate covers the full evaluation loop: synthetic data sets
//! ([`dataset`]), genuine/imposter pair lists ([`benchmark`]), sandboxed or
//! in-process enroll/match execution ([`runner`]), the FMR/FNMR/EER metric
//! suite ([`metrics`]) and three reference matchers ([`baselines`]).

pub mod imaging;
pub mod dataset;
pub mod benchmark;
pub mod runner;
pub mod metrics;
pub mod baselines;
