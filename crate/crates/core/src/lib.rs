//! Simulation lab for hybrid locked PUFs.
//!
//! A classical PUF ([`cpuf`]) has its response bits encoded into
//! non-orthogonal quantum states ([`hybrid`]), optionally behind a
//! measurement-based lock. [`protocol`] runs the challenge-response
//! authentication round trip over an adversary-controlled channel,
//! [`adversary`] holds the attacks, and [`analytics`] evaluates the
//! closed-form security bounds they are checked against. [`runner`] wraps
//! it all into reproducible, CSV-emitting experiments.

pub mod adversary;
pub mod analytics;
pub mod cpuf;
pub mod error;
pub mod hybrid;
pub mod protocol;
pub mod qstate;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
