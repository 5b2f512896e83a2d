//! Test oracles that share no code with `feedforge-core`.
//!
//! Each module re-derives some piece of expected behaviour from first
//! principles or from a third-party parser, so the main crates can be checked
//! against something they did not produce themselves.

pub mod feedcheck;
pub mod fixture;
pub mod greatcircle;
pub mod rdfa;
pub mod shape;
