//! Models and signal processing for a stub-loaded microstrip water sensor.
//!
//! The sensor's resonance moves with the permittivity of the water it looks
//! into. [`dielectric`] and [`microstrip`] cover the physics, [`response`]
//! maps concentration to resonance shift, [`simulate`] renders scripted
//! basin scenarios, and [`pipeline`] tells solid insertions from dissolved
//! salt and estimates its concentration.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dielectric;
pub mod error;
pub mod io;
pub mod microstrip;
pub mod pipeline;
pub mod response;
pub mod simulate;

pub use error::{Error, Result};
