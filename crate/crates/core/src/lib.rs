//! Simulation of phase-decorated quantum oracles.
//!
//! An oracle for a set `X ⊆ Σⁿ` is realized as the unitary
//! `|x,y⟩ → e^{iφ_{x,y}} |x, y ⊕ f(x)⟩`. The phases are invisible to a
//! classical caller, who only ever sees `f(x)`, but a quantum caller can
//! read them through interference. This crate provides:
//!
//! - [`hilbert`]: state vectors over the `|x,y⟩` basis, inner products and
//!   projector measurement.
//! - [`oracle`]: membership tables, phase profiles and the oracle unitary.
//! - [`protocols`]: the double-oracle Deutsch–Jozsa run in its phase
//!   variants and the phase-encoded function readout.
//! - [`classical`]: classical queries, transcript comparison, exhaustive
//!   decision-tree lower bounds and a bounded-step toy machine interpreter.
//! - [`scenario`] and [`report`]: the scenario-driven experiment runner
//!   behind the `phase-oracle` binary.

pub mod classical;
pub mod error;
pub mod hilbert;
pub mod oracle;
pub mod protocols;
pub mod report;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use hilbert::{BasisLabel, StateVector};
pub use oracle::{MembershipTable, OracleSpec, PhaseKind, PhaseProfile};
pub use protocols::{DJConfig, DJOutcome, MiddleOp, SecondCall, Verdict};
