//! Invariant-negation attack synthesis for structured-text safety logic.
//!
//! The pipeline parses a safety program and its companion control program,
//! extracts the safety invariants, synthesizes a malicious safety payload and
//! a hazard driver, and replays them in a closed-loop tank-pump simulator.

pub mod cli;
pub mod harness;
pub mod model;
pub mod sim;
pub mod st;
pub mod synth;
