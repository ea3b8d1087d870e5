//! Entropy-guided conversational recommendation over a structured catalog.

pub mod catalog;
pub mod diversify;
pub mod embedding;
pub mod entropy;
pub mod exec;
pub mod parsing;
pub mod ranking;
pub mod dialogue;
pub mod evalsim;
