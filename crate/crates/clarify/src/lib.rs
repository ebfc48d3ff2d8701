//! Construction pipeline and evaluation harness for intent clarification
//! in tool use.
//!
//! The pipeline turns fully-specified tool-use queries into unspecified
//! ones, assembles multi-turn clarification dialogues, injects
//! error-correction pairs with selective-masking annotations, and emits
//! masked training samples. The harness drives candidate assistants
//! against simulated users across three difficulty levels and reports
//! seven metrics.

pub mod degrade;
pub mod dialogue;
pub mod eval;
pub mod fixtures;
pub mod gateway;
pub mod inject;
pub mod jsonl;
pub mod mask;
pub mod model;
pub mod pipeline;
pub mod prompts;
pub mod protocol;
pub mod seed;
pub mod stats;
