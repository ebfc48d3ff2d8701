//! Evaluation harness: scenario construction over three difficulty levels,
//! user simulation, session driving, and metric aggregation.

mod metrics;
mod scenario;
mod session;
mod simulator;

pub use metrics::{
    aggregate, f1_sets, normalize_value, score_session, MetricsBlock, MetricsReport, SessionTally,
};
pub use scenario::{build_scenario, default_personas, EvalConfig, Level, Persona, Scenario};
pub use session::{
    run_session, Assistant, BrokenJsonAssistant, HttpAssistant, ImmediateSummaryAssistant,
    LoopingAssistant, OracleAssistant, ScriptedPolicy, SessionTranscript, Termination,
};
pub use simulator::simulate_user;

use crate::gateway::GatewayError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty {0} pool for the requested level")]
    EmptyPool(&'static str),
    #[error("no tallies to aggregate")]
    EmptyInput,
    #[error("candidate assistant failed: {0}")]
    AssistantError(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}
