//! Session driving: alternates a candidate assistant against the simulated
//! user until it summarizes, breaks the protocol, or exhausts the round
//! budget (round cap per unspecified intent).

use super::{simulate_user, EvalConfig, EvalError, Scenario};
use crate::dialogue::task_statement;
use crate::gateway::{
    ChatMessage, ChatRequest, Gateway, GatewayConfig, GatewayMode, Role, Sampling,
};
use crate::model::{DialogueTurn, SolutionPath, ToolCall, TurnKind};
use crate::prompts;
use crate::protocol::{self, ParamSpelling};
use serde::{Deserialize, Serialize};

/// A turn-taking candidate. `history` starts with the user task statement
/// and alternates user/assistant; the candidate returns its next turn.
pub trait Assistant {
    fn respond(&mut self, system_prompt: &str, history: &[ChatMessage]) -> Result<String, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Summarized,
    RoundCapExceeded,
    ParseFailure,
    AssistantError,
}

/// One evaluated interaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub record_id: String,
    pub level: super::Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona_id: Option<String>,
    pub turns: Vec<DialogueTurn>,
    pub questions_asked: usize,
    pub rounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_solution: Option<SolutionPath>,
    pub termination: Termination,
    /// True when the candidate emitted error-demarcation markers; they are
    /// stripped before parsing.
    pub flagged_markers: bool,
}

/// Drives one session. Terminates on the first declared summary
/// (Summarized or ParseFailure), when a new question would push the count
/// past `round_cap_per_intent x max(1, removed)`, or on assistant failure.
pub fn run_session(
    assistant: &mut dyn Assistant,
    scenario: &Scenario,
    gateway: &Gateway,
    config: &EvalConfig,
) -> SessionTranscript {
    let record = &scenario.record;
    let menu_names: Vec<String> = scenario.api_menu.iter().map(|d| d.name.clone()).collect();
    let task = task_statement(&record.unspecified_query, &menu_names);
    let mut history = vec![ChatMessage {
        role: Role::User,
        content: task.clone(),
    }];
    let mut turns = vec![DialogueTurn::user(TurnKind::TaskStatement, task)];

    let removed = record.removed_count();
    let budget = scenario.round_cap_per_intent * removed.max(1);
    // Safety valve against candidates that neither ask nor summarize.
    let max_assistant_turns = 2 * budget + 2;

    let mut questions_asked = 0usize;
    let mut rounds = 0usize;
    let mut flagged_markers = false;

    let (termination, final_solution) = loop {
        let raw = match assistant.respond(prompts::EVALUATION_SYSTEM, &history) {
            Ok(text) => text,
            Err(_) => break (Termination::AssistantError, None),
        };
        let (text, had_markers) = protocol::strip_error_markers(&raw);
        flagged_markers |= had_markers;
        let events = protocol::parse_turn(&text);

        if events.iter().any(|e| e.is_summary()) {
            rounds += 1;
            turns.push(DialogueTurn::assistant(TurnKind::Summary, text.clone()));
            match protocol::extract_solution(&text) {
                Ok(solution) => break (Termination::Summarized, Some(solution)),
                Err(_) => break (Termination::ParseFailure, None),
            }
        }

        let new_questions = events.iter().filter(|e| e.is_question()).count();
        if questions_asked + new_questions > budget {
            // The over-budget turn is not serviced.
            break (Termination::RoundCapExceeded, None);
        }
        rounds += 1;
        if rounds > max_assistant_turns {
            break (Termination::RoundCapExceeded, None);
        }
        questions_asked += new_questions;
        turns.push(DialogueTurn::assistant(TurnKind::Mixed, text.clone()));
        history.push(ChatMessage {
            role: Role::Assistant,
            content: text,
        });

        let reply = match simulate_user(scenario, &events, &history, gateway, config) {
            Ok(reply) => reply,
            Err(_) => break (Termination::AssistantError, None),
        };
        turns.push(DialogueTurn::user(TurnKind::UserReply, reply.clone()));
        history.push(ChatMessage {
            role: Role::User,
            content: reply,
        });
    };

    SessionTranscript {
        record_id: record.record_id.clone(),
        level: scenario.level,
        persona_id: scenario.persona.as_ref().map(|p| p.id.clone()),
        turns,
        questions_asked,
        rounds,
        final_solution,
        termination,
        flagged_markers,
    }
}

/// Reference assistant that plays the gold record: asks one question per
/// removed parameter in position order, then summarizes the exact solution.
pub struct OracleAssistant {
    record: crate::model::DegradedRecord,
    asked: usize,
    spelling: ParamSpelling,
}

impl OracleAssistant {
    pub fn new(scenario: &Scenario) -> Self {
        OracleAssistant {
            record: scenario.record.clone(),
            asked: 0,
            spelling: ParamSpelling::Arguments,
        }
    }
}

impl Assistant for OracleAssistant {
    fn respond(&mut self, _system: &str, _history: &[ChatMessage]) -> Result<String, String> {
        let removed = self.record.key_info.removed_params();
        if self.asked < removed.len() {
            let p = &removed[self.asked];
            self.asked += 1;
            let question = p.spec.question.clone().unwrap_or_else(|| {
                format!(
                    "Could you please specify the {} for {}?",
                    p.param_name.replace('_', " "),
                    p.api_name
                )
            });
            Ok(format!("{} {}", protocol::QUESTION_MARKER, question))
        } else {
            Ok(format!(
                "{} I have all the information needed. {}",
                protocol::SUMMARY_MARKER,
                protocol::serialize_solution(&self.record.solution, self.spelling)
            ))
        }
    }
}

/// Pathological assistant that repeats one question forever.
pub struct LoopingAssistant;

impl Assistant for LoopingAssistant {
    fn respond(&mut self, _system: &str, _history: &[ChatMessage]) -> Result<String, String> {
        Ok(format!(
            "{} Could you please provide more details about your request?",
            protocol::QUESTION_MARKER
        ))
    }
}

/// Assistant that summarizes immediately, with placeholders for every
/// removed parameter and stated values for the rest.
pub struct ImmediateSummaryAssistant {
    record: crate::model::DegradedRecord,
}

impl ImmediateSummaryAssistant {
    pub fn new(scenario: &Scenario) -> Self {
        ImmediateSummaryAssistant {
            record: scenario.record.clone(),
        }
    }
}

impl Assistant for ImmediateSummaryAssistant {
    fn respond(&mut self, _system: &str, _history: &[ChatMessage]) -> Result<String, String> {
        let calls: Vec<ToolCall> = self
            .record
            .key_info
            .entries
            .iter()
            .map(|entry| ToolCall {
                api_name: entry.api_name.clone(),
                parameters: entry
                    .params
                    .iter()
                    .map(|(name, spec)| crate::model::Parameter {
                        name: name.clone(),
                        value: if spec.removed {
                            format!("<unknown_{}>", name)
                        } else {
                            spec.original.clone()
                        },
                    })
                    .collect(),
            })
            .collect();
        Ok(format!(
            "{} {}",
            protocol::SUMMARY_MARKER,
            protocol::serialize_solution(&SolutionPath::new(calls), ParamSpelling::Arguments)
        ))
    }
}

/// Assistant that declares a summary with unparseable JSON.
pub struct BrokenJsonAssistant;

impl Assistant for BrokenJsonAssistant {
    fn respond(&mut self, _system: &str, _history: &[ChatMessage]) -> Result<String, String> {
        Ok(format!(
            "{} [{{\"task\": \"broken",
            protocol::SUMMARY_MARKER
        ))
    }
}

/// Candidate served behind a chat-completion endpoint.
pub struct HttpAssistant {
    gateway: Gateway,
    model_tag: String,
}

impl HttpAssistant {
    pub fn new(url: &str, api_key_source: &str, model_tag: &str) -> Result<Self, EvalError> {
        let gateway = Gateway::new(GatewayConfig {
            endpoint_url: url.to_string(),
            api_key_source: api_key_source.to_string(),
            mode: GatewayMode::Live,
            model_tag: model_tag.to_string(),
            ..GatewayConfig::default()
        })?;
        Ok(HttpAssistant {
            gateway,
            model_tag: model_tag.to_string(),
        })
    }
}

impl Assistant for HttpAssistant {
    fn respond(&mut self, system: &str, history: &[ChatMessage]) -> Result<String, String> {
        let request = ChatRequest {
            system_prompt: system.to_string(),
            messages: history.to_vec(),
            sampling: Sampling {
                temperature: 0.0,
                max_output_chars: 8192,
            },
            model_tag: self.model_tag.clone(),
        };
        self.gateway.complete(&request).map_err(|e| e.to_string())
    }
}

/// Deterministic scripted policies for harness testing, loadable from a
/// JSON file: `{"policy": "oracle" | "loop" | "immediate_summary" | "broken_json"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ScriptedPolicy {
    Oracle,
    Loop,
    ImmediateSummary,
    BrokenJson,
}

impl ScriptedPolicy {
    pub fn instantiate(self, scenario: &Scenario) -> Box<dyn Assistant> {
        match self {
            ScriptedPolicy::Oracle => Box::new(OracleAssistant::new(scenario)),
            ScriptedPolicy::Loop => Box::new(LoopingAssistant),
            ScriptedPolicy::ImmediateSummary => Box::new(ImmediateSummaryAssistant::new(scenario)),
            ScriptedPolicy::BrokenJson => Box::new(BrokenJsonAssistant),
        }
    }
}
