//! User simulation. Level I is a deterministic rule engine over the
//! three-branch reply policy; Levels II and III answer through the model
//! with the base or persona-filled simulator prompt.

use super::{EvalError, Level, Scenario};
use crate::gateway::{ChatMessage, ChatRequest, Gateway, Role, Sampling};
use crate::prompts;
use crate::protocol::AssistantEvent;

fn answer_template(value: &str) -> String {
    format!("The answer is: {}.", value)
}

fn mentions(question_lower: &str, name: &str) -> bool {
    question_lower.contains(&name.to_lowercase())
        || question_lower.contains(&name.replace('_', " ").to_lowercase())
}

/// Rule-engine reply for Level I: refuse multi-question turns, answer
/// questions that match a removed parameter (stored-question linkage first,
/// then parameter/API name substrings), acknowledge everything else as
/// unknown.
fn rule_reply(scenario: &Scenario, events: &[AssistantEvent]) -> String {
    let questions: Vec<&str> = events
        .iter()
        .filter_map(|e| match &e.kind {
            crate::protocol::AssistantEventKind::Question(q) => Some(q.as_str()),
            _ => None,
        })
        .collect();
    if questions.len() > 1 {
        return prompts::MULTI_QUESTION_TEMPLATE.to_string();
    }
    let Some(question) = questions.first() else {
        return prompts::UNKNOWN_TEMPLATE.to_string();
    };

    let removed = scenario.record.key_info.removed_params();
    // Stored-question linkage: exact match against the generated question,
    // shared questions included.
    for p in &removed {
        if p.spec.question.as_deref() == Some(*question) {
            return answer_template(&p.spec.original);
        }
    }
    let question_lower = question.to_lowercase();
    for p in &removed {
        if mentions(&question_lower, p.param_name) || mentions(&question_lower, p.api_name) {
            return answer_template(&p.spec.original);
        }
    }
    prompts::UNKNOWN_TEMPLATE.to_string()
}

/// Flips session history into the simulator's perspective: the candidate
/// assistant's words arrive as user messages and vice versa. The leading
/// task statement is dropped; the task is already in the system prompt.
fn flipped_history(history: &[ChatMessage]) -> Vec<ChatMessage> {
    history
        .iter()
        .skip(1)
        .map(|m| ChatMessage {
            role: match m.role {
                Role::User => Role::Assistant,
                Role::Assistant => Role::User,
            },
            content: m.content.clone(),
        })
        .collect()
}

/// Produces the user's reply to the assistant's latest turn.
pub fn simulate_user(
    scenario: &Scenario,
    events: &[AssistantEvent],
    history: &[ChatMessage],
    gateway: &Gateway,
    config: &super::EvalConfig,
) -> Result<String, EvalError> {
    match scenario.level {
        Level::I => Ok(rule_reply(scenario, events)),
        Level::II | Level::III => {
            let task = &scenario.record.original_query;
            let system = match &scenario.persona {
                Some(persona) if scenario.level == Level::III => {
                    prompts::user_sim_persona(persona, task, config.normalized_prompts)
                }
                _ => prompts::user_sim_base(task, config.normalized_prompts),
            };
            let request = ChatRequest {
                system_prompt: system,
                messages: flipped_history(history),
                sampling: Sampling {
                    temperature: 0.0,
                    max_output_chars: 2048,
                },
                model_tag: gateway.model_tag().to_string(),
            };
            Ok(gateway.complete(&request)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{EvalConfig, Level, Scenario};
    use crate::model::{ComplexityLevel, DegradedRecord, KeyInfo, SolutionPath, ToolCall};
    use crate::protocol::parse_turn;

    fn scenario() -> Scenario {
        let solution = SolutionPath::new(vec![ToolCall::new(
            "get_news_for_topic",
            vec![("topic", "technology")],
        )]);
        let mut key_info = KeyInfo::from_solution(&solution);
        {
            let spec = key_info.spec_mut(0, "topic").unwrap();
            spec.removed = true;
            spec.current = "the latest news".to_string();
            spec.question = Some(
                "Could you please specify the topic on which you would like to receive the \
                 latest news?"
                    .to_string(),
            );
        }
        Scenario {
            record: DegradedRecord {
                record_id: "news".to_string(),
                original_query: "Fetch the latest technology news".to_string(),
                unspecified_query: "Fetch the latest news".to_string(),
                solution,
                key_info,
                complexity_level: ComplexityLevel::SingleApiSingleParam,
                tool_steps: None,
            },
            level: Level::I,
            api_menu: vec![],
            persona: None,
            round_cap_per_intent: 5,
        }
    }

    fn reply_for(turn: &str) -> String {
        let scenario = scenario();
        let events = parse_turn(turn);
        let gw = Gateway::mock_empty();
        simulate_user(&scenario, &events, &[], &gw, &EvalConfig::default()).unwrap()
    }

    #[test]
    fn multiple_questions_are_refused() {
        let reply = reply_for("[QUESTION] Which topic? [QUESTION] How many articles?");
        assert_eq!(
            reply,
            "I cannot answer multiple questions at once. Please ask one question at a time."
        );
    }

    #[test]
    fn unmatched_question_is_unknown() {
        let reply = reply_for("[QUESTION] What is the resolution of your video call?");
        assert_eq!(
            reply,
            "I do not know the answer. Please feel free to ask me other questions."
        );
    }

    #[test]
    fn matched_question_answers_with_the_original_value() {
        // Stored-question linkage.
        let reply = reply_for(
            "[QUESTION] Could you please specify the topic on which you would like to \
             receive the latest news?",
        );
        assert_eq!(reply, "The answer is: technology.");
        // Parameter-name substring fallback.
        let reply = reply_for("[QUESTION] What topic are you interested in?");
        assert_eq!(reply, "The answer is: technology.");
    }

    #[test]
    fn level_two_routes_through_the_gateway() {
        let mut scenario = scenario();
        scenario.level = Level::II;
        let history = vec![
            ChatMessage {
                role: Role::User,
                content: "The task is: ...".to_string(),
            },
            ChatMessage {
                role: Role::Assistant,
                content: "[QUESTION] Which topic?".to_string(),
            },
        ];
        let request = ChatRequest {
            system_prompt: prompts::user_sim_base("Fetch the latest technology news", false),
            messages: vec![ChatMessage {
                role: Role::User,
                content: "[QUESTION] Which topic?".to_string(),
            }],
            sampling: Sampling {
                temperature: 0.0,
                max_output_chars: 2048,
            },
            model_tag: "mock".to_string(),
        };
        let gw = Gateway::mock(vec![(request, "The answer is: technology.".to_string())]);
        let events = parse_turn("[QUESTION] Which topic?");
        let reply =
            simulate_user(&scenario, &events, &history, &gw, &EvalConfig::default()).unwrap();
        assert_eq!(reply, "The answer is: technology.");
    }
}
