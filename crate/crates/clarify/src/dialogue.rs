//! Dialogue construction: task decomposition, clarification-question
//! generation, and deterministic template assembly.
//!
//! Model calls produce only the content (steps and questions); the dialogue
//! itself is assembled from fixed templates, so two runs over the same
//! record and seed are byte-identical.

use crate::gateway::{ChatMessage, Gateway, GatewayError, Role};
use crate::model::{ApiDoc, DegradedRecord, DialogueRecord, DialogueTurn, KeyInfo, TurnKind};
use crate::prompts;
use crate::protocol;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tone {
    Neutral,
    Friendly,
    Dismissive,
    Irritated,
}

/// User-reply templates for one tone. Every template carries exactly one
/// `[value]` slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToneTemplateSet {
    pub tone: Tone,
    pub templates: Vec<String>,
}

pub const VALUE_SLOT: &str = "[value]";

/// The shipped template bank.
pub fn default_tones() -> Vec<ToneTemplateSet> {
    vec![
        ToneTemplateSet {
            tone: Tone::Neutral,
            templates: vec![
                "[value].".to_string(),
                "The answer is: [value].".to_string(),
                "Ah, the answer is simply [value].".to_string(),
            ],
        },
        ToneTemplateSet {
            tone: Tone::Friendly,
            templates: vec![
                "Sure! The answer is [value]. Let me know if you have more questions!".to_string(),
                "I'm glad to help! The answer is absolutely [value]!".to_string(),
            ],
        },
        ToneTemplateSet {
            tone: Tone::Dismissive,
            templates: vec![
                "Honestly, I don't see why this is a big deal, but the answer is [value]."
                    .to_string(),
                "Okay, the answer is: [value]. Hope that helps, I guess.".to_string(),
                "Listen, the answer is [value]. Just deal with it!".to_string(),
            ],
        },
        ToneTemplateSet {
            tone: Tone::Irritated,
            templates: vec![
                "Ugh, seriously? The answer is [value]. Can we move on already?".to_string(),
                "Whatever. The answer is [value]. Not that it matters.".to_string(),
                "Enough already! The answer is [value]. Can we please get to the point?"
                    .to_string(),
                "Honestly, do you really need me to repeat this? The answer is [value]!"
                    .to_string(),
            ],
        },
    ]
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("record {record_id}: model response unusable after reprompt: {detail}")]
    MalformedModelJson { record_id: String, detail: String },
    #[error("record {record_id}: {got} steps for {expected} calls")]
    StepCountMismatch {
        record_id: String,
        expected: usize,
        got: usize,
    },
    #[error("record {record_id}: no question generated for removed parameter {param}")]
    MissingQuestion { record_id: String, param: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

fn parse_steps(text: &str) -> Result<Vec<String>, String> {
    let value = protocol::first_json_value(text).ok_or("no JSON in response")?;
    let steps = value
        .get("tool_steps")
        .and_then(|v| v.as_array())
        .ok_or("missing tool_steps array")?;
    steps
        .iter()
        .map(|s| {
            s.as_str()
                .map(|s| s.to_string())
                .ok_or_else(|| "tool_steps entry is not a string".to_string())
        })
        .collect()
}

/// Decomposes the task into one step per solution call. The step list is
/// validated against the call sequence: same count, each step naming its
/// call's API.
pub fn decompose_task(
    record: &DegradedRecord,
    api_docs: &[ApiDoc],
    gateway: &Gateway,
) -> Result<Vec<String>, BuildError> {
    let mut request = prompts::decompose_request(record, api_docs, gateway.model_tag());
    let mut response = gateway.complete(&request)?;
    let mut steps = parse_steps(&response);
    if steps.is_err() {
        request.messages.push(ChatMessage {
            role: Role::Assistant,
            content: response,
        });
        request.messages.push(ChatMessage {
            role: Role::User,
            content: "Your previous response was not valid JSON. Return a single JSON object \
                      of the form {\"tool_steps\": [\"Step 1: ...\", ...]}."
                .to_string(),
        });
        response = gateway.complete(&request)?;
        steps = parse_steps(&response);
    }
    let steps = steps.map_err(|detail| BuildError::MalformedModelJson {
        record_id: record.record_id.clone(),
        detail,
    })?;

    if steps.len() != record.solution.calls.len() {
        return Err(BuildError::StepCountMismatch {
            record_id: record.record_id.clone(),
            expected: record.solution.calls.len(),
            got: steps.len(),
        });
    }
    for (step, call) in steps.iter().zip(&record.solution.calls) {
        if !step.contains(&call.api_name) {
            return Err(BuildError::MalformedModelJson {
                record_id: record.record_id.clone(),
                detail: format!("step \"{}\" does not name API {}", step, call.api_name),
            });
        }
    }
    Ok(steps)
}

fn parse_question_response(text: &str) -> Result<serde_json::Value, String> {
    let value = protocol::first_json_value(text).ok_or("no JSON in response")?;
    // Tolerate both bare key_info and an object wrapping it.
    if let Some(inner) = value.get("key_info") {
        Ok(inner.clone())
    } else {
        Ok(value)
    }
}

fn question_from_response(
    response: &serde_json::Value,
    wire_key: &str,
    param_name: &str,
    field: &str,
) -> Option<String> {
    response
        .get(wire_key)?
        .get("parameters")?
        .get(param_name)?
        .get(field)?
        .as_str()
        .map(|s| s.to_string())
}

/// Fills the `question` field for every removed parameter. Merged questions
/// (several targets sharing one missing value) keep one question string on
/// each target, flagged `shared`. Questions the model attached to retained
/// parameters are dropped; the returned list names them.
pub fn generate_questions(
    record: &DegradedRecord,
    gateway: &Gateway,
) -> Result<(KeyInfo, Vec<String>), BuildError> {
    let mut key_info = record.key_info.clone();
    let removed: Vec<(usize, String)> = key_info
        .params()
        .filter(|p| p.spec.removed)
        .map(|p| (p.call_index, p.param_name.to_string()))
        .collect();
    if removed.is_empty() {
        return Ok((key_info, Vec::new()));
    }

    let mut request = prompts::question_request(record, gateway.model_tag());
    let mut response_text = gateway.complete(&request)?;
    let mut parsed = parse_question_response(&response_text);
    if parsed.is_err() {
        request.messages.push(ChatMessage {
            role: Role::Assistant,
            content: response_text,
        });
        request.messages.push(ChatMessage {
            role: Role::User,
            content: "Your previous response was not valid JSON. Output only the modified \
                      `key_info` in JSON format."
                .to_string(),
        });
        response_text = gateway.complete(&request)?;
        parsed = parse_question_response(&response_text);
    }
    let response = parsed.map_err(|detail| BuildError::MalformedModelJson {
        record_id: record.record_id.clone(),
        detail,
    })?;

    let mut dropped = Vec::new();
    for (idx, entry) in key_info.entries.iter().enumerate() {
        let wire = key_info.wire_key(idx);
        for (name, spec) in &entry.params {
            if !spec.removed && question_from_response(&response, &wire, name, "question").is_some()
            {
                dropped.push(format!("{}.{}", wire, name));
            }
        }
    }

    for (call_index, param_name) in &removed {
        let wire = key_info.wire_key(*call_index);
        if let Some(q) = question_from_response(&response, &wire, param_name, "question") {
            if !q.is_empty() {
                key_info.spec_mut(*call_index, param_name).unwrap().question = Some(q);
            }
        }
    }

    // Merge rule: a target without its own question inherits the question
    // of another target that shares the same missing value.
    let missing: Vec<(usize, String)> = removed
        .iter()
        .filter(|(ci, name)| key_info.spec(*ci, name).unwrap().question.is_none())
        .cloned()
        .collect();
    for (ci, name) in missing {
        let original = key_info.spec(ci, &name).unwrap().original.clone();
        let donor = key_info
            .params()
            .filter(|p| p.spec.removed && p.spec.original == original)
            .find_map(|p| p.spec.question.clone());
        if let Some(q) = donor {
            key_info.spec_mut(ci, &name).unwrap().question = Some(q);
        }
    }

    // Flag questions shared by several targets.
    let mut by_question: std::collections::HashMap<String, usize> =
        std::collections::HashMap::new();
    for p in key_info.params() {
        if let Some(q) = &p.spec.question {
            *by_question.entry(q.clone()).or_insert(0) += 1;
        }
    }
    for entry in &mut key_info.entries {
        for (_, spec) in &mut entry.params {
            if let Some(q) = &spec.question {
                spec.shared = by_question.get(q).copied().unwrap_or(0) > 1;
            }
        }
    }

    for (ci, name) in &removed {
        if key_info.spec(*ci, name).unwrap().question.is_none() {
            return Err(BuildError::MissingQuestion {
                record_id: record.record_id.clone(),
                param: format!("{}.{}", key_info.wire_key(*ci), name),
            });
        }
    }

    Ok((key_info, dropped))
}

/// Renders one user reply: uniform template draw, `[value]` substituted.
pub fn render_user_reply(value: &str, tone_set: &ToneTemplateSet, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = &tone_set.templates[rng.random_range(0..tone_set.templates.len())];
    template.replace(VALUE_SLOT, value)
}

fn python_style_list(names: &[String]) -> String {
    let quoted: Vec<String> = names.iter().map(|n| format!("'{}'", n)).collect();
    format!("[{}]", quoted.join(", "))
}

/// Template text for the user task statement, shared with the harness.
pub fn task_statement(query: &str, api_names: &[String]) -> String {
    format!(
        "The task is: {} Some relevant APIs: {}",
        query,
        python_style_list(api_names)
    )
}

fn unique_api_names(record: &DegradedRecord) -> Vec<String> {
    let mut names = Vec::new();
    for call in &record.solution.calls {
        if !names.contains(&call.api_name) {
            names.push(call.api_name.clone());
        }
    }
    names
}

pub fn decomposition_text(steps: &[String]) -> String {
    format!(
        "{} The task can be simplified into {} steps for solving. {}",
        protocol::DECOMPOSITION_MARKER,
        steps.len(),
        steps.join(" ")
    )
}

pub fn param_evaluation_sentence(param: &str, api: &str, removed: bool, value: &str) -> String {
    if removed {
        format!(
            "Parameter \"{}\" for API \"{}\" lacks a clear value.",
            param, api
        )
    } else {
        format!(
            "Parameter \"{}\" for API \"{}\" has a value of \"{}\".",
            param, api, value
        )
    }
}

pub fn confirmation_text(param: &str, api: &str, value: &str) -> String {
    format!(
        "{} Now I know that the parameter \"{}\" for the API \"{}\" has a value of \"{}\".",
        protocol::PARAM_EVALUATION_MARKER,
        param,
        api,
        value
    )
}

pub fn summary_text(solution: &crate::model::SolutionPath) -> String {
    format!(
        "{} I have all the information needed and can now call the relevant APIs to solve \
         the task. The solution path is as follows: {}",
        protocol::SUMMARY_MARKER,
        solution.to_compact_json()
    )
}

/// Assembles the complete dialogue from templates. The tone is drawn once
/// per dialogue; clarification turns follow parameter position order, with
/// merged questions asked once and confirmed per target.
pub fn assemble_dialogue(
    record: &DegradedRecord,
    tones: &[ToneTemplateSet],
    seed: u64,
) -> DialogueRecord {
    assert!(!tones.is_empty(), "tone bank must not be empty");
    let steps = record
        .tool_steps
        .clone()
        .expect("tool_steps must be present before assembly");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tone_set = &tones[rng.random_range(0..tones.len())];

    let mut turns = Vec::new();
    turns.push(DialogueTurn::user(
        TurnKind::TaskStatement,
        task_statement(&record.unspecified_query, &unique_api_names(record)),
    ));
    turns.push(DialogueTurn::assistant(
        TurnKind::Decomposition,
        decomposition_text(&steps),
    ));

    let mut eval_sentences = vec!["The information I currently have is:".to_string()];
    for p in record.key_info.params_by_position() {
        eval_sentences.push(param_evaluation_sentence(
            p.param_name,
            p.api_name,
            p.spec.removed,
            &p.spec.original,
        ));
    }
    turns.push(DialogueTurn::assistant(
        TurnKind::ParamEvaluation,
        format!(
            "{} {}",
            protocol::PARAM_EVALUATION_MARKER,
            eval_sentences.join(" ")
        ),
    ));

    // Clarification rounds. A question asked for several merged targets is
    // asked and answered once, then each target is confirmed.
    let removed = record.key_info.removed_params();
    let mut asked: Vec<String> = Vec::new();
    for p in &removed {
        let question = p
            .spec
            .question
            .clone()
            .expect("removed parameters carry questions before assembly");
        if asked.contains(&question) {
            continue;
        }
        asked.push(question.clone());
        turns.push(DialogueTurn::assistant(
            TurnKind::Question,
            format!("{} {}", protocol::QUESTION_MARKER, question),
        ));
        let reply_seed = rng.random::<u64>();
        turns.push(DialogueTurn::user(
            TurnKind::UserReply,
            render_user_reply(&p.spec.original, tone_set, reply_seed),
        ));
        // Confirm every target resolved by this question, in position order.
        for target in &removed {
            if target.spec.question.as_deref() == Some(question.as_str()) {
                turns.push(DialogueTurn::assistant(
                    TurnKind::Confirmation,
                    confirmation_text(target.param_name, target.api_name, &target.spec.original),
                ));
            }
        }
    }

    turns.push(DialogueTurn::assistant(
        TurnKind::Summary,
        summary_text(&record.solution),
    ));

    DialogueRecord {
        record_id: record.record_id.clone(),
        source: record.clone(),
        turns,
        injection: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComplexityLevel, SolutionPath, ToolCall};

    fn news_record(removed: bool) -> DegradedRecord {
        let solution = SolutionPath::new(vec![ToolCall::new(
            "get_news_for_topic",
            vec![("topic", "technology")],
        )]);
        let mut key_info = KeyInfo::from_solution(&solution);
        if removed {
            let spec = key_info.spec_mut(0, "topic").unwrap();
            spec.removed = true;
            spec.current = "the latest news".to_string();
            spec.question = Some(
                "Could you please specify the topic on which you would like to receive the \
                 latest news?"
                    .to_string(),
            );
        }
        DegradedRecord {
            record_id: "news".to_string(),
            original_query: "Can you fetch the latest technology news for me?".to_string(),
            unspecified_query: if removed {
                "I've been out of the loop lately and want to catch up. Can you fetch the \
                 latest news for me?"
                    .to_string()
            } else {
                "Can you fetch the latest technology news for me?".to_string()
            },
            solution,
            key_info,
            complexity_level: if removed {
                ComplexityLevel::SingleApiSingleParam
            } else {
                ComplexityLevel::FullySpecified
            },
            tool_steps: Some(vec![
                "Step 1: Fetch the latest news using get_news_for_topic.".to_string(),
            ]),
        }
    }

    #[test]
    fn decompose_single_call_forces_one_step() {
        let record = news_record(true);
        let request = prompts::decompose_request(&record, &[], "mock");
        let response =
            serde_json::json!({"tool_steps": ["Step 1: Fetch the latest news using get_news_for_topic."]})
                .to_string();
        let gw = Gateway::mock(vec![(request, response)]);
        let steps = decompose_task(&record, &[], &gw).unwrap();
        assert_eq!(steps.len(), 1);
        assert!(steps[0].contains("get_news_for_topic"));
    }

    #[test]
    fn step_count_mismatch_detected() {
        let mut record = news_record(true);
        record
            .solution
            .calls
            .push(ToolCall::new("take_note", vec![("content", "x")]));
        record.key_info = KeyInfo::from_solution(&record.solution);
        let request = prompts::decompose_request(&record, &[], "mock");
        let response =
            serde_json::json!({"tool_steps": ["Step 1: Fetch news using get_news_for_topic."]})
                .to_string();
        let gw = Gateway::mock(vec![(request, response)]);
        match decompose_task(&record, &[], &gw) {
            Err(BuildError::StepCountMismatch {
                expected: 2,
                got: 1,
                ..
            }) => {}
            other => panic!("expected StepCountMismatch, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn questions_noop_without_removed_params() {
        let record = news_record(false);
        // The empty mock would return a canary for any request; a no-op
        // must not issue one.
        let gw = Gateway::mock_empty();
        let (ki, dropped) = generate_questions(&record, &gw).unwrap();
        assert_eq!(ki, record.key_info);
        assert!(dropped.is_empty());
    }

    #[test]
    fn questions_fill_removed_params_and_drop_spurious_ones() {
        let solution = SolutionPath::new(vec![ToolCall::new(
            "get_news_for_topic",
            vec![("topic", "technology"), ("count", "5")],
        )]);
        let mut key_info = KeyInfo::from_solution(&solution);
        {
            let spec = key_info.spec_mut(0, "topic").unwrap();
            spec.removed = true;
            spec.current = "the latest news".to_string();
        }
        let record = DegradedRecord {
            record_id: "news".to_string(),
            original_query: "Fetch the latest 5 technology news".to_string(),
            unspecified_query: "Fetch the latest 5 news".to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::SingleApiSingleParam,
            tool_steps: None,
        };
        let request = prompts::question_request(&record, "mock");
        let response = serde_json::json!({
            "get_news_for_topic": {"parameters": {
                "topic": {"removed": true, "original": "technology",
                          "current": "the latest news",
                          "question": "Could you please specify the topic?"},
                "count": {"removed": false, "original": "5", "current": "5",
                          "question": "How many articles?"}
            }}
        })
        .to_string();
        let gw = Gateway::mock(vec![(request, response)]);
        let (ki, dropped) = generate_questions(&record, &gw).unwrap();
        assert_eq!(
            ki.spec(0, "topic").unwrap().question.as_deref(),
            Some("Could you please specify the topic?")
        );
        assert!(ki.spec(0, "count").unwrap().question.is_none());
        assert_eq!(dropped, vec!["get_news_for_topic.count".to_string()]);
    }

    #[test]
    fn shared_value_targets_inherit_the_merged_question() {
        let solution = SolutionPath::new(vec![
            ToolCall::new("search_flights", vec![("city", "Paris")]),
            ToolCall::new("book_hotel", vec![("city", "Paris")]),
        ]);
        let mut key_info = KeyInfo::from_solution(&solution);
        for idx in 0..2 {
            let spec = key_info.spec_mut(idx, "city").unwrap();
            spec.removed = true;
            spec.current = "a destination".to_string();
        }
        let record = DegradedRecord {
            record_id: "trip".to_string(),
            original_query: "Plan a trip to Paris".to_string(),
            unspecified_query: "Plan a trip to a destination".to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::MultiApiMultiParam,
            tool_steps: None,
        };
        let request = prompts::question_request(&record, "mock");
        // The model answers with a single combined question on one target.
        let response = serde_json::json!({
            "search_flights": {"parameters": {"city": {
                "removed": true, "original": "Paris", "current": "a destination",
                "question": "Which city are you traveling to?"
            }}},
            "book_hotel": {"parameters": {"city": {
                "removed": true, "original": "Paris", "current": "a destination"
            }}}
        })
        .to_string();
        let gw = Gateway::mock(vec![(request, response)]);
        let (ki, _) = generate_questions(&record, &gw).unwrap();
        let q0 = ki.spec(0, "city").unwrap();
        let q1 = ki.spec(1, "city").unwrap();
        assert_eq!(q0.question, q1.question);
        assert!(q0.shared && q1.shared);
    }

    #[test]
    fn render_reply_contains_value() {
        let tones = default_tones();
        for tone_set in &tones {
            for seed in 0..16 {
                let reply = render_user_reply("technology", tone_set, seed);
                assert!(reply.contains("technology"), "{reply}");
            }
        }
    }

    #[test]
    fn render_reply_neutral_second_template() {
        let tones = default_tones();
        let neutral = tones.iter().find(|t| t.tone == Tone::Neutral).unwrap();
        // Find a seed that draws template index 1 and check the exact
        // rendered surface form.
        let seed = (0..64)
            .find(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                rng.random_range(0..neutral.templates.len()) == 1
            })
            .unwrap();
        assert_eq!(
            render_user_reply("technology", neutral, seed),
            "The answer is: technology."
        );
    }

    #[test]
    fn render_reply_uniform_over_templates() {
        let tones = default_tones();
        let irritated = tones.iter().find(|t| t.tone == Tone::Irritated).unwrap();
        assert_eq!(irritated.templates.len(), 4);
        let mut counts = [0usize; 4];
        let n = 8_000u64;
        for seed in 0..n {
            let reply = render_user_reply("x", irritated, seed);
            let idx = irritated
                .templates
                .iter()
                .position(|t| t.replace(VALUE_SLOT, "x") == reply)
                .unwrap();
            counts[idx] += 1;
        }
        for c in counts {
            let share = c as f64 / n as f64;
            assert!((share - 0.25).abs() < 0.02, "share {share}");
        }
    }

    #[test]
    fn fully_specified_assembly_has_no_clarification_turns() {
        let record = news_record(false);
        let dialogue = assemble_dialogue(&record, &default_tones(), 5);
        let kinds: Vec<TurnKind> = dialogue.turns.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TurnKind::TaskStatement,
                TurnKind::Decomposition,
                TurnKind::ParamEvaluation,
                TurnKind::Summary
            ]
        );
    }

    #[test]
    fn assembly_orders_and_confirms_each_removed_param() {
        let record = news_record(true);
        let dialogue = assemble_dialogue(&record, &default_tones(), 5);
        let kinds: Vec<TurnKind> = dialogue.turns.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TurnKind::TaskStatement,
                TurnKind::Decomposition,
                TurnKind::ParamEvaluation,
                TurnKind::Question,
                TurnKind::UserReply,
                TurnKind::Confirmation,
                TurnKind::Summary
            ]
        );
        let reply = &dialogue.turns[4].text;
        assert!(reply.contains("technology"));
        assert!(crate::model::validate_record(&dialogue).is_empty());
    }

    #[test]
    fn clarification_turns_follow_increasing_position_order() {
        let solution = SolutionPath::new(vec![
            ToolCall::new("alpha", vec![("a1", "v1"), ("a2", "v2")]),
            ToolCall::new("beta", vec![("b1", "v3")]),
        ]);
        let mut key_info = KeyInfo::from_solution(&solution);
        for (idx, name) in [(0usize, "a1"), (0, "a2"), (1, "b1")] {
            let spec = key_info.spec_mut(idx, name).unwrap();
            spec.removed = true;
            spec.current = String::new();
            spec.question = Some(format!("Which {name}?"));
        }
        let record = DegradedRecord {
            record_id: "ordered".to_string(),
            original_query: "use v1 v2 v3".to_string(),
            unspecified_query: "use things".to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::MultiApiMultiParam,
            tool_steps: Some(vec![
                "Step 1: First part using alpha.".to_string(),
                "Step 2: Second part using beta.".to_string(),
            ]),
        };
        let dialogue = assemble_dialogue(&record, &default_tones(), 11);
        let questions: Vec<&str> = dialogue
            .turns
            .iter()
            .filter(|t| t.kind == TurnKind::Question)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(
            questions,
            vec![
                "[QUESTION] Which a1?",
                "[QUESTION] Which a2?",
                "[QUESTION] Which b1?"
            ]
        );
        // Each question is confirmed before the next question turn.
        let kinds: Vec<TurnKind> = dialogue.turns.iter().map(|t| t.kind).collect();
        let expected = vec![
            TurnKind::TaskStatement,
            TurnKind::Decomposition,
            TurnKind::ParamEvaluation,
            TurnKind::Question,
            TurnKind::UserReply,
            TurnKind::Confirmation,
            TurnKind::Question,
            TurnKind::UserReply,
            TurnKind::Confirmation,
            TurnKind::Question,
            TurnKind::UserReply,
            TurnKind::Confirmation,
            TurnKind::Summary,
        ];
        assert_eq!(kinds, expected);
    }

    #[test]
    fn assembly_is_deterministic_per_seed() {
        let record = news_record(true);
        let a = assemble_dialogue(&record, &default_tones(), 99);
        let b = assemble_dialogue(&record, &default_tones(), 99);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn summary_solution_matches_source_exactly() {
        let record = news_record(true);
        let dialogue = assemble_dialogue(&record, &default_tones(), 3);
        let last = dialogue.turns.last().unwrap();
        let parsed = protocol::extract_solution(&last.text).unwrap();
        assert_eq!(parsed, record.solution);
    }

    #[test]
    fn merged_question_asked_once_confirmed_twice() {
        let solution = SolutionPath::new(vec![
            ToolCall::new("search_flights", vec![("city", "Paris")]),
            ToolCall::new("book_hotel", vec![("city", "Paris")]),
        ]);
        let mut key_info = KeyInfo::from_solution(&solution);
        for idx in 0..2 {
            let spec = key_info.spec_mut(idx, "city").unwrap();
            spec.removed = true;
            spec.current = "a destination".to_string();
            spec.question = Some("Which city are you traveling to?".to_string());
            spec.shared = true;
        }
        let record = DegradedRecord {
            record_id: "trip".to_string(),
            original_query: "Plan a trip to Paris".to_string(),
            unspecified_query: "Plan a trip to a destination".to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::MultiApiMultiParam,
            tool_steps: Some(vec![
                "Step 1: Find flights using search_flights.".to_string(),
                "Step 2: Book a room using book_hotel.".to_string(),
            ]),
        };
        let dialogue = assemble_dialogue(&record, &default_tones(), 1);
        let questions = dialogue
            .turns
            .iter()
            .filter(|t| t.kind == TurnKind::Question)
            .count();
        let confirmations = dialogue
            .turns
            .iter()
            .filter(|t| t.kind == TurnKind::Confirmation)
            .count();
        assert_eq!(questions, 1);
        assert_eq!(confirmations, 2);
        assert!(crate::model::validate_record(&dialogue).is_empty());
    }
}
