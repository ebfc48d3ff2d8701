//! Error-correction augmentation: picks an error type and position, builds
//! the error (model-generated for semantic types, rule-based for
//! structural ones), renders the templated correction, and splices the
//! pair into the dialogue between `<SOE>`/`<EOE>` markers.
//!
//! One injection per dialogue. The final summary is never modified, so an
//! augmented dialogue keeps its ground truth.

use crate::gateway::{ChatMessage, Gateway, GatewayError, Role};
use crate::mask::{EOE, SOE};
use crate::model::{
    DialogueRecord, DialogueTurn, ErrorInjection, ErrorType, KeyInfo, Parameter, SolutionPath,
    Speaker, ToolCall, TurnKind,
};
use crate::prompts;
use crate::protocol;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPolicy {
    /// Weights for clearly-stated, imprecise, irrelevant, redundant and
    /// incomplete, in that order.
    pub type_weights: [f64; 5],
    /// Share of dialogues that receive an injection.
    pub augment_fraction: f64,
}

impl Default for InjectionPolicy {
    fn default() -> Self {
        // Reference distribution of the five error types in the augmented
        // corpus: 250 : 288 : 284 : 243 : 500.
        InjectionPolicy {
            type_weights: [250.0, 288.0, 284.0, 243.0, 500.0],
            augment_fraction: 0.5,
        }
    }
}

impl InjectionPolicy {
    pub fn normalized_weights(&self) -> [f64; 5] {
        let sum: f64 = self.type_weights.iter().sum();
        assert!(
            sum > 0.0 && self.type_weights.iter().all(|w| *w >= 0.0),
            "type weights must be non-negative with a positive sum"
        );
        let mut out = self.type_weights;
        for w in &mut out {
            *w /= sum;
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum InjectError {
    #[error("injection infeasible for this dialogue: {0}")]
    Infeasible(String),
    #[error("record {record_id}: model response unusable after reprompt: {detail}")]
    MalformedModelJson { record_id: String, detail: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// User refusals to erroneous questions, cycled by seed.
pub const REFUSAL_BANK: [&str; 2] = [
    "I really wish I could help with that, but unfortunately, I don't have the information \
     you're looking for. Please feel free to inquire about something else.",
    "Unfortunately, I don't have that information right now. What else can I help you with?",
];

pub const CORRECTION_PREFIX: &str = "Sorry, I made a mistake.";

/// A drawn error type and target position, before text generation. For
/// incomplete clarification the position is the cutoff `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectionPlan {
    pub error_type: ErrorType,
    pub position: usize,
}

struct ParamInfo {
    call_index: usize,
    api_name: String,
    param_name: String,
    original: String,
    removed: bool,
    question: Option<String>,
    position: usize,
}

fn params_of(key_info: &KeyInfo) -> Vec<ParamInfo> {
    let mut out: Vec<ParamInfo> = key_info
        .params()
        .map(|p| ParamInfo {
            call_index: p.call_index,
            api_name: p.api_name.to_string(),
            param_name: p.param_name.to_string(),
            original: p.spec.original.clone(),
            removed: p.spec.removed,
            question: p.spec.question.clone(),
            position: p.spec.position,
        })
        .collect();
    out.sort_by_key(|p| p.position);
    out
}

fn redundant_targets(params: &[ParamInfo]) -> Vec<usize> {
    let first_removed_with_question = params
        .iter()
        .filter(|p| p.removed && p.question.is_some())
        .map(|p| p.position)
        .min();
    match first_removed_with_question {
        None => Vec::new(),
        Some(min_pos) => params
            .iter()
            .enumerate()
            .filter(|(_, p)| p.position > 1 && p.position > min_pos)
            .map(|(i, _)| i)
            .collect(),
    }
}

fn feasible_types(dialogue: &DialogueRecord) -> Vec<ErrorType> {
    let params = params_of(&dialogue.source.key_info);
    let mut out = Vec::new();
    if params.iter().any(|p| !p.removed) {
        out.push(ErrorType::ClearlyStated);
    }
    let has_question_target = params.iter().any(|p| p.removed && p.question.is_some());
    if has_question_target {
        out.push(ErrorType::Imprecise);
        out.push(ErrorType::Irrelevant);
    }
    if !redundant_targets(&params).is_empty() {
        out.push(ErrorType::Redundant);
    }
    if !params.is_empty() {
        out.push(ErrorType::Incomplete);
    }
    out
}

fn weighted_type_draw(rng: &mut ChaCha8Rng, weights: &[(ErrorType, f64)]) -> ErrorType {
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (t, w) in weights {
        acc += w;
        if u < acc {
            return *t;
        }
    }
    // Float-edge fallback: last entry carrying any weight.
    weights
        .iter()
        .rev()
        .find(|(_, w)| *w > 0.0)
        .expect("some weight is positive")
        .0
}

/// Decides whether and how to augment one dialogue: draws the error type
/// from the policy weights (redrawing among feasible types when the first
/// draw is infeasible here) and a feasible target position.
pub fn plan_injection(
    dialogue: &DialogueRecord,
    policy: &InjectionPolicy,
    seed: u64,
) -> Option<InjectionPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.random::<f64>() >= policy.augment_fraction {
        return None;
    }
    let feasible = feasible_types(dialogue);
    if feasible.is_empty() {
        return None;
    }
    let weights = policy.normalized_weights();
    let drawn = weighted_type_draw(
        &mut rng,
        &ErrorType::ALL
            .iter()
            .zip(weights)
            .map(|(t, w)| (*t, w))
            .collect::<Vec<_>>(),
    );
    let error_type = if feasible.contains(&drawn) {
        drawn
    } else {
        // Redraw among feasible types, renormalized; a type the policy
        // weights at zero stays unselectable.
        let restricted: Vec<(ErrorType, f64)> = ErrorType::ALL
            .iter()
            .zip(weights)
            .filter(|(t, w)| feasible.contains(t) && *w > 0.0)
            .map(|(t, w)| (*t, w))
            .collect();
        if restricted.is_empty() {
            return None;
        }
        weighted_type_draw(&mut rng, &restricted)
    };

    let params = params_of(&dialogue.source.key_info);
    let position = match error_type {
        ErrorType::ClearlyStated => {
            let specified: Vec<&ParamInfo> = params.iter().filter(|p| !p.removed).collect();
            specified[rng.random_range(0..specified.len())].position
        }
        ErrorType::Imprecise | ErrorType::Irrelevant => {
            let removed: Vec<&ParamInfo> = params
                .iter()
                .filter(|p| p.removed && p.question.is_some())
                .collect();
            removed[rng.random_range(0..removed.len())].position
        }
        ErrorType::Redundant => {
            let targets = redundant_targets(&params);
            params[targets[rng.random_range(0..targets.len())]].position
        }
        ErrorType::Incomplete => rng.random_range(0..params.len()),
    };
    Some(InjectionPlan {
        error_type,
        position,
    })
}

fn question_field_from(
    response: &serde_json::Value,
    key_info: &KeyInfo,
    call_index: usize,
    param_name: &str,
    field: &str,
) -> Option<String> {
    response
        .get(key_info.wire_key(call_index))?
        .get("parameters")?
        .get(param_name)?
        .get(field)?
        .as_str()
        .map(|s| s.to_string())
}

/// Generates the erroneous question for one of the three semantic error
/// types via the model, targeting the parameter at `pos`.
pub fn generate_semantic_error(
    dialogue: &DialogueRecord,
    error_type: ErrorType,
    pos: usize,
    gateway: &Gateway,
) -> Result<String, InjectError> {
    let record = &dialogue.source;
    let params = params_of(&record.key_info);
    let target = params
        .iter()
        .find(|p| p.position == pos)
        .ok_or_else(|| InjectError::Infeasible(format!("no parameter at position {pos}")))?;

    let (system, field, prompt_key_info, ordinal) = match error_type {
        ErrorType::ClearlyStated => {
            // The target's value is stated in the query; the prompt treats
            // it as missing, so the view sent out flips its removed flag.
            let mut view = record.key_info.clone();
            view.spec_mut(target.call_index, &target.param_name)
                .expect("target exists")
                .removed = true;
            let ordinal = params
                .iter()
                .filter(|p| (p.removed || p.position == pos) && p.position <= pos)
                .count();
            (
                prompts::ERROR_CLEARLY_STATED_SYSTEM,
                "question",
                view,
                ordinal,
            )
        }
        ErrorType::Imprecise => {
            let ordinal = params
                .iter()
                .filter(|p| p.removed && p.position <= pos)
                .count();
            (
                prompts::ERROR_IMPRECISE_SYSTEM,
                "imprecise_question",
                record.key_info.clone(),
                ordinal,
            )
        }
        ErrorType::Irrelevant => (
            prompts::ERROR_IRRELEVANT_SYSTEM,
            "irrelevant_question",
            record.key_info.clone(),
            pos,
        ),
        other => {
            return Err(InjectError::Infeasible(format!(
                "{other:?} is rule-based, not model-generated"
            )))
        }
    };

    let mut request = prompts::semantic_error_request(
        system,
        record,
        &prompt_key_info,
        &prompts::ordinal(ordinal),
        gateway.model_tag(),
    );
    let mut response_text = gateway.complete(&request)?;
    let mut question = protocol::first_json_value(&response_text).and_then(|v| {
        let ki = v.get("key_info").unwrap_or(&v);
        question_field_from(
            ki,
            &record.key_info,
            target.call_index,
            &target.param_name,
            field,
        )
    });
    if question.is_none() {
        request.messages.push(ChatMessage {
            role: Role::Assistant,
            content: response_text,
        });
        request.messages.push(ChatMessage {
            role: Role::User,
            content: format!(
                "Your previous response was not usable. Output only the modified `key_info` \
                 in JSON format with the `{field}` field filled for the selected parameter."
            ),
        });
        response_text = gateway.complete(&request)?;
        question = protocol::first_json_value(&response_text).and_then(|v| {
            let ki = v.get("key_info").unwrap_or(&v);
            question_field_from(
                ki,
                &record.key_info,
                target.call_index,
                &target.param_name,
                field,
            )
        });
    }
    question.ok_or_else(|| InjectError::MalformedModelJson {
        record_id: record.record_id.clone(),
        detail: format!("no {field} for position {pos} in response"),
    })
}

/// Rule-based redundant clarification: re-asks, verbatim, the question of
/// an already-clarified earlier parameter. Returns the question plus the
/// (target position, predecessor position) pair.
pub fn generate_redundant_error(
    dialogue: &DialogueRecord,
    seed: u64,
) -> Result<(String, usize, usize), InjectError> {
    let params = params_of(&dialogue.source.key_info);
    let targets = redundant_targets(&params);
    if targets.is_empty() {
        return Err(InjectError::Infeasible(
            "no parameter with position > 1 follows a removed parameter".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = &params[targets[rng.random_range(0..targets.len())]];
    let predecessors: Vec<&ParamInfo> = params
        .iter()
        .filter(|p| p.removed && p.question.is_some() && p.position < target.position)
        .collect();
    let prev = predecessors[rng.random_range(0..predecessors.len())];
    Ok((
        prev.question.clone().expect("filtered on question"),
        target.position,
        prev.position,
    ))
}

fn placeholder_value(param_name: &str) -> String {
    format!("<unknown_{}>", param_name)
}

/// Rule-based incomplete clarification: a premature summary in which
/// parameters past a uniformly drawn cutoff `k` carry `<unknown_…>`
/// placeholders. Returns the summary text and `k`.
pub fn generate_incomplete_error(dialogue: &DialogueRecord, seed: u64) -> (String, usize) {
    let record = &dialogue.source;
    let params = params_of(&record.key_info);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(0..params.len());

    let calls: Vec<ToolCall> = record
        .key_info
        .entries
        .iter()
        .map(|entry| ToolCall {
            api_name: entry.api_name.clone(),
            parameters: entry
                .params
                .iter()
                .map(|(name, spec)| Parameter {
                    name: name.clone(),
                    value: if spec.position <= k {
                        spec.original.clone()
                    } else {
                        placeholder_value(name)
                    },
                })
                .collect(),
        })
        .collect();
    let premature = SolutionPath::new(calls);
    (crate::dialogue::summary_text(&premature), k)
}

/// Renders the templated correction for an error at (param, api, value).
pub fn render_correction(error_type: ErrorType, param: &str, api: &str, value: &str) -> String {
    match error_type {
        ErrorType::ClearlyStated => format!(
            "{CORRECTION_PREFIX} The parameter \"{param}\" for the API \"{api}\" has a value \
             of \"{value}\", which was clearly stated in the user's task, so I don't need to \
             ask about it."
        ),
        ErrorType::Imprecise => format!(
            "{CORRECTION_PREFIX} My question wasn't clear, so let me rephrase it for better \
             understanding."
        ),
        ErrorType::Irrelevant => format!(
            "{CORRECTION_PREFIX} This question isn't relevant to using the APIs to solve the \
             user's task. Let me ask something more helpful instead."
        ),
        ErrorType::Redundant => format!(
            "{CORRECTION_PREFIX} The parameter \"{param}\" for the API \"{api}\" has a value \
             of \"{value}\", which has already been asked in the past, so there is no need to \
             ask again."
        ),
        ErrorType::Incomplete => format!(
            "{CORRECTION_PREFIX} I still lack some key information, so I need to ask further \
             questions."
        ),
    }
}

fn find_question_turn(dialogue: &DialogueRecord, question: &str) -> Option<usize> {
    let wanted = format!("{} {}", protocol::QUESTION_MARKER, question);
    dialogue
        .turns
        .iter()
        .position(|t| t.kind == TurnKind::Question && t.text == wanted)
}

/// Index of the turn before which an error at `after_pos` belongs: the
/// question turn of the first removed parameter at a later position, or
/// the final summary when clarification is already over.
fn insertion_index(dialogue: &DialogueRecord, after_pos: usize) -> usize {
    let key_info = &dialogue.source.key_info;
    for p in key_info.removed_params() {
        if p.spec.position > after_pos {
            if let Some(q) = &p.spec.question {
                if let Some(idx) = find_question_turn(dialogue, q) {
                    return idx;
                }
            }
        }
    }
    dialogue
        .turns
        .iter()
        .rposition(|t| t.kind == TurnKind::Summary && t.speaker == Speaker::Assistant)
        .unwrap_or(dialogue.turns.len())
}

/// Splices one error-correction pair into the dialogue at the location
/// implied by the injection's type and position. The source dialogue is
/// left untouched; callers keep it alongside the returned one.
pub fn inject(dialogue: &DialogueRecord, injection: ErrorInjection, seed: u64) -> DialogueRecord {
    let mut out = dialogue.clone();
    out.record_id = format!("{}-aug", dialogue.record_id);
    let wrapped = format!("{SOE}{}{EOE}", injection.error_text);

    match injection.error_type {
        ErrorType::ClearlyStated | ErrorType::Redundant | ErrorType::Incomplete => {
            let idx = insertion_index(dialogue, injection.position);
            out.turns.insert(
                idx,
                DialogueTurn::assistant(
                    TurnKind::Correction,
                    format!("{} {}", wrapped, injection.correction_text),
                ),
            );
        }
        ErrorType::Imprecise | ErrorType::Irrelevant => {
            let target_question = dialogue
                .source
                .key_info
                .removed_params()
                .iter()
                .find(|p| p.spec.position == injection.position)
                .and_then(|p| p.spec.question.clone())
                .expect("injection position names a removed parameter with a question");
            let idx = find_question_turn(dialogue, &target_question)
                .expect("the question turn exists in the dialogue");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let refusal = REFUSAL_BANK[rng.random_range(0..REFUSAL_BANK.len())];
            out.turns[idx].text = wrapped;
            out.turns
                .insert(idx + 1, DialogueTurn::user(TurnKind::UserReply, refusal));
            out.turns.insert(
                idx + 2,
                DialogueTurn::assistant(
                    TurnKind::Correction,
                    format!(
                        "{} {} {}",
                        injection.correction_text,
                        protocol::QUESTION_MARKER,
                        target_question
                    ),
                ),
            );
        }
    }

    out.injection = Some(injection);
    out
}

/// Runs the full augmentation for one dialogue: plan, generate, correct,
/// inject. Returns the augmented copy, or nothing when the fraction draw
/// skips this dialogue or no error type is feasible.
pub fn augment_dialogue(
    dialogue: &DialogueRecord,
    policy: &InjectionPolicy,
    gateway: &Gateway,
    seed: u64,
) -> Result<Option<DialogueRecord>, InjectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan_seed = rng.random::<u64>();
    let generate_seed = rng.random::<u64>();
    let inject_seed = rng.random::<u64>();

    let Some(plan) = plan_injection(dialogue, policy, plan_seed) else {
        return Ok(None);
    };
    let params = params_of(&dialogue.source.key_info);

    let injection = match plan.error_type {
        ErrorType::ClearlyStated | ErrorType::Imprecise | ErrorType::Irrelevant => {
            let question =
                generate_semantic_error(dialogue, plan.error_type, plan.position, gateway)?;
            let target = params
                .iter()
                .find(|p| p.position == plan.position)
                .expect("plan position exists");
            ErrorInjection {
                error_type: plan.error_type,
                position: plan.position,
                error_text: format!("{} {}", protocol::QUESTION_MARKER, question),
                correction_text: render_correction(
                    plan.error_type,
                    &target.param_name,
                    &target.api_name,
                    &target.original,
                ),
            }
        }
        ErrorType::Redundant => {
            let (question, target_pos, prev_pos) =
                generate_redundant_error(dialogue, generate_seed)?;
            let prev = params
                .iter()
                .find(|p| p.position == prev_pos)
                .expect("predecessor exists");
            ErrorInjection {
                error_type: ErrorType::Redundant,
                position: target_pos,
                error_text: format!("{} {}", protocol::QUESTION_MARKER, question),
                correction_text: render_correction(
                    ErrorType::Redundant,
                    &prev.param_name,
                    &prev.api_name,
                    &prev.original,
                ),
            }
        }
        ErrorType::Incomplete => {
            let (summary, k) = generate_incomplete_error(dialogue, generate_seed);
            ErrorInjection {
                error_type: ErrorType::Incomplete,
                position: k,
                error_text: summary,
                correction_text: render_correction(ErrorType::Incomplete, "", "", ""),
            }
        }
    };

    Ok(Some(inject(dialogue, injection, inject_seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{assemble_dialogue, default_tones};
    use crate::model::{ComplexityLevel, DegradedRecord};

    fn mouse_record() -> DegradedRecord {
        let solution = SolutionPath::new(vec![ToolCall::new(
            "online_shopping",
            vec![("website", "HomeComforts"), ("product", "wireless mouse")],
        )]);
        let mut key_info = KeyInfo::from_solution(&solution);
        {
            let spec = key_info.spec_mut(0, "website").unwrap();
            spec.removed = true;
            spec.current = "an online marketplace".to_string();
            spec.question = Some(
                "Could you please specify the online marketplace from which you wish to \
                 purchase the wireless mouse?"
                    .to_string(),
            );
        }
        DegradedRecord {
            record_id: "mouse".to_string(),
            original_query:
                "I'm in need of a wireless mouse for my computer. Could you assist me in \
                 purchasing one from HomeComforts?"
                    .to_string(),
            unspecified_query:
                "I'm in need of a wireless mouse for my computer. Could you assist me in \
                 purchasing one from an online marketplace?"
                    .to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::SingleApiSingleParam,
            tool_steps: Some(vec![
                "Step 1: Assist in purchasing a wireless mouse from an online marketplace \
                 using online_shopping API."
                    .to_string(),
            ]),
        }
    }

    fn mouse_dialogue() -> DialogueRecord {
        assemble_dialogue(&mouse_record(), &default_tones(), 17)
    }

    #[test]
    fn redundant_infeasible_with_single_parameter() {
        let solution = SolutionPath::new(vec![ToolCall::new("api", vec![("only", "v")])]);
        let mut key_info = KeyInfo::from_solution(&solution);
        {
            let spec = key_info.spec_mut(0, "only").unwrap();
            spec.removed = true;
            spec.question = Some("What value?".to_string());
            spec.current = String::new();
        }
        let record = DegradedRecord {
            record_id: "single".to_string(),
            original_query: "do a thing with v".to_string(),
            unspecified_query: "do a thing".to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::SingleApiSingleParam,
            tool_steps: Some(vec!["Step 1: Do the thing using api.".to_string()]),
        };
        let dialogue = assemble_dialogue(&record, &default_tones(), 1);
        let feasible = feasible_types(&dialogue);
        assert!(!feasible.contains(&ErrorType::Redundant));
        assert!(!feasible.contains(&ErrorType::ClearlyStated));
        let policy = InjectionPolicy {
            augment_fraction: 1.0,
            ..InjectionPolicy::default()
        };
        for seed in 0..500 {
            if let Some(plan) = plan_injection(&dialogue, &policy, seed) {
                assert_ne!(plan.error_type, ErrorType::Redundant, "seed {seed}");
                assert_ne!(plan.error_type, ErrorType::ClearlyStated, "seed {seed}");
            }
        }
    }

    #[test]
    fn fully_specified_allows_only_clearly_stated_and_incomplete() {
        let solution = SolutionPath::new(vec![ToolCall::new("api", vec![("p", "v")])]);
        let key_info = KeyInfo::from_solution(&solution);
        let record = DegradedRecord {
            record_id: "full".to_string(),
            original_query: "do a thing with v".to_string(),
            unspecified_query: "do a thing with v".to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::FullySpecified,
            tool_steps: Some(vec!["Step 1: Do the thing using api.".to_string()]),
        };
        let dialogue = assemble_dialogue(&record, &default_tones(), 1);
        assert_eq!(
            feasible_types(&dialogue),
            vec![ErrorType::ClearlyStated, ErrorType::Incomplete]
        );
    }

    #[test]
    fn plan_frequencies_follow_default_weights_on_a_rich_dialogue() {
        // A dialogue where all five types are feasible: a specified
        // parameter, removed parameters with questions, a later parameter
        // after a removed one.
        let solution = SolutionPath::new(vec![
            ToolCall::new("a", vec![("p1", "v1"), ("p2", "v2")]),
            ToolCall::new("b", vec![("p3", "v3")]),
        ]);
        let mut key_info = KeyInfo::from_solution(&solution);
        for (idx, name) in [(0usize, "p1"), (1usize, "p3")] {
            let spec = key_info.spec_mut(idx, name).unwrap();
            spec.removed = true;
            spec.current = format!("some {name}");
            spec.question = Some(format!("Which {name}?"));
        }
        let record = crate::model::DegradedRecord {
            record_id: "rich".to_string(),
            original_query: "use v1 v2 v3".to_string(),
            unspecified_query: "use v2".to_string(),
            solution,
            key_info,
            complexity_level: crate::model::ComplexityLevel::MultiApiMultiParam,
            tool_steps: Some(vec![
                "Step 1: First using a.".to_string(),
                "Step 2: Second using b.".to_string(),
            ]),
        };
        let dialogue = assemble_dialogue(&record, &default_tones(), 8);
        assert_eq!(feasible_types(&dialogue).len(), 5);

        let policy = InjectionPolicy {
            augment_fraction: 1.0,
            ..InjectionPolicy::default()
        };
        let weights = policy.normalized_weights();
        let mut counts = [0usize; 5];
        let draws = 10_000u64;
        for seed in 0..draws {
            let plan = plan_injection(&dialogue, &policy, seed).unwrap();
            let idx = ErrorType::ALL
                .iter()
                .position(|t| *t == plan.error_type)
                .unwrap();
            counts[idx] += 1;
        }
        for (idx, count) in counts.iter().enumerate() {
            let share = *count as f64 / draws as f64;
            assert!(
                (share - weights[idx]).abs() < 0.02,
                "type {idx}: {share:.4} vs {:.4}",
                weights[idx]
            );
        }
    }

    #[test]
    fn redundant_unique_pair_uses_prev_question() {
        let dialogue = mouse_dialogue();
        // website (removed, pos 1) is the only predecessor; product (pos 2)
        // the only target.
        let (question, target_pos, prev_pos) = generate_redundant_error(&dialogue, 3).unwrap();
        assert_eq!(target_pos, 2);
        assert_eq!(prev_pos, 1);
        assert_eq!(
            question,
            "Could you please specify the online marketplace from which you wish to purchase \
             the wireless mouse?"
        );
    }

    #[test]
    fn redundant_pairs_drawn_uniformly() {
        // Two feasible (target, prev) pairs: prev is always pos 1, targets
        // are pos 2 and pos 3.
        let solution = SolutionPath::new(vec![
            ToolCall::new("a", vec![("p1", "v1")]),
            ToolCall::new("b", vec![("p2", "v2"), ("p3", "v3")]),
        ]);
        let mut key_info = KeyInfo::from_solution(&solution);
        {
            let spec = key_info.spec_mut(0, "p1").unwrap();
            spec.removed = true;
            spec.current = String::new();
            spec.question = Some("Q1?".to_string());
        }
        let record = DegradedRecord {
            record_id: "pairs".to_string(),
            original_query: "use v1 v2 v3".to_string(),
            unspecified_query: "use v2 v3".to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::SingleApiSingleParam,
            tool_steps: Some(vec![
                "Step 1: First part using a.".to_string(),
                "Step 2: Second part using b.".to_string(),
            ]),
        };
        let dialogue = assemble_dialogue(&record, &default_tones(), 2);
        let mut hits = [0usize; 2];
        let n = 4_000u64;
        for seed in 0..n {
            let (_, target_pos, prev_pos) = generate_redundant_error(&dialogue, seed).unwrap();
            assert_eq!(prev_pos, 1);
            hits[target_pos - 2] += 1;
        }
        for h in hits {
            let share = h as f64 / n as f64;
            assert!((share - 0.5).abs() < 0.03, "share {share}");
        }
    }

    #[test]
    fn incomplete_k_zero_placeholders_everything() {
        let dialogue = mouse_dialogue();
        let seed = (0..64)
            .find(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                rng.random_range(0..2usize) == 0
            })
            .unwrap();
        let (summary, k) = generate_incomplete_error(&dialogue, seed);
        assert_eq!(k, 0);
        assert!(summary.contains("<unknown_website>"));
        assert!(summary.contains("<unknown_product>"));
        assert!(!summary.contains("HomeComforts"));
    }

    #[test]
    fn incomplete_k_max_placeholders_only_last() {
        let dialogue = mouse_dialogue();
        let seed = (0..64)
            .find(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                rng.random_range(0..2usize) == 1
            })
            .unwrap();
        let (summary, k) = generate_incomplete_error(&dialogue, seed);
        assert_eq!(k, 1);
        assert!(summary.contains("HomeComforts"));
        assert!(summary.contains("<unknown_product>"));
        assert!(!summary.contains("<unknown_website>"));
    }

    #[test]
    fn incomplete_housework_record_placeholders_every_field_at_k_zero() {
        let solution = SolutionPath::new(vec![
            ToolCall::new(
                "auto_housework_by_robot",
                vec![("instruction", "doing laundry")],
            ),
            ToolCall::new(
                "software_management",
                vec![
                    ("software", "VirtualMeeting"),
                    ("instruction", "set up properly"),
                ],
            ),
            ToolCall::new(
                "attend_meeting_online",
                vec![("topic", "Smart Home Technology")],
            ),
        ]);
        let mut key_info = KeyInfo::from_solution(&solution);
        for (idx, name) in [(0usize, "instruction"), (1, "software"), (2, "topic")] {
            let spec = key_info.spec_mut(idx, name).unwrap();
            spec.removed = true;
            spec.current = String::new();
            spec.question = Some(format!("Which {name}?"));
        }
        let record = crate::model::DegradedRecord {
            record_id: "housework".to_string(),
            original_query: "conference and chores".to_string(),
            unspecified_query: "conference and chores, details unspecified".to_string(),
            solution,
            key_info,
            complexity_level: crate::model::ComplexityLevel::MultiApiMultiParam,
            tool_steps: Some(vec![
                "Step 1: Handle the housework using auto_housework_by_robot.".to_string(),
                "Step 2: Set up the software using software_management.".to_string(),
                "Step 3: Attend the conference using attend_meeting_online.".to_string(),
            ]),
        };
        let dialogue = assemble_dialogue(&record, &default_tones(), 6);
        let seed = (0..64)
            .find(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                rng.random_range(0..4usize) == 0
            })
            .unwrap();
        let (summary, k) = generate_incomplete_error(&dialogue, seed);
        assert_eq!(k, 0);
        for placeholder in [
            "<unknown_instruction>",
            "<unknown_software>",
            "<unknown_topic>",
        ] {
            assert!(summary.contains(placeholder), "missing {placeholder}");
        }
        assert!(!summary.contains("doing laundry"));
        assert!(!summary.contains("VirtualMeeting"));
    }

    #[test]
    fn corrections_match_their_templates() {
        let c = render_correction(
            ErrorType::ClearlyStated,
            "query",
            "search_by_engine",
            "nearest passport application center in my location",
        );
        assert_eq!(
            c,
            "Sorry, I made a mistake. The parameter \"query\" for the API \
             \"search_by_engine\" has a value of \"nearest passport application center in my \
             location\", which was clearly stated in the user's task, so I don't need to ask \
             about it."
        );
        assert_eq!(
            render_correction(ErrorType::Imprecise, "", "", ""),
            "Sorry, I made a mistake. My question wasn't clear, so let me rephrase it for \
             better understanding."
        );
        assert_eq!(
            render_correction(ErrorType::Incomplete, "", "", ""),
            "Sorry, I made a mistake. I still lack some key information, so I need to ask \
             further questions."
        );
        for t in ErrorType::ALL {
            assert!(render_correction(t, "p", "a", "v").starts_with(CORRECTION_PREFIX));
        }
    }

    #[test]
    fn inject_keeps_one_balanced_marker_pair() {
        let dialogue = mouse_dialogue();
        let policy = InjectionPolicy {
            augment_fraction: 1.0,
            ..InjectionPolicy::default()
        };
        let gw = Gateway::mock_empty();
        let mut seen = 0;
        for seed in 0..40 {
            let Ok(Some(augmented)) = augment_dialogue(&dialogue, &policy, &gw, seed) else {
                continue; // semantic types fail on the empty mock
            };
            seen += 1;
            let text = augmented.assistant_text();
            let spans = crate::mask::extract_error_spans(&text).unwrap();
            assert_eq!(spans.len(), 1);
            let (_, end) = spans[0];
            assert!(text[end..].trim_start().starts_with(CORRECTION_PREFIX));
            assert!(crate::model::validate_record(&augmented).is_empty());
            // Ground truth untouched.
            let last = augmented.turns.last().unwrap();
            assert_eq!(
                protocol::extract_solution(&last.text).unwrap(),
                dialogue.source.solution
            );
        }
        assert!(seen > 0, "no structural injections drawn in 40 seeds");
    }

    #[test]
    fn imprecise_flow_matches_the_reference_order() {
        let dialogue = mouse_dialogue();
        let injection = ErrorInjection {
            error_type: ErrorType::Imprecise,
            position: 1,
            error_text: "[QUESTION] Could you tell me what you're interested in?".to_string(),
            correction_text: render_correction(ErrorType::Imprecise, "", "", ""),
        };
        let augmented = inject(&dialogue, injection, 9);
        let kinds: Vec<TurnKind> = augmented.turns.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TurnKind::TaskStatement,
                TurnKind::Decomposition,
                TurnKind::ParamEvaluation,
                TurnKind::Question,   // wrapped erroneous question
                TurnKind::UserReply,  // refusal from the bank
                TurnKind::Correction, // correction + the real question
                TurnKind::UserReply,  // original answer
                TurnKind::Confirmation,
                TurnKind::Summary
            ]
        );
        assert!(augmented.turns[3].text.starts_with(SOE));
        assert!(augmented.turns[3].text.ends_with(EOE));
        assert!(REFUSAL_BANK.contains(&augmented.turns[4].text.as_str()));
        assert!(augmented.turns[5].text.starts_with(CORRECTION_PREFIX));
        assert!(augmented.turns[5]
            .text
            .contains("Could you please specify the online marketplace"));
        assert!(crate::model::validate_record(&augmented).is_empty());
    }

    #[test]
    fn redundant_injection_lands_after_confirmation() {
        let dialogue = mouse_dialogue();
        let (question, target_pos, prev_pos) = generate_redundant_error(&dialogue, 3).unwrap();
        let injection = ErrorInjection {
            error_type: ErrorType::Redundant,
            position: target_pos,
            error_text: format!("{} {}", protocol::QUESTION_MARKER, question),
            correction_text: render_correction(
                ErrorType::Redundant,
                "website",
                "online_shopping",
                "HomeComforts",
            ),
        };
        let augmented = inject(&dialogue, injection, 1);
        let kinds: Vec<TurnKind> = augmented.turns.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TurnKind::TaskStatement,
                TurnKind::Decomposition,
                TurnKind::ParamEvaluation,
                TurnKind::Question,
                TurnKind::UserReply,
                TurnKind::Confirmation,
                TurnKind::Correction, // injected error + correction
                TurnKind::Summary
            ]
        );
        // Redundant error text equals the earlier question turn's text.
        let question_turn = &augmented.turns[3];
        let injected = augmented.injection.as_ref().unwrap();
        assert_eq!(injected.error_text, question_turn.text);
        assert_eq!(prev_pos, 1);
    }

    #[test]
    fn semantic_types_generate_and_inject_through_the_canned_model() {
        // The fixture synthesizer answers the three semantic prompts, so
        // each model-backed path runs end to end.
        let gw = Gateway::mock_with_synth(crate::fixtures::canned_response);
        let dialogue = mouse_dialogue();
        for (error_type, weights) in [
            (ErrorType::ClearlyStated, [1.0, 0.0, 0.0, 0.0, 0.0]),
            (ErrorType::Imprecise, [0.0, 1.0, 0.0, 0.0, 0.0]),
            (ErrorType::Irrelevant, [0.0, 0.0, 1.0, 0.0, 0.0]),
        ] {
            let policy = InjectionPolicy {
                type_weights: weights,
                augment_fraction: 1.0,
            };
            let augmented = augment_dialogue(&dialogue, &policy, &gw, 21)
                .unwrap()
                .expect("feasible for this dialogue");
            let injection = augmented.injection.as_ref().unwrap();
            assert_eq!(injection.error_type, error_type);
            assert!(injection.error_text.starts_with("[QUESTION] "));
            assert!(injection.correction_text.starts_with(CORRECTION_PREFIX));
            assert!(crate::model::validate_record(&augmented).is_empty());
        }

        // Clearly-stated targets the specified parameter and quotes it in
        // the correction.
        let policy = InjectionPolicy {
            type_weights: [1.0, 0.0, 0.0, 0.0, 0.0],
            augment_fraction: 1.0,
        };
        let augmented = augment_dialogue(&dialogue, &policy, &gw, 3)
            .unwrap()
            .unwrap();
        let injection = augmented.injection.unwrap();
        assert_eq!(injection.position, 2); // "product" is the only specified one
        assert!(injection.correction_text.contains("\"product\""));
        assert!(injection.correction_text.contains("\"wireless mouse\""));
        assert!(injection
            .correction_text
            .contains("clearly stated in the user's task"));
    }

    #[test]
    fn zero_fraction_never_augments() {
        let dialogue = mouse_dialogue();
        let policy = InjectionPolicy {
            augment_fraction: 0.0,
            ..InjectionPolicy::default()
        };
        let gw = Gateway::mock_empty();
        for seed in 0..64 {
            assert!(augment_dialogue(&dialogue, &policy, &gw, seed)
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn strip_of_injected_turns_recovers_the_original() {
        let dialogue = mouse_dialogue();
        let policy = InjectionPolicy {
            augment_fraction: 1.0,
            type_weights: [0.0, 0.0, 0.0, 1.0, 1.0], // structural types only
        };
        let gw = Gateway::mock_empty();
        for seed in 0..24 {
            let augmented = augment_dialogue(&dialogue, &policy, &gw, seed)
                .unwrap()
                .expect("structural injections always feasible here");
            // Inverse transform: drop the turn carrying the markers.
            let mut stripped = augmented.clone();
            stripped.turns.retain(|t| !t.text.contains(SOE));
            stripped.injection = None;
            stripped.record_id = dialogue.record_id.clone();
            assert_eq!(stripped, dialogue);
        }
    }
}
