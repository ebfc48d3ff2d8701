//! Query degradation: stratified removal-plan sampling, model-driven
//! removal, similarity scoring and the quality-control gate.

use crate::gateway::{ChatMessage, Gateway, GatewayError, Role};
use crate::model::{ComplexityLevel, DegradedRecord, KeyInfo, SeedRecord, SolutionPath};
use crate::prompts;
use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Documented seed derivation rule, recorded into run manifests.
pub const SEED_DERIVATION: &str =
    "sha256(master_seed_be8 || stage_tag || record_id) first 8 bytes, big-endian";

/// Identifies one parameter of one call; `call_index` disambiguates
/// repeated API names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamKey {
    pub call_index: usize,
    pub api_name: String,
    pub param_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalPlan {
    pub targets: Vec<ParamKey>,
    pub level: ComplexityLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Stratum weights for fully-specified, single-API single-param,
    /// single-API multi-param and multi-API multi-param, in that order.
    pub level_weights: [f64; 4],
    /// Inclusive bounds on how many parameters the multi strata remove.
    pub multi_param_count_range: (usize, usize),
}

impl Default for SamplerConfig {
    fn default() -> Self {
        // Observed corpus proportions for the four strata.
        SamplerConfig {
            level_weights: [275.0, 761.0, 488.0, 1857.0],
            multi_param_count_range: (2, 3),
        }
    }
}

impl SamplerConfig {
    /// Weights scaled to sum to 1. Panics if any weight is negative or all
    /// are zero; configs are validated at load time.
    pub fn normalized_weights(&self) -> [f64; 4] {
        let sum: f64 = self.level_weights.iter().sum();
        assert!(
            sum > 0.0 && self.level_weights.iter().all(|w| *w >= 0.0),
            "level weights must be non-negative with a positive sum"
        );
        let mut out = self.level_weights;
        for w in &mut out {
            *w /= sum;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    EmbeddingEndpoint,
    TokenOverlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProviderConfig {
    pub kind: SimilarityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub threshold: f64,
}

impl Default for SimilarityProviderConfig {
    fn default() -> Self {
        SimilarityProviderConfig {
            kind: SimilarityKind::TokenOverlap,
            endpoint: None,
            threshold: 0.85,
        }
    }
}

#[derive(Debug, Error)]
pub enum DegradeError {
    #[error("record {record_id}: model response unusable after reprompt: {detail}")]
    MalformedModelJson { record_id: String, detail: String },
    #[error("record {record_id}: model altered non-target parameter {param}: {detail}")]
    PlanViolation {
        record_id: String,
        param: String,
        detail: String,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    TooSimilar { param: String, score: f64 },
    LeakedValue { param: String },
    DroppedValue { param: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateDecision {
    Accept,
    Reject(RejectReason),
}

fn enumerate_params(solution: &SolutionPath) -> Vec<ParamKey> {
    let mut out = Vec::with_capacity(solution.total_params());
    for (ci, call) in solution.calls.iter().enumerate() {
        for p in &call.parameters {
            out.push(ParamKey {
                call_index: ci,
                api_name: call.api_name.clone(),
                param_name: p.name.clone(),
            });
        }
    }
    out
}

fn level_feasible(level: ComplexityLevel, solution: &SolutionPath) -> bool {
    let calls_with_params = solution
        .calls
        .iter()
        .filter(|c| !c.parameters.is_empty())
        .count();
    match level {
        ComplexityLevel::FullySpecified => true,
        ComplexityLevel::SingleApiSingleParam => solution.total_params() >= 1,
        ComplexityLevel::SingleApiMultiParam => {
            solution.calls.iter().any(|c| c.parameters.len() >= 2)
        }
        ComplexityLevel::MultiApiMultiParam => calls_with_params >= 2,
    }
}

/// Precedence used when the drawn level is infeasible for the solution.
const FALLBACK_CHAIN: [ComplexityLevel; 4] = [
    ComplexityLevel::MultiApiMultiParam,
    ComplexityLevel::SingleApiMultiParam,
    ComplexityLevel::SingleApiSingleParam,
    ComplexityLevel::FullySpecified,
];

fn nearest_feasible(drawn: ComplexityLevel, solution: &SolutionPath) -> ComplexityLevel {
    let start = FALLBACK_CHAIN
        .iter()
        .position(|l| *l == drawn)
        .expect("level is in the chain");
    for level in &FALLBACK_CHAIN[start..] {
        if level_feasible(*level, solution) {
            return *level;
        }
    }
    ComplexityLevel::FullySpecified
}

fn weighted_draw(rng: &mut ChaCha8Rng, weights: &[f64; 4]) -> ComplexityLevel {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return ComplexityLevel::ALL[i];
        }
    }
    ComplexityLevel::ALL[3]
}

/// Draws a removal plan for one solution. The stratum comes from the
/// configured weights, falling back to the nearest feasible level; targets
/// are drawn uniformly without replacement under the level's shape rule.
pub fn sample_removal_plan(
    solution: &SolutionPath,
    config: &SamplerConfig,
    seed: u64,
) -> RemovalPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = config.normalized_weights();
    let drawn = weighted_draw(&mut rng, &weights);
    let level = nearest_feasible(drawn, solution);
    let all = enumerate_params(solution);

    let targets = match level {
        ComplexityLevel::FullySpecified => Vec::new(),
        ComplexityLevel::SingleApiSingleParam => {
            let pick = rng.random_range(0..all.len());
            vec![all[pick].clone()]
        }
        ComplexityLevel::SingleApiMultiParam => {
            let eligible: Vec<usize> = solution
                .calls
                .iter()
                .enumerate()
                .filter(|(_, c)| c.parameters.len() >= 2)
                .map(|(i, _)| i)
                .collect();
            let call_index = eligible[rng.random_range(0..eligible.len())];
            let call = &solution.calls[call_index];
            let (lo, hi) = config.multi_param_count_range;
            let lo = lo.max(2).min(call.parameters.len());
            let hi = hi.max(lo).min(call.parameters.len());
            let count = rng.random_range(lo..=hi);
            let chosen = index::sample(&mut rng, call.parameters.len(), count);
            let mut picks: Vec<usize> = chosen.into_iter().collect();
            picks.sort_unstable();
            picks
                .into_iter()
                .map(|pi| ParamKey {
                    call_index,
                    api_name: call.api_name.clone(),
                    param_name: call.parameters[pi].name.clone(),
                })
                .collect()
        }
        ComplexityLevel::MultiApiMultiParam => {
            let (lo, hi) = config.multi_param_count_range;
            let lo = lo.max(2).min(all.len());
            let hi = hi.max(lo).min(all.len());
            let count = rng.random_range(lo..=hi);
            let spans_two = |picks: &[usize]| {
                picks
                    .iter()
                    .map(|&i| all[i].call_index)
                    .collect::<BTreeSet<_>>()
                    .len()
                    >= 2
            };
            let mut picks: Vec<usize> = index::sample(&mut rng, all.len(), count)
                .into_iter()
                .collect();
            let mut tries = 0;
            while !spans_two(&picks) && tries < 16 {
                picks = index::sample(&mut rng, all.len(), count)
                    .into_iter()
                    .collect();
                tries += 1;
            }
            if !spans_two(&picks) {
                // Constructive fallback: swap one pick for a parameter of a
                // different call so the plan spans two calls.
                let first_call = all[picks[0]].call_index;
                let other: Vec<usize> = (0..all.len())
                    .filter(|&i| all[i].call_index != first_call)
                    .collect();
                picks[1] = other[rng.random_range(0..other.len())];
            }
            picks.sort_unstable();
            picks.dedup();
            picks.into_iter().map(|i| all[i].clone()).collect()
        }
    };

    RemovalPlan { targets, level }
}

/// Jaccard overlap of lowercased word sets; the deterministic fallback
/// similarity. Two empty texts count as identical.
pub fn token_overlap(a: &str, b: &str) -> f64 {
    let set = |s: &str| {
        s.to_lowercase()
            .split_whitespace()
            .map(|w| w.to_string())
            .collect::<BTreeSet<String>>()
    };
    let sa = set(a);
    let sb = set(b);
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Similarity in [0, 1]. The embedding kind maps cosine through
/// `(1 + cos) / 2`; the token kind is pure and never touches the gateway.
pub fn similarity(
    a: &str,
    b: &str,
    config: &SimilarityProviderConfig,
    gateway: &Gateway,
) -> Result<f64, GatewayError> {
    match config.kind {
        SimilarityKind::TokenOverlap => Ok(token_overlap(a, b)),
        SimilarityKind::EmbeddingEndpoint => {
            let vectors = gateway.embed(&[a, b])?;
            Ok((1.0 + cosine(&vectors[0], &vectors[1])) / 2.0)
        }
    }
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

/// Applies the acceptance gate to a degraded record.
///
/// Rejects when a removed parameter's surface form stayed too close to the
/// original (score strictly above the threshold), when a removed value
/// still appears verbatim in the degraded query, or when a retained value
/// that was present in the original query vanished from the degraded one.
pub fn quality_gate(
    record: &DegradedRecord,
    config: &SimilarityProviderConfig,
    gateway: &Gateway,
) -> Result<GateDecision, GatewayError> {
    for p in record.key_info.params() {
        let label = format!("{}[{}].{}", p.api_name, p.call_index, p.param_name);
        if p.spec.removed {
            let score = similarity(&p.spec.original, &p.spec.current, config, gateway)?;
            if score > config.threshold {
                return Ok(GateDecision::Reject(RejectReason::TooSimilar {
                    param: label,
                    score,
                }));
            }
            if contains_ci(&record.unspecified_query, &p.spec.original) {
                return Ok(GateDecision::Reject(RejectReason::LeakedValue {
                    param: label,
                }));
            }
        } else {
            // Only values that were actually present in the original query
            // can be dropped from the degraded one; paraphrased values are
            // exempt from the verbatim-presence check.
            let was_present = contains_ci(&record.original_query, &p.spec.original);
            if was_present && !contains_ci(&record.unspecified_query, &p.spec.original) {
                return Ok(GateDecision::Reject(RejectReason::DroppedValue {
                    param: label,
                }));
            }
        }
    }
    Ok(GateDecision::Accept)
}

fn reprompt_nudge() -> ChatMessage {
    ChatMessage {
        role: Role::User,
        content: "Your previous response was not a valid JSON object matching the required \
                  schema. Return a single JSON object with the fields `unspecified_query` and \
                  `key_info` only, with `removed`, `original` and `current` for every parameter."
            .to_string(),
    }
}

struct DegradeResponse {
    unspecified_query: String,
    /// (wire key, param name) -> current value.
    currents: Vec<(String, String, String)>,
}

fn parse_degrade_response(text: &str) -> Result<DegradeResponse, String> {
    let value = crate::protocol::first_json_value(text).ok_or("no JSON object in response")?;
    let obj = value.as_object().ok_or("response is not a JSON object")?;
    let unspecified_query = obj
        .get("unspecified_query")
        .and_then(|v| v.as_str())
        .ok_or("missing unspecified_query")?
        .to_string();
    let key_info = obj
        .get("key_info")
        .and_then(|v| v.as_object())
        .ok_or("missing key_info object")?;
    let mut currents = Vec::new();
    for (api_key, entry) in key_info {
        let params = entry
            .get("parameters")
            .and_then(|v| v.as_object())
            .ok_or_else(|| format!("api {api_key} lacks a parameters object"))?;
        for (name, spec) in params {
            let spec = spec
                .as_object()
                .ok_or_else(|| format!("parameter {api_key}.{name} is not an object"))?;
            let removed = spec
                .get("removed")
                .and_then(|v| v.as_bool())
                .ok_or_else(|| format!("parameter {api_key}.{name} lacks the removed field"))?;
            if removed {
                let current = spec
                    .get("current")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| format!("removed parameter {api_key}.{name} lacks current"))?;
                currents.push((api_key.clone(), name.clone(), current.to_string()));
            } else if let Some(current) = spec.get("current").and_then(|v| v.as_str()) {
                currents.push((api_key.clone(), name.clone(), current.to_string()));
            }
        }
    }
    Ok(DegradeResponse {
        unspecified_query,
        currents,
    })
}

/// Degrades one query according to the plan. An empty plan is the
/// fully-specified no-op and never calls the model.
pub fn degrade_query(
    seed_record: &SeedRecord,
    plan: &RemovalPlan,
    gateway: &Gateway,
) -> Result<DegradedRecord, DegradeError> {
    let record_id = seed_record.record_id.clone();
    let mut key_info = KeyInfo::from_solution(&seed_record.solution);

    if plan.targets.is_empty() {
        return Ok(DegradedRecord {
            record_id,
            original_query: seed_record.query.clone(),
            unspecified_query: seed_record.query.clone(),
            solution: seed_record.solution.clone(),
            key_info,
            complexity_level: ComplexityLevel::FullySpecified,
            tool_steps: None,
        });
    }

    for target in &plan.targets {
        let spec = key_info
            .spec_mut(target.call_index, &target.param_name)
            .unwrap_or_else(|| panic!("plan target {:?} not in solution", target));
        spec.removed = true;
    }

    let mut request = prompts::degrade_request(&seed_record.query, &key_info, gateway.model_tag());
    let mut response_text = gateway.complete(&request)?;
    let mut parsed = parse_degrade_response(&response_text);
    if parsed.is_err() {
        request.messages.push(ChatMessage {
            role: Role::Assistant,
            content: response_text,
        });
        request.messages.push(reprompt_nudge());
        response_text = gateway.complete(&request)?;
        parsed = parse_degrade_response(&response_text);
    }
    let response = parsed.map_err(|detail| DegradeError::MalformedModelJson {
        record_id: record_id.clone(),
        detail,
    })?;

    // Fold the model's `current` values back in. Targets must all be
    // covered; non-targets must be untouched, byte for byte.
    let mut covered: BTreeSet<(usize, String)> = BTreeSet::new();
    for (api_key, param_name, current) in &response.currents {
        let Some(entry_index) =
            (0..key_info.entries.len()).find(|i| key_info.wire_key(*i) == *api_key)
        else {
            continue; // unknown api in response; ignored, targets checked below
        };
        let Some(spec) = key_info.spec_mut(entry_index, param_name) else {
            continue;
        };
        if spec.removed {
            spec.current = current.clone();
            covered.insert((entry_index, param_name.clone()));
        } else if *current != spec.original {
            return Err(DegradeError::PlanViolation {
                record_id,
                param: format!("{api_key}.{param_name}"),
                detail: format!(
                    "current \"{}\" differs from original \"{}\"",
                    current, spec.original
                ),
            });
        }
    }
    for target in &plan.targets {
        if !covered.contains(&(target.call_index, target.param_name.clone())) {
            return Err(DegradeError::MalformedModelJson {
                record_id,
                detail: format!(
                    "target {}[{}].{} missing from response",
                    target.api_name, target.call_index, target.param_name
                ),
            });
        }
    }

    Ok(DegradedRecord {
        record_id,
        original_query: seed_record.query.clone(),
        unspecified_query: response.unspecified_query,
        solution: seed_record.solution.clone(),
        key_info,
        complexity_level: plan.level,
        tool_steps: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ToolCall;

    fn two_param_solution() -> SolutionPath {
        SolutionPath::new(vec![ToolCall::new(
            "online_shopping",
            vec![("website", "HomeComforts"), ("product", "wireless mouse")],
        )])
    }

    #[test]
    fn fully_specified_draw_yields_empty_targets() {
        let config = SamplerConfig {
            level_weights: [1.0, 0.0, 0.0, 0.0],
            ..SamplerConfig::default()
        };
        let plan = sample_removal_plan(&two_param_solution(), &config, 7);
        assert_eq!(plan.level, ComplexityLevel::FullySpecified);
        assert!(plan.targets.is_empty());
    }

    #[test]
    fn infeasible_levels_fall_back() {
        let single = SolutionPath::new(vec![ToolCall::new("api", vec![("only", "v")])]);
        for weights in [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]] {
            let config = SamplerConfig {
                level_weights: weights,
                ..SamplerConfig::default()
            };
            let plan = sample_removal_plan(&single, &config, 11);
            assert_eq!(plan.level, ComplexityLevel::SingleApiSingleParam);
            assert_eq!(plan.targets.len(), 1);
        }
    }

    #[test]
    fn single_single_draw_is_uniform_over_params() {
        let config = SamplerConfig {
            level_weights: [0.0, 1.0, 0.0, 0.0],
            ..SamplerConfig::default()
        };
        let solution = two_param_solution();
        let mut website = 0usize;
        let n = 10_000;
        for seed in 0..n {
            let plan = sample_removal_plan(&solution, &config, seed);
            assert_eq!(plan.level, ComplexityLevel::SingleApiSingleParam);
            assert_eq!(plan.targets.len(), 1);
            if plan.targets[0].param_name == "website" {
                website += 1;
            }
        }
        let share = website as f64 / n as f64;
        assert!((share - 0.5).abs() < 0.02, "website share {share}");
    }

    #[test]
    fn multi_api_targets_span_two_calls() {
        let solution = SolutionPath::new(vec![
            ToolCall::new("a", vec![("p1", "1"), ("p2", "2")]),
            ToolCall::new("b", vec![("q1", "3")]),
        ]);
        let config = SamplerConfig {
            level_weights: [0.0, 0.0, 0.0, 1.0],
            ..SamplerConfig::default()
        };
        for seed in 0..200 {
            let plan = sample_removal_plan(&solution, &config, seed);
            assert_eq!(plan.level, ComplexityLevel::MultiApiMultiParam);
            let calls: BTreeSet<usize> = plan.targets.iter().map(|t| t.call_index).collect();
            assert!(calls.len() >= 2, "seed {seed}: {:?}", plan.targets);
        }
    }

    #[test]
    fn sampled_plans_always_match_their_level_shape() {
        // Shape oracle: recompute the stratum from the drawn targets and
        // compare with the plan's declared level.
        let solutions = [
            SolutionPath::new(vec![ToolCall::new("a", vec![("p", "1")])]),
            SolutionPath::new(vec![ToolCall::new("a", vec![("p", "1"), ("q", "2")])]),
            SolutionPath::new(vec![
                ToolCall::new("a", vec![("p", "1"), ("q", "2")]),
                ToolCall::new("b", vec![("r", "3")]),
            ]),
            SolutionPath::new(vec![
                ToolCall::new("a", vec![("p", "1"), ("q", "2"), ("r", "3")]),
                ToolCall::new("b", vec![("s", "4"), ("t", "5")]),
                ToolCall::new("c", vec![("u", "6")]),
            ]),
        ];
        let config = SamplerConfig::default();
        for solution in &solutions {
            for seed in 0..500 {
                let plan = sample_removal_plan(solution, &config, seed);
                let calls: BTreeSet<usize> = plan.targets.iter().map(|t| t.call_index).collect();
                let expected = match (plan.targets.len(), calls.len()) {
                    (0, _) => ComplexityLevel::FullySpecified,
                    (1, _) => ComplexityLevel::SingleApiSingleParam,
                    (_, 1) => ComplexityLevel::SingleApiMultiParam,
                    (_, _) => ComplexityLevel::MultiApiMultiParam,
                };
                assert_eq!(plan.level, expected, "seed {seed}: {:?}", plan.targets);
            }
        }
    }

    #[test]
    fn token_overlap_examples() {
        assert_eq!(token_overlap("ride service", "ride service"), 1.0);
        assert_eq!(token_overlap("ride service", "fried chicken"), 0.0);
        assert_eq!(token_overlap("book a car", "book a flight"), 0.5);
    }

    #[test]
    fn similarity_identity_both_kinds() {
        let gw = Gateway::mock_empty();
        for kind in [
            SimilarityKind::TokenOverlap,
            SimilarityKind::EmbeddingEndpoint,
        ] {
            let config = SimilarityProviderConfig {
                kind,
                ..SimilarityProviderConfig::default()
            };
            let s = similarity("New York", "New York", &config, &gw).unwrap();
            assert!((s - 1.0).abs() < 1e-12, "{kind:?} gave {s}");
        }
    }

    fn degraded_fixture(current: &str, query: &str) -> DegradedRecord {
        let solution = two_param_solution();
        let mut key_info = KeyInfo::from_solution(&solution);
        {
            let spec = key_info.spec_mut(0, "website").unwrap();
            spec.removed = true;
            spec.current = current.to_string();
        }
        DegradedRecord {
            record_id: "fixture".to_string(),
            original_query:
                "I'm in need of a wireless mouse for my computer. Could you assist me in \
                 purchasing one from HomeComforts?"
                    .to_string(),
            unspecified_query: query.to_string(),
            solution,
            key_info,
            complexity_level: ComplexityLevel::SingleApiSingleParam,
            tool_steps: None,
        }
    }

    #[test]
    fn gate_rejects_identical_current() {
        let gw = Gateway::mock_empty();
        let record = degraded_fixture(
            "HomeComforts",
            "I'm in need of a wireless mouse for my computer. Could you assist me in \
             purchasing one from an online marketplace?",
        );
        let decision = quality_gate(&record, &SimilarityProviderConfig::default(), &gw).unwrap();
        assert!(matches!(
            decision,
            GateDecision::Reject(RejectReason::TooSimilar { .. })
        ));
    }

    #[test]
    fn gate_accepts_similarity_of_exactly_threshold() {
        // Strictly-above comparison: a score equal to the threshold passes.
        let gw = Gateway::mock_empty();
        let config = SimilarityProviderConfig::default();
        assert_eq!(config.threshold, 0.85);
        // 17 shared words of 20 union words: 17/20 = 0.85 exactly.
        let shared: Vec<String> = (0..17).map(|i| format!("w{i}")).collect();
        let original = format!("{} a1 a2 a3", shared.join(" "));
        let current = shared.join(" ");
        assert!((token_overlap(&original, &current) - 0.85).abs() < 1e-12);
        let mut record = degraded_fixture(&current, "a wireless mouse from somewhere");
        record.key_info.spec_mut(0, "website").unwrap().original = original;
        record.original_query = "a wireless mouse from here".to_string();
        let decision = quality_gate(&record, &config, &gw).unwrap();
        assert_eq!(decision, GateDecision::Accept);
    }

    #[test]
    fn gate_rejects_leaked_value() {
        let gw = Gateway::mock_empty();
        let record = degraded_fixture(
            "an online marketplace",
            "I want a wireless mouse from HomeComforts please",
        );
        let decision = quality_gate(&record, &SimilarityProviderConfig::default(), &gw).unwrap();
        assert!(matches!(
            decision,
            GateDecision::Reject(RejectReason::LeakedValue { .. })
        ));
    }

    #[test]
    fn gate_rejects_dropped_retained_value() {
        let gw = Gateway::mock_empty();
        let record = degraded_fixture(
            "an online marketplace",
            "I need something for my computer from an online marketplace",
        );
        let decision = quality_gate(&record, &SimilarityProviderConfig::default(), &gw).unwrap();
        assert!(matches!(
            decision,
            GateDecision::Reject(RejectReason::DroppedValue { param }) if param.contains("product")
        ));
    }

    #[test]
    fn empty_plan_bypasses_the_model() {
        let seed = SeedRecord {
            record_id: "r1".to_string(),
            query: "fetch the latest technology news".to_string(),
            solution: SolutionPath::new(vec![ToolCall::new(
                "get_news_for_topic",
                vec![("topic", "technology")],
            )]),
            api_docs: Vec::new(),
        };
        let plan = RemovalPlan {
            targets: Vec::new(),
            level: ComplexityLevel::FullySpecified,
        };
        let gw = Gateway::mock_empty(); // canary would break JSON parsing if called
        let record = degrade_query(&seed, &plan, &gw).unwrap();
        assert_eq!(record.unspecified_query, seed.query);
        assert!(record.key_info.params().all(|p| !p.spec.removed));
    }

    #[test]
    fn degrade_applies_mock_removal() {
        let seed = SeedRecord {
            record_id: "ride".to_string(),
            query: "Order fried chicken and book a Lyft to get home".to_string(),
            solution: SolutionPath::new(vec![ToolCall::new(
                "book_ride",
                vec![("service", "Lyft")],
            )]),
            api_docs: Vec::new(),
        };
        let plan = RemovalPlan {
            targets: vec![ParamKey {
                call_index: 0,
                api_name: "book_ride".to_string(),
                param_name: "service".to_string(),
            }],
            level: ComplexityLevel::SingleApiSingleParam,
        };
        let mut key_info = KeyInfo::from_solution(&seed.solution);
        key_info.spec_mut(0, "service").unwrap().removed = true;
        let request = prompts::degrade_request(&seed.query, &key_info, "mock");
        let response = serde_json::json!({
            "unspecified_query": "Order fried chicken and book a ride service to get home",
            "key_info": {
                "book_ride": {"parameters": {"service": {
                    "removed": true, "original": "Lyft", "current": "ride service"
                }}}
            }
        })
        .to_string();
        let gw = Gateway::mock(vec![(request, response)]);
        let record = degrade_query(&seed, &plan, &gw).unwrap();
        assert!(!record.unspecified_query.contains("Lyft"));
        let spec = record.key_info.spec(0, "service").unwrap();
        assert_eq!(spec.original, "Lyft");
        assert_eq!(spec.current, "ride service");
        let gate = quality_gate(&record, &SimilarityProviderConfig::default(), &gw).unwrap();
        assert_eq!(gate, GateDecision::Accept);
    }

    #[test]
    fn missing_removed_field_is_malformed_after_reprompt() {
        let seed = SeedRecord {
            record_id: "bad".to_string(),
            query: "book a Lyft".to_string(),
            solution: SolutionPath::new(vec![ToolCall::new(
                "book_ride",
                vec![("service", "Lyft")],
            )]),
            api_docs: Vec::new(),
        };
        let plan = RemovalPlan {
            targets: vec![ParamKey {
                call_index: 0,
                api_name: "book_ride".to_string(),
                param_name: "service".to_string(),
            }],
            level: ComplexityLevel::SingleApiSingleParam,
        };
        // The canary response is not JSON, and the reprompted request also
        // misses the table, so both attempts fail to parse.
        let gw = Gateway::mock_empty();
        match degrade_query(&seed, &plan, &gw) {
            Err(DegradeError::MalformedModelJson { record_id, .. }) => {
                assert_eq!(record_id, "bad")
            }
            other => panic!("expected MalformedModelJson, got {:?}", other.map(|_| ())),
        }
    }
}
