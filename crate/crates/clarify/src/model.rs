//! Shared data model: queries, solutions, key_info, dialogues, injections.
//!
//! All types are immutable after construction and safe to share across
//! workers. `key_info` serializes to the nested JSON object layout used by
//! the dataset files (`api -> parameters -> name -> spec`), preserving
//! insertion order so that re-serialization is byte-stable.

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// One API invocation with its ordered parameter bindings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    #[serde(rename = "task")]
    pub api_name: String,
    pub parameters: Vec<Parameter>,
}

/// A single `name = value` binding. Values are plain UTF-8 strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: String,
}

impl ToolCall {
    pub fn new(api_name: impl Into<String>, parameters: Vec<(&str, &str)>) -> Self {
        ToolCall {
            api_name: api_name.into(),
            parameters: parameters
                .into_iter()
                .map(|(n, v)| Parameter {
                    name: n.to_string(),
                    value: v.to_string(),
                })
                .collect(),
        }
    }
}

/// Ordered list of tool calls; the order is the required invocation order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SolutionPath {
    pub calls: Vec<ToolCall>,
}

impl SolutionPath {
    pub fn new(calls: Vec<ToolCall>) -> Self {
        SolutionPath { calls }
    }

    pub fn total_params(&self) -> usize {
        self.calls.iter().map(|c| c.parameters.len()).sum()
    }

    /// Compact JSON form, as embedded in summary turns.
    pub fn to_compact_json(&self) -> String {
        serde_json::to_string(self).expect("solution path serializes")
    }
}

/// Enumerates parameters in call order, then declaration order within a
/// call, with 1-based positions.
pub fn parameter_positions(solution: &SolutionPath) -> Vec<(String, String, usize)> {
    let mut out = Vec::with_capacity(solution.total_params());
    let mut pos = 1;
    for call in &solution.calls {
        for param in &call.parameters {
            out.push((call.api_name.clone(), param.name.clone(), pos));
            pos += 1;
        }
    }
    out
}

/// Per-parameter degradation state, including the `original -> current`
/// mapping entry when the parameter was removed or abstracted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub removed: bool,
    pub original: String,
    /// Equals `original` when retained; the abstracted surface form (or
    /// empty, for complete removal) when removed.
    pub current: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    /// True when the question was merged across several targets that share
    /// the same missing value.
    #[serde(default, skip_serializing_if = "is_false")]
    pub shared: bool,
    /// 1-based ordinal over all parameters in solution order.
    pub position: usize,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl ParameterSpec {
    pub fn retained(value: &str, position: usize) -> Self {
        ParameterSpec {
            removed: false,
            original: value.to_string(),
            current: value.to_string(),
            question: None,
            shared: false,
            position,
        }
    }
}

/// A parameter of one key_info entry together with its call context.
#[derive(Debug, Clone, Copy)]
pub struct ParamRef<'a> {
    pub call_index: usize,
    pub api_name: &'a str,
    pub param_name: &'a str,
    pub spec: &'a ParameterSpec,
}

/// key_info for one API call: parameter name -> spec, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyInfoEntry {
    pub api_name: String,
    pub params: Vec<(String, ParameterSpec)>,
}

/// Per-API record of parameters, mirroring the solution path. Entries are
/// kept in call order; duplicate API names are disambiguated on the wire
/// with a `#<occurrence>` key suffix (second call of `f` becomes `f#2`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KeyInfo {
    pub entries: Vec<KeyInfoEntry>,
}

impl KeyInfo {
    /// Builds a fully-retained key_info that mirrors `solution`.
    pub fn from_solution(solution: &SolutionPath) -> Self {
        let mut entries = Vec::with_capacity(solution.calls.len());
        let mut pos = 1;
        for call in &solution.calls {
            let mut params = Vec::with_capacity(call.parameters.len());
            for p in &call.parameters {
                params.push((p.name.clone(), ParameterSpec::retained(&p.value, pos)));
                pos += 1;
            }
            entries.push(KeyInfoEntry {
                api_name: call.api_name.clone(),
                params,
            });
        }
        KeyInfo { entries }
    }

    /// Iterates parameters in entry order (solution order).
    pub fn params(&self) -> impl Iterator<Item = ParamRef<'_>> {
        self.entries.iter().enumerate().flat_map(|(idx, entry)| {
            entry.params.iter().map(move |(name, spec)| ParamRef {
                call_index: idx,
                api_name: &entry.api_name,
                param_name: name,
                spec,
            })
        })
    }

    /// Parameters in strictly increasing position order.
    pub fn params_by_position(&self) -> Vec<ParamRef<'_>> {
        let mut v: Vec<_> = self.params().collect();
        v.sort_by_key(|p| p.spec.position);
        v
    }

    pub fn removed_params(&self) -> Vec<ParamRef<'_>> {
        self.params_by_position()
            .into_iter()
            .filter(|p| p.spec.removed)
            .collect()
    }

    pub fn specified_params(&self) -> Vec<ParamRef<'_>> {
        self.params_by_position()
            .into_iter()
            .filter(|p| !p.spec.removed)
            .collect()
    }

    pub fn total_params(&self) -> usize {
        self.entries.iter().map(|e| e.params.len()).sum()
    }

    pub fn spec_mut(&mut self, call_index: usize, param_name: &str) -> Option<&mut ParameterSpec> {
        self.entries.get_mut(call_index).and_then(|e| {
            e.params
                .iter_mut()
                .find(|(n, _)| n == param_name)
                .map(|(_, s)| s)
        })
    }

    pub fn spec(&self, call_index: usize, param_name: &str) -> Option<&ParameterSpec> {
        self.entries.get(call_index).and_then(|e| {
            e.params
                .iter()
                .find(|(n, _)| n == param_name)
                .map(|(_, s)| s)
        })
    }

    /// Wire key for an entry: plain API name for the first occurrence,
    /// `name#k` for the k-th repeat.
    pub fn wire_key(&self, index: usize) -> String {
        let name = &self.entries[index].api_name;
        let occurrence = self.entries[..index]
            .iter()
            .filter(|e| &e.api_name == name)
            .count();
        if occurrence == 0 {
            name.clone()
        } else {
            format!("{}#{}", name, occurrence + 1)
        }
    }
}

// Parameter order is declaration order and must survive the wire, so the
// nested maps are serialized by hand rather than through a sorted Map.
struct ParamsWire<'a>(&'a [(String, ParameterSpec)]);

impl Serialize for ParamsWire<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, spec) in self.0 {
            map.serialize_entry(name, spec)?;
        }
        map.end()
    }
}

struct EntryWireSer<'a>(&'a KeyInfoEntry);

impl Serialize for EntryWireSer<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(1))?;
        map.serialize_entry("parameters", &ParamsWire(&self.0.params))?;
        map.end()
    }
}

impl Serialize for KeyInfo {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (idx, entry) in self.entries.iter().enumerate() {
            map.serialize_entry(&self.wire_key(idx), &EntryWireSer(entry))?;
        }
        map.end()
    }
}

#[derive(Deserialize)]
struct EntryWireDe {
    #[serde(deserialize_with = "ordered_params")]
    parameters: Vec<(String, ParameterSpec)>,
}

// Reads a JSON object as an ordered list, keeping document order.
fn ordered_params<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> Result<Vec<(String, ParameterSpec)>, D::Error> {
    struct ParamsVisitor;
    impl<'de> Visitor<'de> for ParamsVisitor {
        type Value = Vec<(String, ParameterSpec)>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a map of parameter name to spec")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = Vec::new();
            while let Some((name, spec)) = access.next_entry::<String, ParameterSpec>()? {
                out.push((name, spec));
            }
            Ok(out)
        }
    }
    deserializer.deserialize_map(ParamsVisitor)
}

struct KeyInfoVisitor;

impl<'de> Visitor<'de> for KeyInfoVisitor {
    type Value = KeyInfo;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a map of api name to parameter specs")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<KeyInfo, A::Error> {
        let mut entries = Vec::new();
        while let Some((key, wire)) = access.next_entry::<String, EntryWireDe>()? {
            let api_name = match key.rsplit_once('#') {
                Some((base, suffix)) if suffix.chars().all(|c| c.is_ascii_digit()) => {
                    base.to_string()
                }
                _ => key,
            };
            entries.push(KeyInfoEntry {
                api_name,
                params: wire.parameters,
            });
        }
        Ok(KeyInfo { entries })
    }
}

impl<'de> Deserialize<'de> for KeyInfo {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_map(KeyInfoVisitor)
    }
}

/// The four degradation strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityLevel {
    FullySpecified,
    SingleApiSingleParam,
    SingleApiMultiParam,
    MultiApiMultiParam,
}

impl ComplexityLevel {
    pub const ALL: [ComplexityLevel; 4] = [
        ComplexityLevel::FullySpecified,
        ComplexityLevel::SingleApiSingleParam,
        ComplexityLevel::SingleApiMultiParam,
        ComplexityLevel::MultiApiMultiParam,
    ];

    /// Short label used in stats tables.
    pub fn label(self) -> &'static str {
        match self {
            ComplexityLevel::FullySpecified => "Fully-Specified",
            ComplexityLevel::SingleApiSingleParam => "Sing-API-Sing-Param",
            ComplexityLevel::SingleApiMultiParam => "Sing-API-Multi-Param",
            ComplexityLevel::MultiApiMultiParam => "Multi-API-Multi-Param",
        }
    }
}

/// A query degraded into its unspecified form, with the removal bookkeeping
/// needed to rebuild and score clarification dialogues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegradedRecord {
    pub record_id: String,
    pub original_query: String,
    pub unspecified_query: String,
    pub solution: SolutionPath,
    pub key_info: KeyInfo,
    pub complexity_level: ComplexityLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_steps: Option<Vec<String>>,
}

impl DegradedRecord {
    pub fn removed_count(&self) -> usize {
        self.key_info.params().filter(|p| p.spec.removed).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    TaskStatement,
    Decomposition,
    ParamEvaluation,
    Question,
    UserReply,
    Confirmation,
    Correction,
    Summary,
    Mixed,
}

impl TurnKind {
    /// Kinds that may only be spoken by the assistant.
    pub fn assistant_only(self) -> bool {
        matches!(
            self,
            TurnKind::Question | TurnKind::Summary | TurnKind::Confirmation | TurnKind::Correction
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub speaker: Speaker,
    pub kind: TurnKind,
    pub text: String,
}

impl DialogueTurn {
    pub fn user(kind: TurnKind, text: impl Into<String>) -> Self {
        DialogueTurn {
            speaker: Speaker::User,
            kind,
            text: text.into(),
        }
    }

    pub fn assistant(kind: TurnKind, text: impl Into<String>) -> Self {
        DialogueTurn {
            speaker: Speaker::Assistant,
            kind,
            text: text.into(),
        }
    }
}

/// The five error categories used for error-correction augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    ClearlyStated,
    Imprecise,
    Irrelevant,
    Redundant,
    Incomplete,
}

impl ErrorType {
    pub const ALL: [ErrorType; 5] = [
        ErrorType::ClearlyStated,
        ErrorType::Imprecise,
        ErrorType::Irrelevant,
        ErrorType::Redundant,
        ErrorType::Incomplete,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ErrorType::ClearlyStated => "Clearly Stated Intent Clarification",
            ErrorType::Imprecise => "Imprecise Clarification",
            ErrorType::Irrelevant => "Irrelevant Clarification",
            ErrorType::Redundant => "Redundant Clarification",
            ErrorType::Incomplete => "Incomplete Clarification",
        }
    }
}

/// One injected error-correction pair. `error_text` is exactly the content
/// wrapped by `<SOE>`/`<EOE>` in the augmented dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInjection {
    pub error_type: ErrorType,
    /// Target parameter position for most types; the cutoff `k` for
    /// incomplete clarification.
    pub position: usize,
    pub error_text: String,
    pub correction_text: String,
}

/// An assembled multi-turn clarification dialogue, optionally augmented
/// with one error-correction pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub record_id: String,
    pub source: DegradedRecord,
    pub turns: Vec<DialogueTurn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<ErrorInjection>,
}

impl DialogueRecord {
    /// Concatenation of assistant turn texts, newline-joined.
    pub fn assistant_text(&self) -> String {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::Assistant)
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Per-error-type injection counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationStats {
    pub clearly_stated: usize,
    pub imprecise: usize,
    pub irrelevant: usize,
    pub redundant: usize,
    pub incomplete: usize,
    pub total: usize,
}

impl AugmentationStats {
    pub fn record(&mut self, error_type: ErrorType) {
        match error_type {
            ErrorType::ClearlyStated => self.clearly_stated += 1,
            ErrorType::Imprecise => self.imprecise += 1,
            ErrorType::Irrelevant => self.irrelevant += 1,
            ErrorType::Redundant => self.redundant += 1,
            ErrorType::Incomplete => self.incomplete += 1,
        }
        self.total += 1;
    }

    pub fn count(&self, error_type: ErrorType) -> usize {
        match error_type {
            ErrorType::ClearlyStated => self.clearly_stated,
            ErrorType::Imprecise => self.imprecise,
            ErrorType::Irrelevant => self.irrelevant,
            ErrorType::Redundant => self.redundant,
            ErrorType::Incomplete => self.incomplete,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.total
            == self.clearly_stated
                + self.imprecise
                + self.irrelevant
                + self.redundant
                + self.incomplete
    }
}

/// A fully-specified input record, the raw material for degradation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub record_id: String,
    pub query: String,
    pub solution: SolutionPath,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub api_docs: Vec<ApiDoc>,
}

/// An API identifier with an optional documentation string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiDoc {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

/// One violated invariant, with enough location detail to find it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at {}: {}",
            self.invariant, self.location, self.detail
        )
    }
}

fn violation(invariant: &str, location: impl Into<String>, detail: impl Into<String>) -> Violation {
    Violation {
        invariant: invariant.to_string(),
        location: location.into(),
        detail: detail.into(),
    }
}

/// Checks every structural invariant of a dialogue record. Violations are
/// data, not failures: an empty report means the record is well-formed.
pub fn validate_record(record: &DialogueRecord) -> Vec<Violation> {
    let mut report = Vec::new();
    let src = &record.source;

    // Solution shape.
    if src.solution.calls.is_empty() {
        report.push(violation(
            "solution-non-empty",
            &record.record_id,
            "solution path has no calls",
        ));
    }
    for (ci, call) in src.solution.calls.iter().enumerate() {
        if call.api_name.is_empty() {
            report.push(violation(
                "api-name-non-empty",
                format!("{}/call[{}]", record.record_id, ci),
                "empty api name",
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &call.parameters {
            if !seen.insert(p.name.as_str()) {
                report.push(violation(
                    "parameter-names-unique",
                    format!("{}/call[{}]", record.record_id, ci),
                    format!("duplicate parameter \"{}\"", p.name),
                ));
            }
        }
    }

    // key_info mirrors the solution exactly.
    if src.key_info.entries.len() != src.solution.calls.len() {
        report.push(violation(
            "key-info-mirrors-solution",
            &record.record_id,
            format!(
                "{} key_info entries for {} calls",
                src.key_info.entries.len(),
                src.solution.calls.len()
            ),
        ));
    } else {
        for (ci, (entry, call)) in src
            .key_info
            .entries
            .iter()
            .zip(&src.solution.calls)
            .enumerate()
        {
            if entry.api_name != call.api_name {
                report.push(violation(
                    "key-info-mirrors-solution",
                    format!("{}/call[{}]", record.record_id, ci),
                    format!(
                        "key_info api \"{}\" vs solution api \"{}\"",
                        entry.api_name, call.api_name
                    ),
                ));
            }
            let entry_names: Vec<_> = entry.params.iter().map(|(n, _)| n.as_str()).collect();
            let call_names: Vec<_> = call.parameters.iter().map(|p| p.name.as_str()).collect();
            if entry_names != call_names {
                report.push(violation(
                    "key-info-mirrors-solution",
                    format!("{}/call[{}]", record.record_id, ci),
                    format!("parameters {:?} vs {:?}", entry_names, call_names),
                ));
            }
            for (p, (name, spec)) in call.parameters.iter().zip(&entry.params) {
                if p.name == *name && spec.original != p.value {
                    report.push(violation(
                        "key-info-mirrors-solution",
                        format!("{}/call[{}]/{}", record.record_id, ci, name),
                        format!(
                            "original \"{}\" vs solution value \"{}\"",
                            spec.original, p.value
                        ),
                    ));
                }
            }
        }
    }

    // ParameterSpec consistency: retained parameters carry their value
    // unchanged; positions form a permutation of 1..=N.
    let mut positions = Vec::new();
    for p in src.key_info.params() {
        let loc = format!(
            "{}/{}[{}]/{}",
            record.record_id, p.api_name, p.call_index, p.param_name
        );
        if !p.spec.removed && p.spec.current != p.spec.original {
            report.push(violation(
                "parameter-spec-consistency",
                &loc,
                format!(
                    "removed=false but current \"{}\" != original \"{}\"",
                    p.spec.current, p.spec.original
                ),
            ));
        }
        positions.push(p.spec.position);
    }
    let n = positions.len();
    let mut sorted = positions.clone();
    sorted.sort_unstable();
    if sorted != (1..=n).collect::<Vec<_>>() {
        report.push(violation(
            "positions-permutation",
            &record.record_id,
            format!(
                "positions {:?} are not a permutation of 1..={}",
                positions, n
            ),
        ));
    }

    // complexity_level cross-check against the removed set.
    let removed: Vec<_> = src.key_info.params().filter(|p| p.spec.removed).collect();
    let removed_calls: std::collections::HashSet<usize> =
        removed.iter().map(|p| p.call_index).collect();
    let expected = match (removed.len(), removed_calls.len()) {
        (0, _) => ComplexityLevel::FullySpecified,
        (1, _) => ComplexityLevel::SingleApiSingleParam,
        (_, 1) => ComplexityLevel::SingleApiMultiParam,
        (_, _) => ComplexityLevel::MultiApiMultiParam,
    };
    if expected != src.complexity_level {
        report.push(violation(
            "complexity-level-consistency",
            &record.record_id,
            format!(
                "stored {:?} but removed set implies {:?}",
                src.complexity_level, expected
            ),
        ));
    }

    // Turn kinds must match speakers.
    for (ti, turn) in record.turns.iter().enumerate() {
        let loc = format!("{}/turn[{}]", record.record_id, ti);
        if turn.kind.assistant_only() && turn.speaker != Speaker::Assistant {
            report.push(violation(
                "turn-kind-speaker",
                &loc,
                format!("{:?} spoken by {:?}", turn.kind, turn.speaker),
            ));
        }
        if turn.kind == TurnKind::UserReply && turn.speaker != Speaker::User {
            report.push(violation(
                "turn-kind-speaker",
                &loc,
                format!("UserReply spoken by {:?}", turn.speaker),
            ));
        }
    }

    // Final assistant turn is a summary that embeds a parseable solution.
    match record
        .turns
        .iter()
        .rev()
        .find(|t| t.speaker == Speaker::Assistant)
    {
        None => report.push(violation(
            "final-turn-summary",
            &record.record_id,
            "dialogue has no assistant turns",
        )),
        Some(turn) => {
            if turn.kind != TurnKind::Summary {
                report.push(violation(
                    "final-turn-summary",
                    &record.record_id,
                    format!("last assistant turn has kind {:?}", turn.kind),
                ));
            } else if crate::protocol::extract_solution(&turn.text).is_err() {
                report.push(violation(
                    "final-turn-summary",
                    &record.record_id,
                    "summary turn does not embed a parseable solution path",
                ));
            }
        }
    }

    // Injection marker discipline.
    if let Some(inj) = &record.injection {
        if inj.error_text.is_empty() {
            report.push(violation(
                "injection-error-non-empty",
                &record.record_id,
                "error_text is empty",
            ));
        }
        let assistant = record.assistant_text();
        match crate::mask::extract_error_spans(&assistant) {
            Err(e) => report.push(violation(
                "injection-markers-balanced",
                &record.record_id,
                e.to_string(),
            )),
            Ok(spans) => {
                if spans.len() != 1 {
                    report.push(violation(
                        "injection-single-segment",
                        &record.record_id,
                        format!("{} marker segments, expected exactly 1", spans.len()),
                    ));
                } else {
                    let (_, end) = spans[0];
                    let tail = assistant[end..].trim_start();
                    if !tail.starts_with(inj.correction_text.as_str()) {
                        report.push(violation(
                            "correction-adjacency",
                            &record.record_id,
                            "text after <EOE> does not begin with the correction",
                        ));
                    }
                }
            }
        }
    } else {
        let assistant = record.assistant_text();
        if assistant.contains(crate::mask::SOE) || assistant.contains(crate::mask::EOE) {
            report.push(violation(
                "markers-only-when-injected",
                &record.record_id,
                "error markers present without an injection",
            ));
        }
    }

    report
}
