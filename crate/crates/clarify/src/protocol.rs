//! Parser for assistant turns written against the sectioned output
//! protocol: `[TASK DECOMPOSITION]`, `[PARAMETER EVALUATION]`, `[QUESTION]`
//! and `[SUMMARY]` markers, with lenient JSON extraction of solution paths.
//!
//! Parsing is lossy-tolerant by design: anything that cannot be sectioned
//! becomes a `Freeform` event, and a summary whose JSON does not parse is
//! surfaced so the session can be scored as a parse failure. Solution JSON
//! is located as the first balanced `[` … `]` array after the summary
//! marker; both the `arguments` and `parameters` field spellings are
//! accepted. No repair beyond balanced-array scanning is attempted.

use crate::model::{Parameter, SolutionPath, ToolCall};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DECOMPOSITION_MARKER: &str = "[TASK DECOMPOSITION]";
pub const PARAM_EVALUATION_MARKER: &str = "[PARAMETER EVALUATION]";
pub const QUESTION_MARKER: &str = "[QUESTION]";
pub const SUMMARY_MARKER: &str = "[SUMMARY]";

const MARKERS: [&str; 4] = [
    DECOMPOSITION_MARKER,
    PARAM_EVALUATION_MARKER,
    QUESTION_MARKER,
    SUMMARY_MARKER,
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("no JSON array found after the summary marker")]
    NoJsonFound,
    #[error("summary JSON does not match the solution schema: {0}")]
    SchemaMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssistantEventKind {
    Decomposition(String),
    ParamEvaluation(String),
    Question(String),
    Summary {
        text: String,
        solution: Option<SolutionPath>,
    },
    Freeform(String),
}

/// One parsed section of an assistant turn. `source_span` is the half-open
/// byte range of the raw turn this event was read from; concatenating the
/// spans in order reconstructs the turn exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AssistantEvent {
    pub kind: AssistantEventKind,
    pub source_span: (usize, usize),
}

impl AssistantEvent {
    pub fn is_question(&self) -> bool {
        matches!(self.kind, AssistantEventKind::Question(_))
    }

    pub fn is_summary(&self) -> bool {
        matches!(self.kind, AssistantEventKind::Summary { .. })
    }
}

fn next_marker(text: &str, from: usize) -> Option<(usize, &'static str)> {
    MARKERS
        .iter()
        .filter_map(|m| text[from..].find(m).map(|i| (from + i, *m)))
        .min_by_key(|(i, _)| *i)
}

/// Splits an assistant turn into ordered section events. Text before the
/// first marker is Freeform; unmatched content never fails the parse.
pub fn parse_turn(text: &str) -> Vec<AssistantEvent> {
    let mut events = Vec::new();
    let mut cursor = 0;
    let first = next_marker(text, 0);
    let lead_end = first.map_or(text.len(), |(i, _)| i);
    if lead_end > 0 && !text[..lead_end].trim().is_empty() {
        events.push(AssistantEvent {
            kind: AssistantEventKind::Freeform(text[..lead_end].trim().to_string()),
            source_span: (0, lead_end),
        });
        cursor = lead_end;
    } else if first.is_some() {
        // Leading whitespace folds into the first section's span so the
        // span concatenation stays lossless.
        cursor = 0;
    }

    let mut at = first;
    while let Some((start, marker)) = at {
        let payload_from = start + marker.len();
        let next = next_marker(text, payload_from);
        let end = next.map_or(text.len(), |(i, _)| i);
        let payload = text[payload_from..end].trim().to_string();
        let kind = match marker {
            DECOMPOSITION_MARKER => AssistantEventKind::Decomposition(payload),
            PARAM_EVALUATION_MARKER => AssistantEventKind::ParamEvaluation(payload),
            QUESTION_MARKER => AssistantEventKind::Question(payload),
            SUMMARY_MARKER => AssistantEventKind::Summary {
                solution: extract_solution_from_payload(&text[payload_from..end]).ok(),
                text: payload,
            },
            _ => unreachable!(),
        };
        events.push(AssistantEvent {
            kind,
            source_span: (cursor, end),
        });
        cursor = end;
        at = next;
    }

    if events.is_empty() && !text.is_empty() {
        events.push(AssistantEvent {
            kind: AssistantEventKind::Freeform(text.trim().to_string()),
            source_span: (0, text.len()),
        });
    }
    events
}

/// Returns the first balanced, string-aware `[` … `]` slice of `text`.
fn first_balanced_array(text: &str) -> Option<&str> {
    let start = text.find('[')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escape = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escape {
                escape = false;
            } else if b == b'\\' {
                escape = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'[' | b'{' => depth += 1,
            b']' | b'}' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return Some(&text[start..start + offset + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Deserialize)]
struct CallWire {
    task: String,
    #[serde(default)]
    parameters: Option<Vec<ParamWire>>,
    #[serde(default)]
    arguments: Option<Vec<ParamWire>>,
}

#[derive(Deserialize)]
struct ParamWire {
    name: String,
    value: serde_json::Value,
}

fn wire_value(value: serde_json::Value) -> Result<String, ProtocolError> {
    match value {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        serde_json::Value::Bool(b) => Ok(b.to_string()),
        other => Err(ProtocolError::SchemaMismatch(format!(
            "parameter value is not a scalar: {}",
            other
        ))),
    }
}

fn extract_solution_from_payload(payload: &str) -> Result<SolutionPath, ProtocolError> {
    let array = first_balanced_array(payload).ok_or(ProtocolError::NoJsonFound)?;
    let generic: Vec<serde_json::Value> =
        serde_json::from_str(array).map_err(|_| ProtocolError::NoJsonFound)?;
    if generic.is_empty() {
        return Err(ProtocolError::SchemaMismatch(
            "empty call array".to_string(),
        ));
    }
    let mut calls = Vec::with_capacity(generic.len());
    for item in generic {
        let wire: CallWire = serde_json::from_value(item)
            .map_err(|e| ProtocolError::SchemaMismatch(e.to_string()))?;
        let params = wire.parameters.or(wire.arguments).ok_or_else(|| {
            ProtocolError::SchemaMismatch(format!(
                "call \"{}\" has neither parameters nor arguments",
                wire.task
            ))
        })?;
        let mut parameters = Vec::with_capacity(params.len());
        for p in params {
            parameters.push(Parameter {
                name: p.name,
                value: wire_value(p.value)?,
            });
        }
        calls.push(ToolCall {
            api_name: wire.task,
            parameters,
        });
    }
    Ok(SolutionPath::new(calls))
}

/// Extracts the solution path from a turn containing a `[SUMMARY]` section
/// (or from bare summary payload text).
pub fn extract_solution(text: &str) -> Result<SolutionPath, ProtocolError> {
    let payload = match text.find(SUMMARY_MARKER) {
        Some(i) => &text[i + SUMMARY_MARKER.len()..],
        None => text,
    };
    extract_solution_from_payload(payload)
}

/// Returns the first balanced `{` … `}` or `[` … `]` value in free text,
/// parsed. Used to read JSON out of model responses that wrap it in prose
/// or code fences.
pub fn first_json_value(text: &str) -> Option<serde_json::Value> {
    let start = text.find(['{', '['])?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escape = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escape {
                escape = false;
            } else if b == b'\\' {
                escape = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'[' | b'{' => depth += 1,
            b']' | b'}' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return serde_json::from_str(&text[start..start + offset + 1]).ok();
                }
            }
            _ => {}
        }
    }
    None
}

/// Removes every balanced `<SOE>…<EOE>` marker pair (keeping the wrapped
/// content) and reports whether any were present. A trained model should
/// not emit scaffolding markers; sessions that do are flagged.
pub fn strip_error_markers(text: &str) -> (String, bool) {
    if !text.contains(crate::mask::SOE) && !text.contains(crate::mask::EOE) {
        return (text.to_string(), false);
    }
    let stripped = text
        .replace(crate::mask::SOE, "")
        .replace(crate::mask::EOE, "");
    (stripped, true)
}

/// Serializes a solution path using the requested parameter field spelling.
pub fn serialize_solution(solution: &SolutionPath, spelling: ParamSpelling) -> String {
    #[derive(Serialize)]
    struct CallOut<'a> {
        task: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        parameters: Option<&'a [Parameter]>,
        #[serde(skip_serializing_if = "Option::is_none")]
        arguments: Option<&'a [Parameter]>,
    }
    let out: Vec<CallOut> = solution
        .calls
        .iter()
        .map(|c| CallOut {
            task: &c.api_name,
            parameters: (spelling == ParamSpelling::Parameters).then_some(&c.parameters[..]),
            arguments: (spelling == ParamSpelling::Arguments).then_some(&c.parameters[..]),
        })
        .collect();
    serde_json::to_string(&out).expect("solution serializes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSpelling {
    Parameters,
    Arguments,
}
