//! Selective-masking emitter: flattens dialogues into training samples with
//! byte-offset loss spans that whitelist trainable assistant text.
//!
//! Spans are expressed as trainable regions rather than masked ones, so a
//! downstream trainer that honors the spans cannot train on error segments.
//! Offsets are byte offsets into the UTF-8 message content; no text
//! normalization is applied.

use crate::model::{DialogueRecord, Speaker};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub const SOE: &str = "<SOE>";
pub const EOE: &str = "<EOE>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("unbalanced error markers at byte {offset}: {found}")]
    UnbalancedMarkers { offset: usize, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMessage {
    pub role: String,
    pub content: String,
}

/// A flattened dialogue ready for fine-tuning. `loss_spans[i]` lists the
/// trainable half-open byte ranges of `messages[i]`; it is empty for every
/// non-assistant message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub record_id: String,
    pub messages: Vec<SampleMessage>,
    pub loss_spans: Vec<Vec<(usize, usize)>>,
}

impl TrainingSample {
    /// Concatenation of all trainable text across messages.
    pub fn trainable_text(&self) -> String {
        let mut out = String::new();
        for (msg, spans) in self.messages.iter().zip(&self.loss_spans) {
            for &(start, end) in spans {
                out.push_str(&msg.content[start..end]);
            }
        }
        out
    }
}

/// Finds every `<SOE>…<EOE>` segment, inclusive of both markers. Errors on
/// orphan or nested markers.
pub fn extract_error_spans(text: &str) -> Result<Vec<(usize, usize)>, MaskError> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    let mut cursor = 0;
    while cursor < text.len() {
        let next_soe = text[cursor..].find(SOE).map(|i| cursor + i);
        let next_eoe = text[cursor..].find(EOE).map(|i| cursor + i);
        let opener_first = match (next_soe, next_eoe) {
            (None, None) => break,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(s), Some(e)) => s < e,
        };
        if opener_first {
            let s = next_soe.unwrap();
            if open.is_some() {
                return Err(MaskError::UnbalancedMarkers {
                    offset: s,
                    found: format!("nested {}", SOE),
                });
            }
            open = Some(s);
            cursor = s + SOE.len();
        } else {
            let e = next_eoe.unwrap();
            let Some(start) = open.take() else {
                return Err(MaskError::UnbalancedMarkers {
                    offset: e,
                    found: format!("{} without opening {}", EOE, SOE),
                });
            };
            spans.push((start, e + EOE.len()));
            cursor = e + EOE.len();
        }
    }
    if let Some(offset) = open {
        return Err(MaskError::UnbalancedMarkers {
            offset,
            found: format!("{} without closing {}", SOE, EOE),
        });
    }
    Ok(spans)
}

fn complement(len: usize, masked: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for &(start, end) in masked {
        if start > cursor {
            out.push((cursor, start));
        }
        cursor = end.max(cursor);
    }
    if cursor < len {
        out.push((cursor, len));
    }
    out
}

fn role_name(speaker: Speaker) -> &'static str {
    match speaker {
        Speaker::System => "system",
        Speaker::User => "user",
        Speaker::Assistant => "assistant",
    }
}

/// Flattens a dialogue into a training sample. Assistant messages are
/// trainable except for their `<SOE>…<EOE>` segments (markers included);
/// user and system messages are never trainable.
pub fn emit(dialogue: &DialogueRecord) -> Result<TrainingSample, MaskError> {
    let mut messages = Vec::with_capacity(dialogue.turns.len());
    let mut loss_spans = Vec::with_capacity(dialogue.turns.len());
    for turn in &dialogue.turns {
        messages.push(SampleMessage {
            role: role_name(turn.speaker).to_string(),
            content: turn.text.clone(),
        });
        if turn.speaker == Speaker::Assistant {
            let masked = extract_error_spans(&turn.text)?;
            loss_spans.push(complement(turn.text.len(), &masked));
        } else {
            loss_spans.push(Vec::new());
        }
    }
    Ok(TrainingSample {
        record_id: dialogue.record_id.clone(),
        messages,
        loss_spans,
    })
}

/// Writes samples as JSONL in input order.
pub fn export(samples: &[TrainingSample], path: &Path) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for sample in samples {
        serde_json::to_writer(&mut file, sample)?;
        file.write_all(b"\n")?;
    }
    file.flush()
}
