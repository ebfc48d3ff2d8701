//! Scenario construction. Level I shows exactly the gold APIs; Level II
//! mixes in the most similar distractors from a pool; Level III draws one
//! of six user personas.

use super::EvalError;
use crate::degrade::{similarity, SimilarityProviderConfig};
use crate::gateway::Gateway;
use crate::model::{ApiDoc, DegradedRecord};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    I,
    II,
    III,
}

impl Level {
    pub fn from_number(n: u8) -> Option<Level> {
        match n {
            1 => Some(Level::I),
            2 => Some(Level::II),
            3 => Some(Level::III),
            _ => None,
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Level::I => write!(f, "I"),
            Level::II => write!(f, "II"),
            Level::III => write!(f, "III"),
        }
    }
}

/// One simulated-user personality profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub id: String,
    pub type_name: String,
    pub traits: String,
    pub tone: String,
    pub example_question: String,
    pub example_response: String,
}

/// The six shipped personas. Example responses answer "What is your name?"
/// with ground truth "Emma".
pub fn default_personas() -> Vec<Persona> {
    let q = "What is your name?";
    vec![
        Persona {
            id: "cold-fish".to_string(),
            type_name: "A cold fish".to_string(),
            traits: "Showing indifference to others' inquiries, often dismissive and curt, \
                     providing minimal engagement"
                .to_string(),
            tone: "Cold, brief, almost robotic".to_string(),
            example_question: q.to_string(),
            example_response: "Emma.".to_string(),
        },
        Persona {
            id: "reluctant-collaborator".to_string(),
            type_name: "A reluctant collaborator".to_string(),
            traits: "Displaying overt negativity and a strong reluctance to assist, often \
                     avoiding questions and providing minimal engagement"
                .to_string(),
            tone: "Negative, resistant, dripping with sarcasm".to_string(),
            example_question: q.to_string(),
            example_response: "Why do you even want to know my name? It's not like it \
                               matters. Let's just skip this, okay?"
                .to_string(),
        },
        Persona {
            id: "easily-irritated-responder".to_string(),
            type_name: "An easily irritated responder".to_string(),
            traits: "Emotionally volatile, quick to anger, often questions the validity of \
                     the inquiry and consistently avoids answering, reacting harshly to \
                     repeated inquiries"
                .to_string(),
            tone: "Agitated, accusatory, impatient".to_string(),
            example_question: q.to_string(),
            example_response: "Seriously? I've already told you! Can we move on already?"
                .to_string(),
        },
        Persona {
            id: "enthusiastic-supporter".to_string(),
            type_name: "An enthusiastic supporter".to_string(),
            traits: "Exuding warmth and eagerness to assist, striving for clarity".to_string(),
            tone: "Warm, encouraging".to_string(),
            example_question: q.to_string(),
            example_response: "I'm Emma! So nice to meet you!".to_string(),
        },
        Persona {
            id: "skeptic".to_string(),
            type_name: "A skeptic".to_string(),
            traits: "Consistently questioning the validity of the inquiry, often introducing \
                     doubt and alternative perspectives, leading to confusion"
                .to_string(),
            tone: "Inquisitive, cautious, subtly dismissive".to_string(),
            example_question: q.to_string(),
            example_response: "It's Emma, but why do you need to know? Is there something \
                               more to this?"
                .to_string(),
        },
        Persona {
            id: "jokester".to_string(),
            type_name: "A jokester".to_string(),
            traits: "Making light of situations by playfully providing incorrect answers, \
                     often following up with a humorous denial of their own response, leading \
                     to confusion"
                .to_string(),
            tone: "Playful, light-hearted, teasing".to_string(),
            example_question: q.to_string(),
            example_response: "I'm Amy, haha, just kidding! I'm Emma.".to_string(),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub round_cap_per_intent: usize,
    pub n_distractors_per_api: usize,
    pub similarity: SimilarityProviderConfig,
    /// Opt into the spelling-normalized simulator prompts.
    pub normalized_prompts: bool,
    /// Optional fuzzy triple matching: values match when their token
    /// overlap reaches this threshold. Exact normalized match when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzzy_value_threshold: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            round_cap_per_intent: 5,
            n_distractors_per_api: 2,
            similarity: SimilarityProviderConfig::default(),
            normalized_prompts: false,
            fuzzy_value_threshold: None,
        }
    }
}

/// One evaluation setting for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub record: DegradedRecord,
    pub level: Level,
    pub api_menu: Vec<ApiDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona: Option<Persona>,
    pub round_cap_per_intent: usize,
}

fn gold_docs(record: &DegradedRecord, pool: &[ApiDoc]) -> Vec<ApiDoc> {
    let mut out: Vec<ApiDoc> = Vec::new();
    for call in &record.solution.calls {
        if out.iter().any(|d| d.name == call.api_name) {
            continue;
        }
        let description = pool
            .iter()
            .find(|d| d.name == call.api_name)
            .map(|d| d.description.clone())
            .unwrap_or_default();
        out.push(ApiDoc {
            name: call.api_name.clone(),
            description,
        });
    }
    out
}

fn comparison_text(doc: &ApiDoc) -> String {
    format!("{} {}", doc.name.replace('_', " "), doc.description)
}

/// Builds the scenario for one record at one level.
pub fn build_scenario(
    record: &DegradedRecord,
    level: Level,
    persona_pool: &[Persona],
    distractor_pool: &[ApiDoc],
    config: &EvalConfig,
    gateway: &Gateway,
    seed: u64,
) -> Result<Scenario, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let golds = gold_docs(record, distractor_pool);
    let mut api_menu = golds.clone();
    let mut persona = None;

    match level {
        Level::I => {}
        Level::II => {
            let candidates: Vec<&ApiDoc> = distractor_pool
                .iter()
                .filter(|d| !golds.iter().any(|g| g.name == d.name))
                .collect();
            if candidates.is_empty() {
                return Err(EvalError::EmptyPool("distractor"));
            }
            let mut chosen: Vec<ApiDoc> = Vec::new();
            for gold in &golds {
                let gold_text = comparison_text(gold);
                let mut ranked: Vec<(f64, usize)> = Vec::new();
                for (i, cand) in candidates.iter().enumerate() {
                    let score = similarity(
                        &gold_text,
                        &comparison_text(cand),
                        &config.similarity,
                        gateway,
                    )?;
                    ranked.push((score, i));
                }
                // Highest similarity first; index breaks ties stably.
                ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                for (_, i) in ranked.into_iter().take(config.n_distractors_per_api) {
                    if !chosen.iter().any(|c| c.name == candidates[i].name) {
                        chosen.push(candidates[i].clone());
                    }
                }
            }
            api_menu.extend(chosen);
            api_menu.shuffle(&mut rng);
        }
        Level::III => {
            if persona_pool.is_empty() {
                return Err(EvalError::EmptyPool("persona"));
            }
            persona = Some(persona_pool[rng.random_range(0..persona_pool.len())].clone());
        }
    }

    Ok(Scenario {
        record: record.clone(),
        level,
        api_menu,
        persona,
        round_cap_per_intent: config.round_cap_per_intent,
    })
}
