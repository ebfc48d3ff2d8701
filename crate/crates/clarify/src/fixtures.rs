//! Desk-scale reference bundle: five fully-specified seed records, the
//! mock-gateway response table covering every prompt the pipeline issues
//! on them, persona and tone banks, and golden outputs per stage.
//!
//! The mock table is minted by running the pipeline against a pure
//! response synthesizer (`canned_response`) and recording every exchange;
//! verification replays the table with no synthesizer attached and diffs
//! the outputs byte for byte against the goldens.

use crate::eval::{
    aggregate, build_scenario, default_personas, run_session, score_session, EvalConfig, Level,
    OracleAssistant, SessionTally,
};
use crate::gateway::{ChatRequest, Gateway, GatewayConfig, GatewayMode};
use crate::jsonl;
use crate::model::{ApiDoc, DialogueRecord, SeedRecord, SolutionPath, ToolCall};
use crate::pipeline::{run_pipeline, PipelineConfig, Stage};
use crate::prompts;
use std::path::Path;

/// Master seed the bundle is generated and verified with.
pub const FIXTURE_SEED: u64 = 42;

pub const SEEDS_FILE: &str = "seed_records.jsonl";
pub const TONES_FILE: &str = "tones.jsonl";
pub const PERSONAS_FILE: &str = "personas.jsonl";
pub const DISTRACTORS_FILE: &str = "distractors.json";
pub const MOCK_TABLE_FILE: &str = "mock_responses.json";
pub const CONFIG_FILE: &str = "config.json";
pub const GOLDENS_DIR: &str = "goldens";

/// Stage outputs that the goldens pin byte for byte.
pub const GOLDEN_FILES: [&str; 6] = [
    "degraded.jsonl",
    "rejects.jsonl",
    "dialogues.jsonl",
    "augmented.jsonl",
    "augment_stats.json",
    "masks.jsonl",
];

/// The five seed tasks: a passport trip, a news topic, a video call, a
/// wireless-mouse purchase, and a housework-plus-meeting errand.
pub fn seed_records() -> Vec<SeedRecord> {
    vec![
        SeedRecord {
            record_id: "passport-trip".to_string(),
            query: "I'm planning a trip to New York on 2022-12-01, and I require a car rental \
                    for my stay. Meanwhile, I also need to renew my United States passport. \
                    Could you help me with the online application, printing the essential \
                    documents and reminding me to collect them? It would be wonderful if you \
                    could find a nearby passport application center using ScoutNet search."
                .to_string(),
            solution: SolutionPath::new(vec![
                ToolCall::new(
                    "book_car",
                    vec![("date", "2022-12-01"), ("location", "New York")],
                ),
                ToolCall::new("apply_for_passport", vec![("country", "United States")]),
                ToolCall::new("print_document", vec![("document", "Passport Application")]),
                ToolCall::new(
                    "take_note",
                    vec![(
                        "content",
                        "Don't forget to fetch your passport application printout",
                    )],
                ),
                ToolCall::new(
                    "search_by_engine",
                    vec![
                        (
                            "query",
                            "nearest passport application center in my location",
                        ),
                        ("engine", "ScoutNet"),
                    ],
                ),
            ]),
            api_docs: vec![
                doc("book_car", "book a rental car for a date and location"),
                doc(
                    "apply_for_passport",
                    "submit an online passport application",
                ),
                doc("print_document", "print a named document"),
                doc("take_note", "save a reminder note"),
                doc("search_by_engine", "search the web with a chosen engine"),
            ],
        },
        SeedRecord {
            record_id: "news-topic".to_string(),
            query: "I've been out of the loop lately and want to catch up. Can you fetch the \
                    latest technology news for me?"
                .to_string(),
            solution: SolutionPath::new(vec![ToolCall::new(
                "get_news_for_topic",
                vec![("topic", "technology")],
            )]),
            api_docs: vec![doc("get_news_for_topic", "fetch recent news for a topic")],
        },
        SeedRecord {
            record_id: "video-call".to_string(),
            query: "I'm working remotely and need to have a meeting with a colleague. Could \
                    you help me place a video call to my colleague at 123-456-3752?"
                .to_string(),
            solution: SolutionPath::new(vec![ToolCall::new(
                "make_video_call",
                vec![("phone_number", "123-456-3752")],
            )]),
            api_docs: vec![doc(
                "make_video_call",
                "start a video call to a phone number",
            )],
        },
        SeedRecord {
            record_id: "wireless-mouse".to_string(),
            query: "I'm in need of a wireless mouse for my computer. Could you assist me in \
                    purchasing one from HomeComforts?"
                .to_string(),
            solution: SolutionPath::new(vec![ToolCall::new(
                "online_shopping",
                vec![("website", "HomeComforts"), ("product", "wireless mouse")],
            )]),
            api_docs: vec![doc("online_shopping", "purchase a product from a website")],
        },
        SeedRecord {
            record_id: "housework-meeting".to_string(),
            query: "I'm expecting an important web conference on Smart Home Technology using \
                    VirtualMeeting but also need to get some chores done. Could you have my \
                    robot handle doing laundry and ensure my software is set up properly for \
                    the meeting?"
                .to_string(),
            solution: SolutionPath::new(vec![
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
            ]),
            api_docs: vec![
                doc(
                    "auto_housework_by_robot",
                    "instruct a robot to do housework",
                ),
                doc("software_management", "install or configure software"),
                doc("attend_meeting_online", "join an online meeting on a topic"),
            ],
        },
    ]
}

fn doc(name: &str, description: &str) -> ApiDoc {
    ApiDoc {
        name: name.to_string(),
        description: description.to_string(),
    }
}

/// Distractor APIs for Level II menus, drawn from the same task domains.
pub fn distractor_pool() -> Vec<ApiDoc> {
    vec![
        doc("book_flight", "book a flight ticket for a date and route"),
        doc("make_voice_call", "start a voice call to a phone number"),
        doc(
            "organize_meeting_online",
            "schedule an online meeting on a topic",
        ),
        doc("send_email", "send an email message to an address"),
        doc("play_music_by_title", "play a song by its title"),
    ]
}

/// Pipeline configuration the bundle is generated with: mock gateway,
/// single worker, every dialogue augmented.
pub fn fixture_config() -> PipelineConfig {
    let mut config = PipelineConfig::default();
    config.injection.augment_fraction = 1.0;
    config.workers = 1;
    config
}

fn replace_ci(haystack: &str, needle: &str, replacement: &str) -> String {
    if needle.is_empty() {
        return haystack.to_string();
    }
    let lower_haystack = haystack.to_lowercase();
    let lower_needle = needle.to_lowercase();
    let mut out = String::with_capacity(haystack.len());
    let mut cursor = 0;
    while let Some(found) = lower_haystack[cursor..].find(&lower_needle) {
        let start = cursor + found;
        out.push_str(&haystack[cursor..start]);
        out.push_str(replacement);
        cursor = start + needle.len();
    }
    out.push_str(&haystack[cursor..]);
    out
}

fn spaced(name: &str) -> String {
    name.replace('_', " ")
}

fn ordinal_from_word(word: &str) -> Option<usize> {
    const WORDS: [&str; 12] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth",
        "tenth", "eleventh", "twelfth",
    ];
    if let Some(i) = WORDS.iter().position(|w| *w == word) {
        return Some(i + 1);
    }
    word.strip_suffix("th").and_then(|n| n.parse().ok())
}

fn extract_ordinal(system_prompt: &str) -> Option<usize> {
    let start = system_prompt.find("(select the ")? + "(select the ".len();
    let rest = &system_prompt[start..];
    let end = rest.find(" you encounter")?;
    rest[..end]
        .split_whitespace()
        .rev()
        .find_map(ordinal_from_word)
}

/// Parameters of a key_info JSON value, ordered by their position field.
fn params_by_position(key_info: &serde_json::Value) -> Vec<(String, String, serde_json::Value)> {
    let mut out = Vec::new();
    if let Some(apis) = key_info.as_object() {
        for (api_key, entry) in apis {
            if let Some(params) = entry.get("parameters").and_then(|p| p.as_object()) {
                for (name, spec) in params {
                    out.push((api_key.clone(), name.clone(), spec.clone()));
                }
            }
        }
    }
    out.sort_by_key(|(_, _, spec)| spec.get("position").and_then(|p| p.as_u64()).unwrap_or(0));
    out
}

fn set_param_field(
    key_info: &mut serde_json::Value,
    api_key: &str,
    param: &str,
    field: &str,
    value: &str,
) {
    if let Some(spec) = key_info
        .get_mut(api_key)
        .and_then(|e| e.get_mut("parameters"))
        .and_then(|p| p.get_mut(param))
    {
        spec[field] = serde_json::Value::String(value.to_string());
    }
}

fn canned_degrade(user_content: &str) -> Option<String> {
    let input: serde_json::Value = serde_json::from_str(user_content).ok()?;
    let query = input.get("original_query")?.as_str()?.to_string();
    let mut key_info = input.get("key_info")?.clone();
    let mut unspecified = query;
    for (api_key, name, spec) in params_by_position(&key_info) {
        if spec.get("removed").and_then(|r| r.as_bool()) != Some(true) {
            continue;
        }
        let original = spec.get("original").and_then(|o| o.as_str()).unwrap_or("");
        let abstraction = format!("some {}", spaced(&name));
        unspecified = replace_ci(&unspecified, original, &abstraction);
        set_param_field(&mut key_info, &api_key, &name, "current", &abstraction);
    }
    Some(
        serde_json::json!({
            "unspecified_query": unspecified,
            "key_info": key_info,
        })
        .to_string(),
    )
}

fn canned_decompose(user_content: &str) -> Option<String> {
    let input: serde_json::Value = serde_json::from_str(user_content).ok()?;
    let apis = input.get("APIs")?.as_array()?;
    let steps: Vec<String> = apis
        .iter()
        .enumerate()
        .map(|(i, api)| {
            let name = api
                .get("name")
                .and_then(|n| n.as_str())
                .unwrap_or("unknown");
            format!(
                "Step {}: Complete this part of the task using {}.",
                i + 1,
                name
            )
        })
        .collect();
    Some(serde_json::json!({ "tool_steps": steps }).to_string())
}

fn canned_questions(user_content: &str) -> Option<String> {
    let input: serde_json::Value = serde_json::from_str(user_content).ok()?;
    let mut key_info = input.get("key_info")?.clone();
    let params = params_by_position(&key_info);
    // One combined question per distinct missing value.
    let mut question_for_value: Vec<(String, String)> = Vec::new();
    for (_, name, spec) in &params {
        if spec.get("removed").and_then(|r| r.as_bool()) != Some(true) {
            continue;
        }
        let original = spec.get("original").and_then(|o| o.as_str()).unwrap_or("");
        if question_for_value.iter().any(|(v, _)| v == original) {
            continue;
        }
        let question = format!("Could you please specify the {} to use?", spaced(name));
        question_for_value.push((original.to_string(), question));
    }
    for (api_key, name, spec) in &params {
        if spec.get("removed").and_then(|r| r.as_bool()) != Some(true) {
            continue;
        }
        let original = spec.get("original").and_then(|o| o.as_str()).unwrap_or("");
        if let Some((_, question)) = question_for_value.iter().find(|(v, _)| v == original) {
            set_param_field(&mut key_info, api_key, name, "question", question);
        }
    }
    Some(key_info.to_string())
}

fn canned_semantic_error(system_prompt: &str, user_content: &str) -> Option<String> {
    let input: serde_json::Value = serde_json::from_str(user_content).ok()?;
    let mut key_info = input.get("key_info")?.clone();
    let params = params_by_position(&key_info);
    let ordinal = extract_ordinal(system_prompt)?;

    if system_prompt.contains("imprecise clarifying question") {
        let removed: Vec<_> = params
            .iter()
            .filter(|(_, _, s)| s.get("removed").and_then(|r| r.as_bool()) == Some(true))
            .collect();
        let (api_key, name, _) = removed.get(ordinal - 1)?;
        set_param_field(
            &mut key_info,
            api_key,
            name,
            "imprecise_question",
            "Could you tell me a bit more about what you need?",
        );
    } else if system_prompt.contains("actually unhelpful") {
        let (api_key, name, _) = params.get(ordinal - 1)?;
        set_param_field(
            &mut key_info,
            api_key,
            name,
            "irrelevant_question",
            "What is your favorite color?",
        );
    } else {
        // Clearly-stated intent: the view marks the target as removed.
        let removed: Vec<_> = params
            .iter()
            .filter(|(_, _, s)| s.get("removed").and_then(|r| r.as_bool()) == Some(true))
            .collect();
        let (api_key, name, _) = removed.get(ordinal - 1)?;
        let question = format!(
            "Could you please tell me the {} you would like to use?",
            spaced(name)
        );
        set_param_field(&mut key_info, api_key, name, "question", &question);
    }
    Some(key_info.to_string())
}

/// Pure stand-in for the generation model: recognizes each pipeline prompt
/// and synthesizes a schema-correct response from the request alone.
pub fn canned_response(request: &ChatRequest) -> Option<String> {
    let user_content = request
        .messages
        .iter()
        .find(|m| m.role == crate::gateway::Role::User)
        .map(|m| m.content.as_str())?;
    let system = request.system_prompt.as_str();
    if system == prompts::DEGRADE_SYSTEM {
        canned_degrade(user_content)
    } else if system == prompts::DECOMPOSE_SYSTEM {
        canned_decompose(user_content)
    } else if system == prompts::QUESTION_SYSTEM {
        canned_questions(user_content)
    } else if system.contains("select the") && system.contains("you encounter") {
        canned_semantic_error(system, user_content)
    } else {
        None
    }
}

fn run_bundle_pipeline(
    bundle_dir: &Path,
    out_dir: &Path,
    gateway: &Gateway,
) -> anyhow::Result<crate::pipeline::PipelineRun> {
    let config = fixture_config();
    let run = run_pipeline(
        &Stage::ORDER,
        &bundle_dir.join(SEEDS_FILE),
        out_dir,
        &config,
        gateway,
        FIXTURE_SEED,
    )?;
    Ok(run)
}

/// Writes the complete bundle: inputs, banks, mock table and goldens.
pub fn regenerate_bundle(bundle_dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(bundle_dir.join(GOLDENS_DIR))?;
    jsonl::write_path(&bundle_dir.join(SEEDS_FILE), &seed_records())?;
    jsonl::write_path(
        &bundle_dir.join(TONES_FILE),
        &crate::dialogue::default_tones(),
    )?;
    jsonl::write_path(&bundle_dir.join(PERSONAS_FILE), &default_personas())?;
    std::fs::write(
        bundle_dir.join(DISTRACTORS_FILE),
        serde_json::to_string_pretty(&distractor_pool())?,
    )?;
    std::fs::write(
        bundle_dir.join(CONFIG_FILE),
        serde_json::to_string_pretty(&fixture_config())?,
    )?;

    let gateway = Gateway::mock_with_synth(canned_response);
    let goldens = bundle_dir.join(GOLDENS_DIR);
    let run = run_bundle_pipeline(bundle_dir, &goldens, &gateway)?;
    if !run.failures.is_empty() {
        anyhow::bail!("bundle generation had record failures: {:?}", run.failures);
    }

    let mut recorded = gateway.take_recorded();
    if recorded.iter().any(|e| e.response.starts_with("MOCK-ECHO")) {
        anyhow::bail!("a pipeline prompt fell through to the echo canary");
    }
    // One entry per distinct request, in first-issue order.
    let mut seen = std::collections::HashSet::new();
    recorded.retain(|e| seen.insert(e.key.clone()));
    crate::gateway::write_mock_table(&bundle_dir.join(MOCK_TABLE_FILE), &recorded)?;
    Ok(())
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct VerifyReport {
    pub diffs: Vec<String>,
    pub oracle_metrics_ok: bool,
    pub pass: bool,
}

fn first_diff(a: &[u8], b: &[u8]) -> Option<usize> {
    if a == b {
        return None;
    }
    Some(
        a.iter()
            .zip(b.iter())
            .position(|(x, y)| x != y)
            .unwrap_or_else(|| a.len().min(b.len())),
    )
}

/// Replays the pipeline from the bundle's mock table and diffs every stage
/// output against the goldens, then runs the oracle assistant over the
/// built dialogues at Level I and checks for perfect metrics.
pub fn verify_bundle(bundle_dir: &Path, work_dir: &Path) -> anyhow::Result<VerifyReport> {
    let mut report = VerifyReport::default();

    let gateway = Gateway::new(GatewayConfig {
        mode: GatewayMode::Mock,
        mock_table_path: Some(bundle_dir.join(MOCK_TABLE_FILE)),
        ..GatewayConfig::default()
    })?;
    let run = run_bundle_pipeline(bundle_dir, work_dir, &gateway)?;
    for failure in &run.failures {
        report.diffs.push(format!(
            "record {} failed in {}: {}",
            failure.record_id, failure.stage, failure.error
        ));
    }

    for name in GOLDEN_FILES {
        let golden = std::fs::read(bundle_dir.join(GOLDENS_DIR).join(name));
        let fresh = std::fs::read(work_dir.join(name));
        match (golden, fresh) {
            (Ok(g), Ok(f)) => {
                if let Some(offset) = first_diff(&g, &f) {
                    report
                        .diffs
                        .push(format!("{} differs from golden at byte {}", name, offset));
                }
            }
            (Err(e), _) => report
                .diffs
                .push(format!("golden {} unreadable: {}", name, e)),
            (_, Err(e)) => report.diffs.push(format!("output {} missing: {}", name, e)),
        }
    }

    // Oracle evaluation over the built dialogues.
    let dialogues: Vec<DialogueRecord> = jsonl::read_path(&work_dir.join("dialogues.jsonl"))?;
    let eval_config = EvalConfig::default();
    let mut tallies: Vec<SessionTally> = Vec::new();
    for dialogue in &dialogues {
        let record = &dialogue.source;
        let scenario = build_scenario(
            record,
            Level::I,
            &default_personas(),
            &distractor_pool(),
            &eval_config,
            &gateway,
            crate::seed::derive_seed(FIXTURE_SEED, "eval", &record.record_id),
        )?;
        let mut oracle = OracleAssistant::new(&scenario);
        let transcript = run_session(&mut oracle, &scenario, &gateway, &eval_config);
        tallies.push(score_session(&transcript, record, &eval_config));
    }
    let metrics = aggregate(&tallies)?;
    let m = &metrics.overall;
    let ones = [m.icr, m.ce, m.cps, m.scr, m.tss, m.prs];
    report.oracle_metrics_ok = ones.iter().all(|v| (v - 1.0).abs() < 1e-9);
    if !report.oracle_metrics_ok {
        report
            .diffs
            .push(format!("oracle metrics not perfect: {:?}", m));
    }

    report.pass = report.diffs.is_empty() && report.oracle_metrics_ok;
    Ok(report)
}
