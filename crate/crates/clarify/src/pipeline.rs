//! Pipeline orchestration: layered configuration, stage wiring, run
//! manifests and the train/test split.
//!
//! Every stage output is accompanied by a manifest recording the resolved
//! config, seed and input/output digests. In mock and replay modes the
//! manifest carries no wall-clock fields, so reruns with equal inputs are
//! byte-identical end to end.

use crate::degrade::{
    degrade_query, quality_gate, sample_removal_plan, GateDecision, RejectReason, SamplerConfig,
    SimilarityProviderConfig,
};
use crate::dialogue::{assemble_dialogue, decompose_task, generate_questions, ToneTemplateSet};
use crate::eval::EvalConfig;
use crate::gateway::{Gateway, GatewayConfig, GatewayMode};
use crate::inject::{augment_dialogue, InjectionPolicy};
use crate::jsonl;
use crate::mask::TrainingSample;
use crate::model::{ApiDoc, AugmentationStats, DegradedRecord, DialogueRecord, SeedRecord};
use crate::seed::{derive_seed, sha256_file, sha256_hex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage {stage} failed on {failed} of {total} records")]
    StageFailure {
        stage: &'static str,
        failed: usize,
        total: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

/// Fully layered run configuration: defaults, then file, then flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub gateway: GatewayConfig,
    pub sampler: SamplerConfig,
    pub similarity: SimilarityProviderConfig,
    pub injection: InjectionPolicy,
    pub eval: EvalConfig,
    pub workers: usize,
    /// Documented derivation of per-record seeds from the master seed.
    pub seed_derivation: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gateway: GatewayConfig::default(),
            sampler: SamplerConfig::default(),
            similarity: SimilarityProviderConfig::default(),
            injection: InjectionPolicy::default(),
            eval: EvalConfig::default(),
            workers: 1,
            seed_derivation: crate::degrade::SEED_DERIVATION.to_string(),
        }
    }
}

fn merge_json(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(base_map), serde_json::Value::Object(overlay_map)) => {
            for (key, value) in overlay_map {
                match base_map.get_mut(&key) {
                    Some(slot) => merge_json(slot, value),
                    None => {
                        base_map.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

impl PipelineConfig {
    /// Layers a partial config file over the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, PipelineError> {
        let mut value =
            serde_json::to_value(PipelineConfig::default()).expect("default config serializes");
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| PipelineError::Config(format!("read {}: {}", path.display(), e)))?;
            let overlay: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("parse {}: {}", path.display(), e)))?;
            merge_json(&mut value, overlay);
        }
        serde_json::from_value(value).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Canonical digest of the fully resolved config.
    pub fn hash(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub record_id: String,
    pub stage: String,
    pub error: String,
}

/// Provenance for one stage output. Mock/replay runs carry zero timestamps
/// so reruns reproduce manifests bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub gateway_mode: GatewayMode,
    pub master_seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub failures: Vec<RecordFailure>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn now_unix(mode: GatewayMode) -> u64 {
    if mode == GatewayMode::Live {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    } else {
        0
    }
}

pub struct ManifestBuilder {
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &PipelineConfig, master_seed: u64) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                command: command.to_string(),
                tool_version: TOOL_VERSION.to_string(),
                gateway_mode: config.gateway.mode,
                master_seed,
                config_hash: config.hash(),
                config: serde_json::to_value(config).expect("config serializes"),
                inputs: Vec::new(),
                outputs: Vec::new(),
                failures: Vec::new(),
                started_unix: now_unix(config.gateway.mode),
                finished_unix: 0,
            },
        }
    }

    // Only the file name is recorded, so equal runs into different
    // directories produce byte-identical manifests.
    pub fn input(&mut self, path: &Path) -> Result<(), PipelineError> {
        self.manifest.inputs.push(FileDigest {
            path: file_name_of(path),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), PipelineError> {
        self.manifest.outputs.push(FileDigest {
            path: file_name_of(path),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn failures(&mut self, failures: Vec<RecordFailure>) {
        self.manifest.failures.extend(failures);
    }

    /// Writes `<primary_output>.manifest.json` and returns the manifest.
    pub fn write(mut self, primary_output: &Path) -> Result<RunManifest, PipelineError> {
        self.manifest.finished_unix = now_unix(self.manifest.gateway_mode);
        let path = manifest_path(primary_output);
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, json.as_bytes())?;
        Ok(self.manifest)
    }
}

fn file_name_of(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_default();
    name.push_str(".manifest.json");
    output.with_file_name(name)
}

/// Order-preserving parallel map over records. Results land at their input
/// index, so output order never depends on scheduling.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = (0..items.len()).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let result = f(i, &items[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("slot filled"))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectLine {
    pub record_id: String,
    #[serde(flatten)]
    pub reason: RejectReason,
}

pub struct DegradeOutput {
    pub accepted: Vec<DegradedRecord>,
    pub rejects: Vec<RejectLine>,
    pub failures: Vec<RecordFailure>,
}

/// Degrades every seed record: plan, model removal, quality gate.
pub fn degrade_stage(
    seeds: &[SeedRecord],
    config: &PipelineConfig,
    gateway: &Gateway,
    master_seed: u64,
) -> DegradeOutput {
    enum Outcome {
        Accepted(DegradedRecord),
        Rejected(RejectLine),
        Failed(RecordFailure),
    }
    let outcomes = par_map(seeds, config.workers, |_, seed_record| {
        let record_seed = derive_seed(master_seed, "degrade", &seed_record.record_id);
        let plan = sample_removal_plan(&seed_record.solution, &config.sampler, record_seed);
        match degrade_query(seed_record, &plan, gateway) {
            Err(e) => Outcome::Failed(RecordFailure {
                record_id: seed_record.record_id.clone(),
                stage: "degrade".to_string(),
                error: e.to_string(),
            }),
            Ok(record) => match quality_gate(&record, &config.similarity, gateway) {
                Err(e) => Outcome::Failed(RecordFailure {
                    record_id: seed_record.record_id.clone(),
                    stage: "degrade".to_string(),
                    error: e.to_string(),
                }),
                Ok(GateDecision::Accept) => Outcome::Accepted(record),
                Ok(GateDecision::Reject(reason)) => Outcome::Rejected(RejectLine {
                    record_id: seed_record.record_id.clone(),
                    reason,
                }),
            },
        }
    });
    let mut out = DegradeOutput {
        accepted: Vec::new(),
        rejects: Vec::new(),
        failures: Vec::new(),
    };
    for outcome in outcomes {
        match outcome {
            Outcome::Accepted(r) => out.accepted.push(r),
            Outcome::Rejected(r) => out.rejects.push(r),
            Outcome::Failed(f) => out.failures.push(f),
        }
    }
    out
}

pub struct BuildOutput {
    pub dialogues: Vec<DialogueRecord>,
    pub failures: Vec<RecordFailure>,
}

/// Builds dialogues: decomposition, questions, assembly.
pub fn build_stage(
    records: &[DegradedRecord],
    api_docs: &[ApiDoc],
    tones: &[ToneTemplateSet],
    config: &PipelineConfig,
    gateway: &Gateway,
    master_seed: u64,
) -> BuildOutput {
    let results: Vec<Result<DialogueRecord, crate::dialogue::BuildError>> =
        par_map(records, config.workers, |_, record| {
            let record_seed = derive_seed(master_seed, "build", &record.record_id);
            let steps = decompose_task(record, api_docs, gateway)?;
            let (key_info, _dropped) = generate_questions(record, gateway)?;
            let mut enriched = record.clone();
            enriched.tool_steps = Some(steps);
            enriched.key_info = key_info;
            Ok(assemble_dialogue(&enriched, tones, record_seed))
        });
    let mut out = BuildOutput {
        dialogues: Vec::new(),
        failures: Vec::new(),
    };
    for (record, result) in records.iter().zip(results) {
        match result {
            Ok(dialogue) => out.dialogues.push(dialogue),
            Err(e) => out.failures.push(RecordFailure {
                record_id: record.record_id.clone(),
                stage: "build".to_string(),
                error: e.to_string(),
            }),
        }
    }
    out
}

pub struct AugmentOutput {
    pub dialogues: Vec<DialogueRecord>,
    pub stats: AugmentationStats,
    pub failures: Vec<RecordFailure>,
}

/// Augments dialogues with error-correction pairs. The output keeps every
/// original dialogue, each immediately followed by its augmented copy when
/// one was drawn.
pub fn augment_stage(
    dialogues: &[DialogueRecord],
    config: &PipelineConfig,
    gateway: &Gateway,
    master_seed: u64,
) -> AugmentOutput {
    let results = par_map(dialogues, config.workers, |_, dialogue| {
        let record_seed = derive_seed(master_seed, "augment", &dialogue.record_id);
        augment_dialogue(dialogue, &config.injection, gateway, record_seed)
    });
    let mut out = AugmentOutput {
        dialogues: Vec::new(),
        stats: AugmentationStats::default(),
        failures: Vec::new(),
    };
    for (dialogue, result) in dialogues.iter().zip(results) {
        out.dialogues.push(dialogue.clone());
        match result {
            Ok(Some(augmented)) => {
                let error_type = augmented
                    .injection
                    .as_ref()
                    .expect("augmented dialogues carry their injection")
                    .error_type;
                out.stats.record(error_type);
                out.dialogues.push(augmented);
            }
            Ok(None) => {}
            Err(e) => out.failures.push(RecordFailure {
                record_id: dialogue.record_id.clone(),
                stage: "augment".to_string(),
                error: e.to_string(),
            }),
        }
    }
    out
}

pub struct EmitOutput {
    pub samples: Vec<TrainingSample>,
    pub failures: Vec<RecordFailure>,
}

/// Flattens dialogues into masked training samples.
pub fn emit_stage(dialogues: &[DialogueRecord], config: &PipelineConfig) -> EmitOutput {
    let results = par_map(dialogues, config.workers, |_, d| crate::mask::emit(d));
    let mut out = EmitOutput {
        samples: Vec::new(),
        failures: Vec::new(),
    };
    for (dialogue, result) in dialogues.iter().zip(results) {
        match result {
            Ok(sample) => out.samples.push(sample),
            Err(e) => out.failures.push(RecordFailure {
                record_id: dialogue.record_id.clone(),
                stage: "emit-masks".to_string(),
                error: e.to_string(),
            }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Degrade,
    Build,
    Augment,
    EmitMasks,
}

impl Stage {
    pub const ORDER: [Stage; 4] = [
        Stage::Degrade,
        Stage::Build,
        Stage::Augment,
        Stage::EmitMasks,
    ];

    pub fn parse_list(text: &str) -> Result<Vec<Stage>, PipelineError> {
        let mut stages = Vec::new();
        for part in text.split(',') {
            let stage = match part.trim() {
                "degrade" => Stage::Degrade,
                "build" => Stage::Build,
                "augment" => Stage::Augment,
                "emit-masks" => Stage::EmitMasks,
                other => return Err(PipelineError::Config(format!("unknown stage \"{other}\""))),
            };
            stages.push(stage);
        }
        let positions: Vec<usize> = stages
            .iter()
            .map(|s| Stage::ORDER.iter().position(|o| o == s).unwrap())
            .collect();
        for pair in positions.windows(2) {
            if pair[1] != pair[0] + 1 {
                return Err(PipelineError::Config(
                    "stages must be contiguous in pipeline order".to_string(),
                ));
            }
        }
        if stages.is_empty() {
            return Err(PipelineError::Config("no stages given".to_string()));
        }
        Ok(stages)
    }
}

pub struct PipelineRun {
    pub manifests: Vec<RunManifest>,
    pub failures: Vec<RecordFailure>,
    pub stats: Option<AugmentationStats>,
}

/// Runs a contiguous span of pipeline stages, wiring each output into the
/// next stage's input and writing one manifest per output.
pub fn run_pipeline(
    stages: &[Stage],
    input: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
    gateway: &Gateway,
    master_seed: u64,
) -> Result<PipelineRun, PipelineError> {
    std::fs::create_dir_all(out_dir)?;
    let mut run = PipelineRun {
        manifests: Vec::new(),
        failures: Vec::new(),
        stats: None,
    };

    if !input.exists() {
        return Err(PipelineError::Config(format!(
            "missing input for stage {:?}: {}",
            stages[0],
            input.display()
        )));
    }

    let mut seeds: Option<Vec<SeedRecord>> = None;
    let mut degraded: Option<Vec<DegradedRecord>> = None;
    let mut dialogues: Option<Vec<DialogueRecord>> = None;
    let mut current_input = input.to_path_buf();
    let mut api_docs: Vec<ApiDoc> = Vec::new();

    match stages[0] {
        Stage::Degrade => {
            let records: Vec<SeedRecord> = jsonl::read_path(&current_input)?;
            api_docs = records.iter().flat_map(|r| r.api_docs.clone()).collect();
            seeds = Some(records);
        }
        Stage::Build => degraded = Some(jsonl::read_path(&current_input)?),
        Stage::Augment | Stage::EmitMasks => dialogues = Some(jsonl::read_path(&current_input)?),
    }

    for stage in stages {
        match stage {
            Stage::Degrade => {
                let input_records = seeds.as_ref().expect("seed records loaded");
                let output = degrade_stage(input_records, config, gateway, master_seed);
                let out_path = out_dir.join("degraded.jsonl");
                let rejects_path = out_dir.join("rejects.jsonl");
                jsonl::write_path(&out_path, &output.accepted)?;
                jsonl::write_path(&rejects_path, &output.rejects)?;
                let mut manifest = ManifestBuilder::new("degrade", config, master_seed);
                manifest.input(&current_input)?;
                manifest.output(&out_path)?;
                manifest.output(&rejects_path)?;
                manifest.failures(output.failures.clone());
                run.manifests.push(manifest.write(&out_path)?);
                run.failures.extend(output.failures);
                degraded = Some(output.accepted);
                current_input = out_path;
            }
            Stage::Build => {
                let input_records = degraded.as_ref().expect("degraded records loaded");
                let tones = crate::dialogue::default_tones();
                let output = build_stage(
                    input_records,
                    &api_docs,
                    &tones,
                    config,
                    gateway,
                    master_seed,
                );
                let out_path = out_dir.join("dialogues.jsonl");
                jsonl::write_path(&out_path, &output.dialogues)?;
                let mut manifest = ManifestBuilder::new("build", config, master_seed);
                manifest.input(&current_input)?;
                manifest.output(&out_path)?;
                manifest.failures(output.failures.clone());
                run.manifests.push(manifest.write(&out_path)?);
                run.failures.extend(output.failures);
                dialogues = Some(output.dialogues);
                current_input = out_path;
            }
            Stage::Augment => {
                let input_records = dialogues.as_ref().expect("dialogues loaded");
                let output = augment_stage(input_records, config, gateway, master_seed);
                let out_path = out_dir.join("augmented.jsonl");
                let stats_path = out_dir.join("augment_stats.json");
                jsonl::write_path(&out_path, &output.dialogues)?;
                std::fs::write(
                    &stats_path,
                    serde_json::to_string_pretty(&output.stats).expect("stats serialize"),
                )?;
                let mut manifest = ManifestBuilder::new("augment", config, master_seed);
                manifest.input(&current_input)?;
                manifest.output(&out_path)?;
                manifest.output(&stats_path)?;
                manifest.failures(output.failures.clone());
                run.manifests.push(manifest.write(&out_path)?);
                run.failures.extend(output.failures);
                run.stats = Some(output.stats);
                dialogues = Some(output.dialogues);
                current_input = out_path;
            }
            Stage::EmitMasks => {
                let input_records = dialogues.as_ref().expect("dialogues loaded");
                let output = emit_stage(input_records, config);
                let out_path = out_dir.join("masks.jsonl");
                jsonl::write_path(&out_path, &output.samples)?;
                let mut manifest = ManifestBuilder::new("emit-masks", config, master_seed);
                manifest.input(&current_input)?;
                manifest.output(&out_path)?;
                manifest.failures(output.failures.clone());
                run.manifests.push(manifest.write(&out_path)?);
                run.failures.extend(output.failures);
                current_input = out_path;
            }
        }
    }

    Ok(run)
}

/// Seeded record-level split. A ratio of `train:test` sends
/// `train/(train+test)` of the shuffled records to the training file.
pub fn split_records(
    records: &[serde_json::Value],
    ratio: (usize, usize),
    seed: u64,
) -> (Vec<serde_json::Value>, Vec<serde_json::Value>) {
    let mut shuffled: Vec<serde_json::Value> = records.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let (a, b) = ratio;
    let train_len = shuffled.len() * a / (a + b);
    let test = shuffled.split_off(train_len);
    (shuffled, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_layering_overrides_only_named_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{"workers": 3, "sampler": {"multi_param_count_range": [2, 4]}}"#,
        )
        .unwrap();
        let config = PipelineConfig::load(Some(&path)).unwrap();
        assert_eq!(config.workers, 3);
        assert_eq!(config.sampler.multi_param_count_range, (2, 4));
        // Untouched fields keep their defaults.
        assert_eq!(config.similarity.threshold, 0.85);
        assert_ne!(config.hash(), PipelineConfig::default().hash());
    }

    #[test]
    fn stage_lists_must_be_contiguous() {
        assert!(Stage::parse_list("degrade,build,augment,emit-masks").is_ok());
        assert!(Stage::parse_list("build,augment").is_ok());
        assert!(Stage::parse_list("degrade,augment").is_err());
        assert!(Stage::parse_list("nonsense").is_err());
    }

    #[test]
    fn par_map_preserves_order() {
        let items: Vec<usize> = (0..100).collect();
        let doubled = par_map(&items, 8, |_, &x| x * 2);
        assert_eq!(doubled, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn split_ratio_ten_to_one() {
        let records: Vec<serde_json::Value> = (0..22)
            .map(|i| serde_json::json!({"record_id": i}))
            .collect();
        let (train, test) = split_records(&records, (10, 1), 7);
        assert_eq!(train.len(), 20);
        assert_eq!(test.len(), 2);
        let (train2, test2) = split_records(&records, (10, 1), 7);
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn degrade_stage_routes_gate_rejects_to_the_reject_stream() {
        use crate::model::{SeedRecord, SolutionPath, ToolCall};
        let seeds = vec![SeedRecord {
            record_id: "leaky".to_string(),
            query: "book a Lyft to get home".to_string(),
            solution: SolutionPath::new(vec![ToolCall::new(
                "book_ride",
                vec![("service", "Lyft")],
            )]),
            api_docs: Vec::new(),
        }];
        // Force the single-param stratum and answer with a response that
        // keeps the removed value verbatim in the degraded query.
        let mut config = PipelineConfig::default();
        config.sampler.level_weights = [0.0, 1.0, 0.0, 0.0];
        let mut key_info = crate::model::KeyInfo::from_solution(&seeds[0].solution);
        key_info.spec_mut(0, "service").unwrap().removed = true;
        let request = crate::prompts::degrade_request(&seeds[0].query, &key_info, "mock");
        let response = serde_json::json!({
            "unspecified_query": "book a Lyft ride service to get home",
            "key_info": {"book_ride": {"parameters": {"service": {
                "removed": true, "original": "Lyft", "current": "a ride service"
            }}}}
        })
        .to_string();
        let gateway = Gateway::mock(vec![(request, response)]);
        let output = degrade_stage(&seeds, &config, &gateway, 1);
        assert!(output.accepted.is_empty());
        assert!(output.failures.is_empty());
        assert_eq!(output.rejects.len(), 1);
        assert!(matches!(
            output.rejects[0].reason,
            RejectReason::LeakedValue { .. }
        ));
        assert_eq!(output.rejects[0].record_id, "leaky");
    }

    #[test]
    fn missing_stage_input_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let config = PipelineConfig::default();
        let gateway = Gateway::mock_empty();
        let missing = dir.path().join("does-not-exist.jsonl");
        let result = run_pipeline(
            &[Stage::Augment],
            &missing,
            dir.path(),
            &config,
            &gateway,
            1,
        );
        match result {
            Err(PipelineError::Config(msg)) => assert!(msg.contains("does-not-exist")),
            other => panic!("expected Config error, got {:?}", other.err()),
        }
    }
}
