//! Command-line front door for the clarification dataset pipeline and the
//! evaluation harness.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use clarify::dialogue::ToneTemplateSet;
use clarify::eval::{
    aggregate, build_scenario, default_personas, run_session, score_session, Assistant,
    HttpAssistant, Level, MetricsBlock, MetricsReport, OracleAssistant, Persona, ScriptedPolicy,
    SessionTally, SessionTranscript,
};
use clarify::gateway::{Gateway, GatewayMode};
use clarify::jsonl;
use clarify::model::{ApiDoc, DegradedRecord, DialogueRecord, SeedRecord};
use clarify::pipeline::{
    augment_stage, build_stage, degrade_stage, emit_stage, run_pipeline, ManifestBuilder,
    PipelineConfig, Stage,
};
use clarify::seed::derive_seed;
use clarify::stats::dataset_stats;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "clarify",
    version,
    about = "Intent clarification dataset pipeline and evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Master seed; all per-record randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Layered JSON config file (defaults <- file <- flags).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Gateway mode override: live, mock or replay.
    #[arg(long)]
    mode: Option<String>,
    /// Mock fixture table override.
    #[arg(long)]
    mock_table: Option<PathBuf>,
    /// Worker-thread bound for record-parallel stages.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Degrade fully-specified records into unspecified queries.
    Degrade {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rejects: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Build clarification dialogues from degraded records.
    Build {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tone template bank (JSONL); built-in bank when omitted.
        #[arg(long)]
        tones: Option<PathBuf>,
        /// API documentation pool (JSON array).
        #[arg(long)]
        api_docs: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Inject error-correction pairs into dialogues.
    Augment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Injection policy JSON; config default when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Where to write the per-type injection counts.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Flatten dialogues into loss-masked training samples.
    EmitMasks {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Seeded record-level train/test split.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Ratio as train:test, e.g. 10:1.
        #[arg(long, default_value = "10:1")]
        ratio: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run contiguous pipeline stages end to end.
    Pipeline {
        /// Comma-separated stages: degrade,build,augment,emit-masks.
        #[arg(long)]
        stages: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Drive a candidate assistant over a dataset and write tallies.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        /// Evaluation level: 1, 2 or 3.
        #[arg(long)]
        level: u8,
        /// Candidate: "oracle", "script:<file>" or "http:<url>".
        #[arg(long)]
        assistant: String,
        #[arg(long)]
        out: PathBuf,
        /// Optional transcript JSONL output.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        /// Persona bank (JSONL); built-in bank when omitted.
        #[arg(long)]
        personas: Option<PathBuf>,
        /// Distractor API pool (JSON array), required at level 2.
        #[arg(long)]
        distractors: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Aggregate tallies into the seven-metric report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output format: table or json.
        #[arg(long, default_value = "table")]
        format: String,
    },
    /// Complexity-level and error-type counts over a dataset file.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Check every structural invariant of a dialogue file.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Verify the fixture bundle against its goldens (or regenerate it).
    Verify {
        #[arg(long, default_value = "crates/clarify/fixtures")]
        bundle: PathBuf,
        /// Rewrite the bundle from the current pipeline instead of
        /// checking it.
        #[arg(long)]
        regenerate: bool,
        /// Working directory for verification outputs.
        #[arg(long)]
        work: Option<PathBuf>,
    },
}

fn load_config(common: &CommonOpts) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::load(common.config.as_deref())?;
    if let Some(mode) = &common.mode {
        config.gateway.mode = match mode.as_str() {
            "live" => GatewayMode::Live,
            "mock" => GatewayMode::Mock,
            "replay" => GatewayMode::Replay,
            other => bail!("unknown gateway mode \"{other}\""),
        };
    }
    if let Some(path) = &common.mock_table {
        config.gateway.mock_table_path = Some(path.clone());
    }
    if let Some(workers) = common.workers {
        config.workers = workers;
    }
    Ok(config)
}

fn gateway_for(config: &PipelineConfig) -> Result<Gateway> {
    Ok(Gateway::new(config.gateway.clone())?)
}

fn load_tones(path: Option<&Path>) -> Result<Vec<ToneTemplateSet>> {
    match path {
        Some(path) => Ok(jsonl::read_path(path)?),
        None => Ok(clarify::dialogue::default_tones()),
    }
}

fn load_api_docs(path: Option<&Path>) -> Result<Vec<ApiDoc>> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Ok(serde_json::from_str(&text)?)
        }
        None => Ok(Vec::new()),
    }
}

fn load_personas(path: Option<&Path>) -> Result<Vec<Persona>> {
    match path {
        Some(path) => Ok(jsonl::read_path(path)?),
        None => Ok(default_personas()),
    }
}

/// Accepts both degraded-record and dialogue-record files.
fn load_eval_records(path: &Path) -> Result<Vec<DegradedRecord>> {
    let lines: Vec<serde_json::Value> = jsonl::read_path(path)?;
    let mut records = Vec::with_capacity(lines.len());
    for line in lines {
        if line.get("turns").is_some() {
            let dialogue: DialogueRecord = serde_json::from_value(line)?;
            records.push(dialogue.source);
        } else {
            records.push(serde_json::from_value(line)?);
        }
    }
    Ok(records)
}

fn print_failures(failures: &[clarify::pipeline::RecordFailure]) {
    for failure in failures {
        eprintln!(
            "[{}] record {} failed: {}",
            failure.stage, failure.record_id, failure.error
        );
    }
}

fn render_block(label: &str, block: &MetricsBlock) -> String {
    format!(
        "{:<9} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>9}",
        label,
        block.icr * 100.0,
        block.ce * 100.0,
        block.cps * 100.0,
        block.ir,
        block.scr * 100.0,
        block.tss * 100.0,
        block.prs * 100.0,
        block.sessions
    )
}

fn render_report(report: &MetricsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<9} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>9}\n",
        "level", "ICR", "CE", "CPS", "IR", "SCR", "TSS", "PRS", "sessions"
    ));
    for (level, block) in &report.per_level {
        out.push_str(&render_block(&format!("Level {level}"), block));
        out.push('\n');
    }
    out.push_str(&render_block("overall", &report.overall));
    out.push('\n');
    out
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Degrade {
            input,
            out,
            rejects,
            common,
        } => {
            let config = load_config(&common)?;
            let gateway = gateway_for(&config)?;
            let seeds: Vec<SeedRecord> = jsonl::read_path(&input)?;
            let output = degrade_stage(&seeds, &config, &gateway, common.seed);
            jsonl::write_path(&out, &output.accepted)?;
            jsonl::write_path(&rejects, &output.rejects)?;
            let mut manifest = ManifestBuilder::new("degrade", &config, common.seed);
            manifest.input(&input)?;
            manifest.output(&out)?;
            manifest.output(&rejects)?;
            manifest.failures(output.failures.clone());
            manifest.write(&out)?;
            println!(
                "degraded {} records ({} rejected, {} failed) -> {}",
                output.accepted.len(),
                output.rejects.len(),
                output.failures.len(),
                out.display()
            );
            print_failures(&output.failures);
            Ok(exit_for(&output.failures))
        }
        Command::Build {
            input,
            out,
            tones,
            api_docs,
            common,
        } => {
            let config = load_config(&common)?;
            let gateway = gateway_for(&config)?;
            let records: Vec<DegradedRecord> = jsonl::read_path(&input)?;
            let tones = load_tones(tones.as_deref())?;
            let docs = load_api_docs(api_docs.as_deref())?;
            let output = build_stage(&records, &docs, &tones, &config, &gateway, common.seed);
            jsonl::write_path(&out, &output.dialogues)?;
            let mut manifest = ManifestBuilder::new("build", &config, common.seed);
            manifest.input(&input)?;
            manifest.output(&out)?;
            manifest.failures(output.failures.clone());
            manifest.write(&out)?;
            println!(
                "built {} dialogues ({} failed) -> {}",
                output.dialogues.len(),
                output.failures.len(),
                out.display()
            );
            print_failures(&output.failures);
            Ok(exit_for(&output.failures))
        }
        Command::Augment {
            input,
            out,
            policy,
            stats,
            common,
        } => {
            let mut config = load_config(&common)?;
            if let Some(path) = policy {
                let text = std::fs::read_to_string(&path)?;
                config.injection = serde_json::from_str(&text)
                    .with_context(|| format!("parse policy {}", path.display()))?;
            }
            let gateway = gateway_for(&config)?;
            let dialogues: Vec<DialogueRecord> = jsonl::read_path(&input)?;
            let output = augment_stage(&dialogues, &config, &gateway, common.seed);
            jsonl::write_path(&out, &output.dialogues)?;
            if let Some(stats_path) = &stats {
                std::fs::write(stats_path, serde_json::to_string_pretty(&output.stats)?)?;
            }
            let mut manifest = ManifestBuilder::new("augment", &config, common.seed);
            manifest.input(&input)?;
            manifest.output(&out)?;
            manifest.failures(output.failures.clone());
            manifest.write(&out)?;
            println!(
                "augmented {} of {} dialogues -> {}",
                output.stats.total,
                dialogues.len(),
                out.display()
            );
            print_failures(&output.failures);
            Ok(exit_for(&output.failures))
        }
        Command::EmitMasks { input, out, common } => {
            let config = load_config(&common)?;
            let dialogues: Vec<DialogueRecord> = jsonl::read_path(&input)?;
            let output = emit_stage(&dialogues, &config);
            clarify::mask::export(&output.samples, &out)?;
            let mut manifest = ManifestBuilder::new("emit-masks", &config, common.seed);
            manifest.input(&input)?;
            manifest.output(&out)?;
            manifest.failures(output.failures.clone());
            manifest.write(&out)?;
            println!(
                "emitted {} samples ({} failed) -> {}",
                output.samples.len(),
                output.failures.len(),
                out.display()
            );
            print_failures(&output.failures);
            Ok(exit_for(&output.failures))
        }
        Command::Split {
            input,
            train,
            test,
            ratio,
            common,
        } => {
            let (a, b) = ratio
                .split_once(':')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .context("ratio must look like 10:1")?;
            let records: Vec<serde_json::Value> = jsonl::read_path(&input)?;
            let (train_records, test_records) =
                clarify::pipeline::split_records(&records, (a, b), common.seed);
            jsonl::write_path(&train, &train_records)?;
            jsonl::write_path(&test, &test_records)?;
            println!(
                "split {} records into {} train / {} test",
                records.len(),
                train_records.len(),
                test_records.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Pipeline {
            stages,
            input,
            out_dir,
            common,
        } => {
            let config = load_config(&common)?;
            let gateway = gateway_for(&config)?;
            let stages = Stage::parse_list(&stages)?;
            let run = run_pipeline(&stages, &input, &out_dir, &config, &gateway, common.seed)?;
            for manifest in &run.manifests {
                println!(
                    "stage {} -> {} outputs, {} failures",
                    manifest.command,
                    manifest.outputs.len(),
                    manifest.failures.len()
                );
            }
            print_failures(&run.failures);
            Ok(exit_for(&run.failures))
        }
        Command::Evaluate {
            dataset,
            level,
            assistant,
            out,
            transcripts,
            personas,
            distractors,
            common,
        } => {
            let config = load_config(&common)?;
            let gateway = gateway_for(&config)?;
            let level = Level::from_number(level).context("level must be 1, 2 or 3")?;
            let records = load_eval_records(&dataset)?;
            let personas = load_personas(personas.as_deref())?;
            let distractor_pool = load_api_docs(distractors.as_deref())?;

            let mut tallies: Vec<SessionTally> = Vec::new();
            let mut transcript_rows: Vec<SessionTranscript> = Vec::new();
            for record in &records {
                let scenario_seed = derive_seed(common.seed, "eval", &record.record_id);
                let scenario = build_scenario(
                    record,
                    level,
                    &personas,
                    &distractor_pool,
                    &config.eval,
                    &gateway,
                    scenario_seed,
                )?;
                let mut candidate: Box<dyn Assistant> = match assistant.as_str() {
                    "oracle" => Box::new(OracleAssistant::new(&scenario)),
                    other => {
                        if let Some(path) = other.strip_prefix("script:") {
                            let text = std::fs::read_to_string(path)?;
                            let policy: ScriptedPolicy = serde_json::from_str(&text)?;
                            policy.instantiate(&scenario)
                        } else if let Some(url) = other.strip_prefix("http:") {
                            Box::new(HttpAssistant::new(
                                url,
                                &config.gateway.api_key_source,
                                &config.gateway.model_tag,
                            )?)
                        } else {
                            bail!("unknown assistant mode \"{other}\"");
                        }
                    }
                };
                let transcript = run_session(candidate.as_mut(), &scenario, &gateway, &config.eval);
                tallies.push(score_session(&transcript, record, &config.eval));
                if transcripts.is_some() {
                    transcript_rows.push(transcript);
                }
            }
            jsonl::write_path(&out, &tallies)?;
            if let Some(path) = transcripts {
                jsonl::write_path(&path, &transcript_rows)?;
            }
            println!("evaluated {} sessions -> {}", tallies.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input, format } => {
            let tallies: Vec<SessionTally> = jsonl::read_path(&input)?;
            let report = aggregate(&tallies)?;
            match format.as_str() {
                "json" => println!("{}", serde_json::to_string_pretty(&report)?),
                "table" => print!("{}", render_report(&report)),
                other => bail!("unknown format \"{other}\""),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats { input } => {
            let stats = dataset_stats(&input)?;
            print!("{}", stats.render_table());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { input } => {
            let dialogues: Vec<DialogueRecord> = jsonl::read_path(&input)?;
            let mut violations = 0usize;
            for dialogue in &dialogues {
                for violation in clarify::model::validate_record(dialogue) {
                    eprintln!("{violation}");
                    violations += 1;
                }
            }
            println!(
                "validated {} records: {} violations",
                dialogues.len(),
                violations
            );
            Ok(if violations == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Verify {
            bundle,
            regenerate,
            work,
        } => {
            if regenerate {
                clarify::fixtures::regenerate_bundle(&bundle)?;
                println!("bundle regenerated at {}", bundle.display());
                return Ok(ExitCode::SUCCESS);
            }
            let work_dir = match work {
                Some(dir) => dir,
                None => {
                    let dir =
                        std::env::temp_dir().join(format!("clarify-verify-{}", std::process::id()));
                    std::fs::create_dir_all(&dir)?;
                    dir
                }
            };
            let report = clarify::fixtures::verify_bundle(&bundle, &work_dir)?;
            for diff in &report.diffs {
                eprintln!("{diff}");
            }
            println!(
                "bundle {}: {}",
                bundle.display(),
                if report.pass { "pass" } else { "FAIL" }
            );
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn exit_for(failures: &[clarify::pipeline::RecordFailure]) -> ExitCode {
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
