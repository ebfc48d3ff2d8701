//! Corpus statistics: complexity-level and error-type counts over JSONL
//! dataset files, with a corrupt-line ledger instead of hard failures.

use crate::jsonl;
use crate::model::{ComplexityLevel, ErrorType};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub complexity: BTreeMap<String, usize>,
    pub errors: BTreeMap<String, usize>,
    pub corrupt_lines: usize,
}

fn level_of(line: &serde_json::Value) -> Option<ComplexityLevel> {
    let direct = line.get("complexity_level");
    let nested = line.get("source").and_then(|s| s.get("complexity_level"));
    serde_json::from_value(direct.or(nested)?.clone()).ok()
}

fn error_of(line: &serde_json::Value) -> Option<ErrorType> {
    let inj = line.get("injection")?;
    serde_json::from_value(inj.get("error_type")?.clone()).ok()
}

/// Counts records per complexity level and per injected error type.
pub fn dataset_stats(path: &Path) -> anyhow::Result<DatasetStats> {
    let (lines, corrupt) = jsonl::read_path_lenient::<serde_json::Value>(path)?;
    let mut stats = DatasetStats {
        corrupt_lines: corrupt.len(),
        ..DatasetStats::default()
    };
    for level in ComplexityLevel::ALL {
        stats.complexity.insert(level.label().to_string(), 0);
    }
    for error in ErrorType::ALL {
        stats.errors.insert(error.label().to_string(), 0);
    }
    for line in &lines {
        stats.total += 1;
        if let Some(level) = level_of(line) {
            *stats.complexity.get_mut(level.label()).unwrap() += 1;
        }
        if let Some(error) = error_of(line) {
            *stats.errors.get_mut(error.label()).unwrap() += 1;
        }
    }
    Ok(stats)
}

impl DatasetStats {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("records: {}\n", self.total));
        out.push_str("complexity levels:\n");
        for (label, count) in &self.complexity {
            out.push_str(&format!("  {:<24} {}\n", label, count));
        }
        let error_total: usize = self.errors.values().sum();
        if error_total > 0 {
            out.push_str("injected error types:\n");
            for (label, count) in &self.errors {
                out.push_str(&format!("  {:<40} {}\n", label, count));
            }
            out.push_str(&format!("  {:<40} {}\n", "Total", error_total));
        }
        if self.corrupt_lines > 0 {
            out.push_str(&format!("corrupt lines skipped: {}\n", self.corrupt_lines));
        }
        out
    }
}
