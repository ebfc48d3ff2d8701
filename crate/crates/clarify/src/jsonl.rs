//! JSONL read/write helpers. One JSON object per line, UTF-8, LF newlines.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// A line that failed to parse, kept for the corrupt-line ledger.
#[derive(Debug, Clone)]
pub struct CorruptLine {
    pub line_number: usize,
    pub error: String,
}

/// Reads every line, failing on the first malformed one.
pub fn read_path<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let file =
        std::fs::File::open(path).map_err(|e| anyhow::anyhow!("open {}: {}", path.display(), e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| anyhow::anyhow!("{}:{}: {}", path.display(), idx + 1, e))?;
        out.push(item);
    }
    Ok(out)
}

/// Reads every parseable line, collecting malformed ones instead of failing.
pub fn read_path_lenient<T: DeserializeOwned>(
    path: &Path,
) -> anyhow::Result<(Vec<T>, Vec<CorruptLine>)> {
    let file =
        std::fs::File::open(path).map_err(|e| anyhow::anyhow!("open {}: {}", path.display(), e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut corrupt = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(item) => out.push(item),
            Err(e) => corrupt.push(CorruptLine {
                line_number: idx + 1,
                error: e.to_string(),
            }),
        }
    }
    Ok((out, corrupt))
}

/// Writes items in order, one compact JSON object per line.
pub fn write_path<T: Serialize>(path: &Path, items: &[T]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::fs::File::create(path)
        .map_err(|e| anyhow::anyhow!("create {}: {}", path.display(), e))?;
    let mut writer = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lenient_read_ledgers_corrupt_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.jsonl");
        std::fs::write(&path, "{\"a\":1}\nnot json\n{\"a\":2}\n").unwrap();
        let (items, corrupt) = read_path_lenient::<serde_json::Value>(&path).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(corrupt.len(), 1);
        assert_eq!(corrupt[0].line_number, 2);
    }
}
