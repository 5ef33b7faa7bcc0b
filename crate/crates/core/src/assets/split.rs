//! Train/test split files: one decimal frame index per line.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::AssetError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitFile {
    pub indices: Vec<u64>,
}

impl SplitFile {
    pub fn contains(&self, index: u64) -> bool {
        self.indices.contains(&index)
    }
}

/// Parses split file text; blank lines are ignored, order is preserved.
pub fn parse_split(text: &str, path: &Path) -> Result<SplitFile, AssetError> {
    let mut seen = HashSet::new();
    let mut indices = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let idx: u64 = t.parse().map_err(|_| AssetError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("expected a non-negative integer, got '{t}'"),
        })?;
        if !seen.insert(idx) {
            return Err(AssetError::DuplicateIndex { index: idx, line: i + 1 });
        }
        indices.push(idx);
    }
    Ok(SplitFile { indices })
}

pub fn load_split(path: &Path) -> Result<SplitFile, AssetError> {
    let text = fs::read_to_string(path).map_err(|e| AssetError::io(path, e))?;
    parse_split(&text, path)
}

pub fn save_split(split: &SplitFile, path: &Path) -> Result<(), AssetError> {
    let text: String = split.indices.iter().map(|i| format!("{i}\n")).collect();
    fs::write(path, text).map_err(|e| AssetError::io(path, e))
}
