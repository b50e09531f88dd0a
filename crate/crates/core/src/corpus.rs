//! Per-file input records and the line/character statistics the filters test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::language::{ExtensionMap, LanguageId};

/// One file of one repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub repo_id: String,
    pub path: String,
    pub language: Option<LanguageId>,
    pub content: String,
    pub byte_size: usize,
}

impl SourceFile {
    pub fn new(
        repo_id: impl Into<String>,
        path: impl Into<String>,
        language: Option<LanguageId>,
        content: impl Into<String>,
    ) -> Result<Self> {
        let path = path.into();
        if path.is_empty() {
            return Err(Error::InvalidInput("source file with empty path".into()));
        }
        let content = content.into();
        Ok(Self { repo_id: repo_id.into(), byte_size: content.len(), path, language, content })
    }

    /// Builds a file whose language is detected from its path.
    pub fn detect(
        repo_id: impl Into<String>,
        path: impl Into<String>,
        content: impl Into<String>,
        map: &ExtensionMap,
    ) -> Result<Self> {
        let path = path.into();
        let language = if path.is_empty() { None } else { map.detect(&path) };
        Self::new(repo_id, path, language, content)
    }

    /// Decodes raw bytes as UTF-8. `Err` carries the undecodable path.
    pub fn from_bytes(repo_id: &str, path: &str, bytes: Vec<u8>, map: &ExtensionMap) -> Result<Self, UndecodableFile> {
        match String::from_utf8(bytes) {
            Ok(content) => Self::detect(repo_id, path, content, map)
                .map_err(|_| UndecodableFile { repo_id: repo_id.to_string(), path: path.to_string() }),
            Err(_) => Err(UndecodableFile { repo_id: repo_id.to_string(), path: path.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndecodableFile {
    pub repo_id: String,
    pub path: String,
}

/// Line-length and alphabetic statistics. Lengths are in characters, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FileStats {
    pub avg_line_len: f64,
    pub max_line_len: usize,
    pub alphabetic_fraction: f64,
    pub char_count: usize,
    pub line_count: usize,
}

/// Lines are split on `\n` (a trailing newline does not start an extra line)
/// and the newline itself is not counted. The alphabetic fraction is taken
/// over every character, newlines and other whitespace included.
pub fn compute_file_stats(content: &str) -> FileStats {
    if content.is_empty() {
        return FileStats::default();
    }
    let mut char_count = 0usize;
    let mut alphabetic = 0usize;
    for c in content.chars() {
        char_count += 1;
        if c.is_alphabetic() {
            alphabetic += 1;
        }
    }

    let mut line_count = 0usize;
    let mut total_line_len = 0usize;
    let mut max_line_len = 0usize;
    for line in content.split_terminator('\n') {
        let len = line.chars().count();
        line_count += 1;
        total_line_len += len;
        max_line_len = max_line_len.max(len);
    }

    FileStats {
        avg_line_len: if line_count == 0 { 0.0 } else { total_line_len as f64 / line_count as f64 },
        max_line_len,
        alphabetic_fraction: alphabetic as f64 / char_count as f64,
        char_count,
        line_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_short_lines() {
        let s = compute_file_stats("ab\ncd");
        assert_eq!(s.avg_line_len, 2.0);
        assert_eq!(s.max_line_len, 2);
        assert_eq!(s.alphabetic_fraction, 0.8);
        assert_eq!(s.char_count, 5);
    }

    #[test]
    fn empty_is_all_zero() {
        assert_eq!(compute_file_stats(""), FileStats::default());
    }

    #[test]
    fn mixed_line_lengths() {
        let text = format!("{}\n{}\n{}", "a".repeat(10), "b".repeat(20), "c".repeat(1200));
        let s = compute_file_stats(&text);
        assert_eq!(s.max_line_len, 1200);
        assert_eq!(s.avg_line_len, 410.0);
        assert_eq!(s.line_count, 3);
        // a trailing newline must not add an empty fourth line
        let s2 = compute_file_stats(&format!("{text}\n"));
        assert_eq!(s2.avg_line_len, 410.0);
    }

    #[test]
    fn lengths_are_in_characters() {
        let s = compute_file_stats("变量名");
        assert_eq!(s.max_line_len, 3);
        assert_eq!(s.char_count, 3);
        assert_eq!(s.alphabetic_fraction, 1.0);
    }

    #[test]
    fn byte_size_matches_content() {
        let f = SourceFile::new("r", "a.py", None, "é").unwrap();
        assert_eq!(f.byte_size, 2);
        assert!(SourceFile::new("r", "", None, "x").is_err());
    }

    #[test]
    fn invalid_utf8_is_reported() {
        let map = ExtensionMap::default();
        let err = SourceFile::from_bytes("r", "a.py", vec![0xff, 0xfe], &map).unwrap_err();
        assert_eq!(err.path, "a.py");
    }

    proptest! {
        #[test]
        fn fraction_in_unit_interval(s in ".{0,200}") {
            let st = compute_file_stats(&s);
            prop_assert!((0.0..=1.0).contains(&st.alphabetic_fraction));
            if st.line_count >= 1 {
                prop_assert!(st.max_line_len as f64 >= st.avg_line_len);
            }
            if st.line_count == 1 {
                prop_assert!(st.char_count >= st.max_line_len);
            }
        }

        #[test]
        fn fraction_invariant_under_repetition(s in "[a-z0-9 ]{1,50}\n", k in 1usize..6) {
            let one = compute_file_stats(&s).alphabetic_fraction;
            let many = compute_file_stats(&s.repeat(k)).alphabetic_fraction;
            prop_assert!((one - many).abs() < 1e-12);
        }
    }
}
