//! Benchmark decontamination by token n-gram matching.
//!
//! Test strings of ten or more whitespace tokens contribute every 10-token
//! window; strings of three to nine tokens must appear whole, as a
//! contiguous token run. A sample matching either is excluded entirely.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::deps::RepoSample;

pub const NGRAM: usize = 10;
pub const MIN_EXACT_TOKENS: usize = 3;

/// Whitespace-collapsed tokens. Case is preserved.
pub fn normalize_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestString {
    pub text: String,
    pub benchmark: String,
}

#[derive(Debug, Clone, Default)]
pub struct ContaminationIndex {
    /// Space-joined 10-token windows and the benchmarks they came from.
    ten_grams: HashMap<String, BTreeSet<String>>,
    /// Space-joined 3..=9-token strings and their benchmarks.
    exact: HashMap<String, BTreeSet<String>>,
    /// Distinct token lengths present in `exact`.
    exact_lengths: BTreeSet<usize>,
    ignored: usize,
}

impl ContaminationIndex {
    pub fn ten_gram_count(&self) -> usize {
        self.ten_grams.len()
    }

    pub fn exact_count(&self) -> usize {
        self.exact.len()
    }

    /// Test strings shorter than three tokens.
    pub fn ignored_count(&self) -> usize {
        self.ignored
    }

    pub fn is_empty(&self) -> bool {
        self.ten_grams.is_empty() && self.exact.is_empty()
    }

    pub fn insert(&mut self, text: &str, benchmark: &str) {
        let toks = normalize_tokens(text);
        if toks.len() >= NGRAM {
            for w in toks.windows(NGRAM) {
                self.ten_grams.entry(w.join(" ")).or_default().insert(benchmark.to_string());
            }
        } else if toks.len() >= MIN_EXACT_TOKENS {
            self.exact.entry(toks.join(" ")).or_default().insert(benchmark.to_string());
            self.exact_lengths.insert(toks.len());
        } else {
            self.ignored += 1;
        }
    }

    pub fn ten_grams(&self) -> impl Iterator<Item = &str> {
        self.ten_grams.keys().map(String::as_str)
    }

    pub fn exact_strings(&self) -> impl Iterator<Item = &str> {
        self.exact.keys().map(String::as_str)
    }
}

pub fn build_contamination_index<'a, I>(test_strings: I) -> ContaminationIndex
where
    I: IntoIterator<Item = &'a TestString>,
{
    let mut idx = ContaminationIndex::default();
    for t in test_strings {
        idx.insert(&t.text, &t.benchmark);
    }
    idx
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContaminationReport {
    pub repo_id: String,
    pub hit: bool,
    /// Matched index entries, sorted, at most [`MAX_REPORTED_MATCHES`].
    pub matched: Vec<String>,
    pub benchmarks: Vec<String>,
}

pub const MAX_REPORTED_MATCHES: usize = 16;

pub fn scan_text(text: &str, index: &ContaminationIndex) -> (BTreeSet<String>, BTreeSet<String>) {
    let toks = normalize_tokens(text);
    let mut matched = BTreeSet::new();
    let mut benchmarks = BTreeSet::new();
    let mut check = |table: &HashMap<String, BTreeSet<String>>, n: usize| {
        if toks.len() < n {
            return;
        }
        let mut key = String::new();
        for w in toks.windows(n) {
            key.clear();
            for (i, t) in w.iter().enumerate() {
                if i > 0 {
                    key.push(' ');
                }
                key.push_str(t);
            }
            if let Some(b) = table.get(key.as_str()) {
                matched.insert(key.clone());
                benchmarks.extend(b.iter().cloned());
            }
        }
    };
    if !index.ten_grams.is_empty() {
        check(&index.ten_grams, NGRAM);
    }
    for &n in &index.exact_lengths {
        check(&index.exact, n);
    }
    (matched, benchmarks)
}

pub fn is_contaminated(sample: &RepoSample, index: &ContaminationIndex) -> ContaminationReport {
    let (matched, benchmarks) = scan_text(&sample.text, index);
    ContaminationReport {
        repo_id: sample.repo_id.clone(),
        hit: !matched.is_empty(),
        matched: matched.into_iter().take(MAX_REPORTED_MATCHES).collect(),
        benchmarks: benchmarks.into_iter().collect(),
    }
}
