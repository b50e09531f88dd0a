//! Per-language corpus summary (size, file count, share of bytes) and
//! per-stage drop accounting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::deps::FileEntry;
use crate::language::LanguageId;

pub const UNKNOWN_LANGUAGE: &str = "(unknown)";
const BYTES_PER_GB: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub language: String,
    pub bytes: u64,
    pub files: u64,
    /// Rendered cells. Size and proportion are rounded so that each column
    /// adds up exactly to its total.
    pub size_gb: String,
    pub files_k: String,
    pub proportion: String,
}

/// What one stage consumed, produced and dropped, by reason.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageCounts {
    pub stage: String,
    pub unit: String,
    pub input: u64,
    pub output: u64,
    pub drops: BTreeMap<String, u64>,
}

impl StageCounts {
    pub fn new(stage: &str, unit: &str) -> Self {
        Self { stage: stage.into(), unit: unit.into(), ..Default::default() }
    }

    pub fn drop(&mut self, reason: &str, n: u64) {
        if n > 0 {
            *self.drops.entry(reason.to_string()).or_default() += n;
        }
    }

    pub fn balanced(&self) -> bool {
        self.input == self.output + self.drops.values().sum::<u64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub rows: Vec<LanguageRow>,
    pub total: LanguageRow,
    pub stages: Vec<StageCounts>,
}

/// Rounds `values` to `decimals` places so the rounded values add up to the
/// rounded sum (largest remainder; earlier entries win ties). Returns the
/// rounded values and the rounded total, both in units of `10^-decimals`.
pub fn round_preserving_sum(values: &[f64], decimals: u32) -> (Vec<i64>, i64) {
    let scale = 10f64.powi(decimals as i32);
    let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
    let total = scaled.iter().sum::<f64>().round() as i64;
    let mut out: Vec<i64> = scaled.iter().map(|v| v.floor() as i64).collect();
    let mut short = total - out.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(values.len() * 2) {
        if short <= 0 {
            break;
        }
        out[i] += 1;
        short -= 1;
    }
    (out, total)
}

fn fixed(units: i64, decimals: u32) -> String {
    let scale = 10i64.pow(decimals);
    format!("{}.{:0width$}", units / scale, units % scale, width = decimals as usize)
}

/// One row per language present, in table order; unknown-language files last.
pub fn compute_stats<'a, I>(files: I, stages: Vec<StageCounts>) -> CorpusStats
where
    I: IntoIterator<Item = &'a FileEntry>,
{
    let mut by_lang: BTreeMap<Option<LanguageId>, (u64, u64)> = BTreeMap::new();
    for f in files {
        let e = by_lang.entry(f.language).or_default();
        e.0 += f.byte_size as u64;
        e.1 += 1;
    }
    // None sorts first in a BTreeMap; move it to the end
    let mut groups: Vec<(String, u64, u64)> =
        by_lang.iter().filter(|(k, _)| k.is_some()).map(|(k, &(b, n))| (k.unwrap().name().to_string(), b, n)).collect();
    if let Some(&(b, n)) = by_lang.get(&None) {
        groups.push((UNKNOWN_LANGUAGE.to_string(), b, n));
    }

    let total_bytes: u64 = groups.iter().map(|g| g.1).sum();
    let total_files: u64 = groups.iter().map(|g| g.2).sum();
    let sizes: Vec<f64> = groups.iter().map(|g| g.1 as f64 / BYTES_PER_GB).collect();
    let props: Vec<f64> =
        groups.iter().map(|g| if total_bytes == 0 { 0.0 } else { g.1 as f64 * 100.0 / total_bytes as f64 }).collect();
    let (size_cells, size_total) = round_preserving_sum(&sizes, 2);
    let (prop_cells, _) = round_preserving_sum(&props, 2);
    let prop_total = if total_bytes == 0 { 0 } else { 10_000 };

    let rows = groups
        .into_iter()
        .enumerate()
        .map(|(i, (language, bytes, files))| LanguageRow {
            language,
            bytes,
            files,
            size_gb: fixed(size_cells[i], 2),
            files_k: fixed(files as i64, 3),
            proportion: fixed(prop_cells[i], 2),
        })
        .collect();
    CorpusStats {
        rows,
        total: LanguageRow {
            language: "Total".into(),
            bytes: total_bytes,
            files: total_files,
            size_gb: fixed(size_total, 2),
            files_k: fixed(total_files as i64, 3),
            proportion: fixed(prop_total, 2),
        },
        stages,
    }
}

impl CorpusStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    /// Plain-text table with the columns Language, Size (GB), Files (k) and
    /// Prop. (%), a Total row, and the per-stage accounting below it.
    pub fn render(&self) -> String {
        let header = ["Language", "Size (GB)", "Files (k)", "Prop. (%)"];
        let cells: Vec<[&str; 4]> = self
            .rows
            .iter()
            .chain(std::iter::once(&self.total))
            .map(|r| [r.language.as_str(), &r.size_gb, &r.files_k, &r.proportion])
            .collect();
        let mut w = header.map(str::len);
        for row in &cells {
            for (k, c) in row.iter().enumerate() {
                w[k] = w[k].max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, r: [&str; 4]| {
            let _ = writeln!(
                out,
                "{:<w0$} | {:>w1$} | {:>w2$} | {:>w3$}",
                r[0],
                r[1],
                r[2],
                r[3],
                w0 = w[0],
                w1 = w[1],
                w2 = w[2],
                w3 = w[3]
            );
        };
        line(&mut out, header);
        let _ = writeln!(out, "{}", "-".repeat(w.iter().sum::<usize>() + 9));
        for (i, r) in cells.iter().enumerate() {
            if i + 1 == cells.len() {
                let _ = writeln!(out, "{}", "-".repeat(w.iter().sum::<usize>() + 9));
            }
            line(&mut out, *r);
        }
        if !self.stages.is_empty() {
            out.push('\n');
            for s in &self.stages {
                let _ = write!(out, "{:<14} {:>8} {} in, {:>8} out", s.stage, s.input, s.unit, s.output);
                for (reason, n) in &s.drops {
                    let _ = write!(out, ", {reason}={n}");
                }
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(lang: &str, bytes: usize) -> FileEntry {
        FileEntry { path: "x".into(), language: LanguageId::from_name(lang), byte_size: bytes }
    }

    fn cents(s: &str) -> i64 {
        let (a, b) = s.split_once('.').unwrap();
        a.parse::<i64>().unwrap() * 10i64.pow(b.len() as u32) + b.parse::<i64>().unwrap()
    }

    #[test]
    fn single_language_is_100_percent() {
        let st = compute_stats(&[entry("Python", 10), entry("Python", 5)], vec![]);
        assert_eq!(st.rows.len(), 1);
        assert_eq!(st.rows[0].proportion, "100.00");
        assert_eq!(st.rows[0].files, 2);
        assert_eq!(st.total.files_k, "0.002");
    }

    #[test]
    fn three_to_one_ratio() {
        let st = compute_stats(&[entry("Java", 300), entry("Go", 100)], vec![]);
        let p: Vec<&str> = st.rows.iter().map(|r| r.proportion.as_str()).collect();
        // table order: Go before Java
        assert_eq!(p, vec!["25.00", "75.00"]);
    }

    #[test]
    fn render_has_table_columns_and_total() {
        let st = compute_stats(&[entry("Rust", 2_500_000_000), entry("C", 1_250_000_000)], vec![]);
        let text = st.render();
        let first = text.lines().next().unwrap();
        for col in ["Language", "Size (GB)", "Files (k)", "Prop. (%)"] {
            assert!(first.contains(col));
        }
        let total = text.lines().find(|l| l.starts_with("Total")).unwrap();
        assert!(total.contains("3.75"));
        assert!(total.contains("100.00"));
    }

    #[test]
    fn empty_corpus_is_zero() {
        let st = compute_stats(std::iter::empty(), vec![]);
        assert!(st.rows.is_empty());
        assert_eq!(st.total.proportion, "0.00");
        assert_eq!(st.total.size_gb, "0.00");
    }

    #[test]
    fn unknown_language_row_last() {
        let st = compute_stats(&[entry("nope", 1), entry("Ada", 1)], vec![]);
        assert_eq!(st.rows.last().unwrap().language, UNKNOWN_LANGUAGE);
    }

    proptest! {
        #[test]
        fn columns_sum_to_totals(sizes in proptest::collection::vec((0usize..87, 1usize..5_000_000_000), 1..60)) {
            let files: Vec<FileEntry> = sizes
                .iter()
                .map(|&(l, b)| FileEntry { path: "p".into(), language: Some(LanguageId::all().nth(l).unwrap()), byte_size: b })
                .collect();
            let st = compute_stats(&files, vec![]);
            let p: i64 = st.rows.iter().map(|r| cents(&r.proportion)).sum();
            prop_assert_eq!(p, 10_000);
            let s: i64 = st.rows.iter().map(|r| cents(&r.size_gb)).sum();
            prop_assert_eq!(s, cents(&st.total.size_gb));
            prop_assert_eq!(st.rows.iter().map(|r| r.bytes).sum::<u64>(), st.total.bytes);
            prop_assert_eq!(st.rows.iter().map(|r| r.files).sum::<u64>(), st.total.files);
            let exact: f64 = st.rows.iter().map(|r| r.bytes as f64 * 100.0 / st.total.bytes as f64).sum();
            prop_assert!((exact - 100.0).abs() <= 0.05);
        }
    }
}
