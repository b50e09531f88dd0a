//! Pipeline configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterThresholds;
use crate::sample::{FimMode, SentinelSet, TailPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directories whose subdirectories are repositories, and/or JSONL files
    /// with one `{repo_id, path, content}` object per line.
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    /// Worker threads. Never affects output bytes.
    pub workers: usize,
    pub seed: u64,
    /// Records per intermediate and output shard.
    pub shard_size: usize,
    pub stages: StageToggles,
    pub languages: LanguageConfig,
    pub filter: FilterThresholds,
    pub dedup: DedupConfig,
    pub decontamination: DecontamConfig,
    pub build: BuildConfig,
    pub reports: ReportConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub filter: bool,
    pub order: bool,
    pub dedup: bool,
    pub decontaminate: bool,
    pub fim: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self { filter: true, order: true, dedup: true, decontaminate: true, fim: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanguageConfig {
    /// Replacement extension table; the bundled one is used when unset.
    pub extension_map: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    pub num_perm: usize,
    pub shingle_width: usize,
    pub threshold: f64,
    pub bands: usize,
    pub rows: usize,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self { num_perm: 128, shingle_width: 5, threshold: 0.85, bands: 16, rows: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecontamConfig {
    /// JSONL files of `{text, benchmark}` objects.
    pub test_sets: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Jsonl,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub entry_len: usize,
    pub tail: TailPolicy,
    pub fim_rate: f64,
    pub fim_mode: FimMode,
    pub format: OutputFormat,
    pub sentinels: SentinelSet,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            entry_len: 4096,
            tail: TailPolicy::Drop,
            fim_rate: 0.5,
            fim_mode: FimMode::Psm,
            format: OutputFormat::Jsonl,
            sentinels: SentinelSet::default(),
        }
    }
}

/// Optional copies of the audit reports. Each stage keeps its own copy under
/// `stages/`; these paths only say where else to put them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// JSONL, one line per duplicate cluster.
    pub dedup: Option<PathBuf>,
    /// JSONL, one line per flagged repository.
    pub contamination: Option<PathBuf>,
    /// Directory receiving one `<repo_id>.tsv` edge list per repository.
    pub graphs: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            output_dir: PathBuf::from("out"),
            workers: 1,
            seed: 0,
            shard_size: 1000,
            stages: StageToggles::default(),
            languages: LanguageConfig::default(),
            filter: FilterThresholds::default(),
            dedup: DedupConfig::default(),
            decontamination: DecontamConfig::default(),
            build: BuildConfig::default(),
            reports: ReportConfig::default(),
        }
    }
}

/// The commented default configuration printed by `--print-default-config`.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../data/default_config.toml");

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses `path`; relative paths inside are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
        self.decontamination.test_sets.iter_mut().for_each(fix);
        for p in [
            &mut self.languages.extension_map,
            &mut self.reports.dedup,
            &mut self.reports.contamination,
            &mut self.reports.graphs,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Every violation, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        for p in &self.inputs {
            if !p.exists() {
                v.push(format!("input {} does not exist", p.display()));
            }
        }
        for p in &self.decontamination.test_sets {
            if !p.is_file() {
                v.push(format!("test set {} does not exist", p.display()));
            }
        }
        if let Some(p) = &self.languages.extension_map {
            if !p.is_file() {
                v.push(format!("extension map {} does not exist", p.display()));
            }
        }
        if self.workers == 0 {
            v.push("workers must be at least 1".into());
        }
        if self.shard_size == 0 {
            v.push("shard_size must be at least 1".into());
        }
        let f = &self.filter;
        if !(0.0..=1.0).contains(&f.min_alphabetic_fraction) {
            v.push("filter.min_alphabetic_fraction must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&f.html_min_visible_ratio) {
            v.push("filter.html_min_visible_ratio must be in [0, 1]".into());
        }
        if f.data_min_chars > f.data_max_chars {
            v.push("filter.data_min_chars exceeds filter.data_max_chars".into());
        }
        let d = &self.dedup;
        if d.num_perm < 16 {
            v.push(format!("dedup.num_perm must be at least 16, got {}", d.num_perm));
        }
        if d.shingle_width == 0 {
            v.push("dedup.shingle_width must be at least 1".into());
        }
        if !(d.threshold > 0.0 && d.threshold < 1.0) {
            v.push(format!("dedup.threshold must be in (0, 1), got {}", d.threshold));
        }
        if d.bands == 0 || d.rows == 0 || d.bands * d.rows > d.num_perm {
            v.push(format!(
                "dedup.bands x dedup.rows ({} x {}) must be positive and fit in num_perm {}",
                d.bands, d.rows, d.num_perm
            ));
        }
        let b = &self.build;
        if b.entry_len < 2 {
            v.push(format!("build.entry_len must be at least 2, got {}", b.entry_len));
        }
        if !(0.0..=1.0).contains(&b.fim_rate) {
            v.push(format!("build.fim_rate must be in [0, 1], got {}", b.fim_rate));
        }
        v.extend(b.sentinels.problems().into_iter().map(|p| format!("build.sentinels: {p}")));
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}
