//! Runs the stages in order with a checkpoint after each one.
//!
//! Layout of the output directory:
//!
//! ```text
//! run.json                       completed stages, failure if any
//! stages/1-filter/               shard-NNNNN.jsonl of RepoFiles + manifest.json
//! stages/2-order/                shard-NNNNN.jsonl of RepoSample, graphs.jsonl
//! stages/3-dedup/                shard-NNNNN.jsonl of RepoSample, clusters.jsonl
//! stages/4-decontaminate/        shard-NNNNN.jsonl of RepoSample, contamination.jsonl
//! entries/                       packed entries + manifest.json
//! stats.json, stats.txt
//! ```
//!
//! A stage is skipped on re-run when its manifest carries the same
//! fingerprint and every listed file still matches its checksum. The
//! fingerprint chains the previous stage's, so changing an upstream setting
//! invalidates everything after it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{OutputFormat, PipelineConfig};
use crate::corpus::SourceFile;
use crate::decontam::{build_contamination_index, is_contaminated, ContaminationReport};
use crate::dedup::{dedup_repos, find_near_duplicates, MinHasher};
use crate::deps::{concatenate_with_paths, order_repository, FileEntry, RepoSample};
use crate::error::{Error, Result};
use crate::filter::filter_file;
use crate::io::{self, RawRecord, ShardInfo};
use crate::language::ExtensionMap;
use crate::sample::{document_rng, fim_transform, ByteTokenizer, FimConfig, FimError, PackedEntry, Packer, Tokenizer};
use crate::stats::{compute_stats, CorpusStats, StageCounts};

const FORMAT_VERSION: &str = "codecorpus-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Filter,
    Order,
    Dedup,
    Decontaminate,
    Build,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Filter, Stage::Order, Stage::Dedup, Stage::Decontaminate, Stage::Build];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Filter => "filter",
            Stage::Order => "order",
            Stage::Dedup => "dedup",
            Stage::Decontaminate => "decontaminate",
            Stage::Build => "build",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Checkpoint directory relative to the output root.
    pub fn dir(self) -> PathBuf {
        match self {
            Stage::Filter => "stages/1-filter".into(),
            Stage::Order => "stages/2-order".into(),
            Stage::Dedup => "stages/3-dedup".into(),
            Stage::Decontaminate => "stages/4-decontaminate".into(),
            Stage::Build => "entries".into(),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Output of the filter stage: the surviving files of one repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoFiles {
    pub repo_id: String,
    pub files: Vec<SourceFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub fingerprint: String,
    pub counts: StageCounts,
    /// Data shards, in order.
    pub shards: Vec<ShardInfo>,
    /// Audit files in the same directory (`records` counts JSONL lines).
    pub reports: Vec<ShardInfo>,
    pub extras: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunState {
    pub completed: Vec<String>,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Stages computed in this invocation.
    pub executed: Vec<Stage>,
    /// Stages taken from a matching checkpoint.
    pub resumed: Vec<Stage>,
    pub manifests: Vec<StageManifest>,
    pub stats: CorpusStats,
}

/// Runs every stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    run_until(cfg, Stage::Build)
}

/// Runs (or resumes) the stages up to and including `last`.
pub fn run_until(cfg: &PipelineConfig, last: Stage) -> Result<RunSummary> {
    cfg.validate()?;
    let pool = WorkerPool::new(cfg.workers)?;
    pool.install(|| Runner::new(cfg)?.run(last))
}

/// Recomputes the statistics from the newest sample checkpoint in `out`.
pub fn load_stats(out: &Path) -> Result<CorpusStats> {
    let mut manifests = Vec::new();
    for stage in Stage::ALL {
        match read_manifest(out, stage) {
            Some(m) => manifests.push((stage, m)),
            None => break,
        }
    }
    let Some((newest, m)) = manifests.iter().rfind(|(s, _)| *s != Stage::Build) else {
        return Err(Error::InvalidInput(format!("{} has no completed filter stage", out.display())));
    };
    let dir = out.join(newest.dir());
    let files = if *newest == Stage::Filter {
        let repos: Vec<RepoFiles> = io::read_jsonl_shards(&dir, &m.shards)?;
        repos.iter().flat_map(|r| r.files.iter().map(file_entry)).collect::<Vec<_>>()
    } else {
        let samples: Vec<RepoSample> = io::read_jsonl_shards(&dir, &m.shards)?;
        samples.into_iter().flat_map(|s| s.files).collect()
    };
    Ok(compute_stats(&files, manifests.into_iter().map(|(_, m)| m.counts).collect()))
}

fn file_entry(f: &SourceFile) -> FileEntry {
    FileEntry { path: f.path.clone(), language: f.language, byte_size: f.byte_size }
}

fn read_manifest(out: &Path, stage: Stage) -> Option<StageManifest> {
    io::read_json(&out.join(stage.dir()).join("manifest.json")).ok()
}

struct WorkerPool {
    #[cfg(feature = "parallel")]
    pool: rayon::ThreadPool,
}

impl WorkerPool {
    #[cfg_attr(not(feature = "parallel"), allow(unused_variables))]
    fn new(workers: usize) -> Result<Self> {
        Ok(Self {
            #[cfg(feature = "parallel")]
            pool: rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start {workers} workers: {e}")))?,
        })
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "parallel")]
        return self.pool.install(f);
        #[cfg(not(feature = "parallel"))]
        f()
    }
}

/// Order-preserving map; parallel when the `parallel` feature is on.
fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    map: ExtensionMap,
    raw: Vec<(String, Vec<RawRecord>)>,
    fingerprints: [String; 5],
    state: RunState,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a PipelineConfig) -> Result<Self> {
        let map = match &cfg.languages.extension_map {
            Some(p) => ExtensionMap::load(p)?,
            None => ExtensionMap::default(),
        };
        let raw: Vec<_> = io::ingest(&cfg.inputs)
            .map_err(|e| Error::Stage { stage: "filter", message: e.to_string() })?
            .into_iter()
            .collect();
        let fingerprints = fingerprints(cfg, &raw)?;
        Ok(Self { cfg, out: cfg.output_dir.clone(), map, raw, fingerprints, state: RunState::default() })
    }

    fn run(mut self, last: Stage) -> Result<RunSummary> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        let mut executed = Vec::new();
        let mut resumed = Vec::new();
        let mut manifests: Vec<StageManifest> = Vec::new();
        let mut files: Option<Vec<RepoFiles>> = None;
        let mut samples: Option<Vec<RepoSample>> = None;
        let mut reusing = true;

        for stage in Stage::ALL.into_iter().filter(|s| *s <= last) {
            let fp = &self.fingerprints[stage.index()];
            if reusing {
                if let Some(m) = self.reusable(stage, fp) {
                    self.state.completed.push(stage.name().into());
                    manifests.push(m);
                    resumed.push(stage);
                    continue;
                }
                reusing = false;
                self.clear_from(stage)?;
            }
            let result = match stage {
                Stage::Filter => self.filter_stage().map(|(m, f)| {
                    files = Some(f);
                    m
                }),
                Stage::Order => self.input_files(files.take(), &manifests).and_then(|f| {
                    self.order_stage(&f).map(|(m, s)| {
                        samples = Some(s);
                        m
                    })
                }),
                Stage::Dedup | Stage::Decontaminate | Stage::Build => {
                    self.input_samples(samples.take(), stage, &manifests).and_then(|s| {
                        let run = match stage {
                            Stage::Dedup => self.dedup_stage(s),
                            Stage::Decontaminate => self.decontam_stage(s),
                            _ => self.build_stage(&s).map(|m| (m, s)),
                        };
                        run.map(|(m, s)| {
                            samples = Some(s);
                            m
                        })
                    })
                }
            };
            match result {
                Ok(m) => {
                    io::write_json(&self.out.join(stage.dir()).join("manifest.json"), &m)?;
                    self.state.completed.push(stage.name().into());
                    io::write_json(&self.out.join("run.json"), &self.state)?;
                    manifests.push(m);
                    executed.push(stage);
                }
                Err(e) => {
                    let message = e.to_string();
                    self.state.failure = Some(Failure { stage: stage.name().into(), message: message.clone() });
                    io::write_json(&self.out.join("run.json"), &self.state)?;
                    return Err(Error::Stage { stage: stage.name(), message });
                }
            }
        }
        io::write_json(&self.out.join("run.json"), &self.state)?;

        let stats = load_stats(&self.out)?;
        io::write_json(&self.out.join("stats.json"), &stats)?;
        io::write_atomic(&self.out.join("stats.txt"), stats.render().as_bytes())?;
        self.export_reports(last)?;
        Ok(RunSummary { executed, resumed, manifests, stats })
    }

    fn reusable(&self, stage: Stage, fp: &str) -> Option<StageManifest> {
        let m = read_manifest(&self.out, stage)?;
        let dir = self.out.join(stage.dir());
        (m.fingerprint == fp && io::verify_shards(&dir, &m.shards) && io::verify_shards(&dir, &m.reports)).then_some(m)
    }

    /// Removes the checkpoints of `from` and every later stage.
    fn clear_from(&self, from: Stage) -> Result<()> {
        for stage in Stage::ALL.into_iter().filter(|s| *s >= from) {
            let dir = self.out.join(stage.dir());
            if dir.exists() {
                fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
        }
        Ok(())
    }

    fn input_files(&self, mem: Option<Vec<RepoFiles>>, manifests: &[StageManifest]) -> Result<Vec<RepoFiles>> {
        match mem {
            Some(f) => Ok(f),
            None => io::read_jsonl_shards(&self.out.join(Stage::Filter.dir()), &manifests[0].shards),
        }
    }

    fn input_samples(
        &self,
        mem: Option<Vec<RepoSample>>,
        stage: Stage,
        manifests: &[StageManifest],
    ) -> Result<Vec<RepoSample>> {
        match mem {
            Some(s) => Ok(s),
            None => {
                let prev = Stage::ALL[stage.index() - 1];
                io::read_jsonl_shards(&self.out.join(prev.dir()), &manifests[prev.index()].shards)
            }
        }
    }

    fn manifest(&self, stage: Stage, counts: StageCounts, shards: Vec<ShardInfo>) -> StageManifest {
        StageManifest {
            stage: stage.name().into(),
            fingerprint: self.fingerprints[stage.index()].clone(),
            counts,
            shards,
            reports: Vec::new(),
            extras: Map::new(),
        }
    }

    fn filter_stage(&self) -> Result<(StageManifest, Vec<RepoFiles>)> {
        let enabled = self.cfg.stages.filter;
        let thresholds = &self.cfg.filter;
        let map = &self.map;
        let per_repo = par_map(&self.raw, |_, (repo_id, raws)| {
            let mut kept = Vec::new();
            let mut drops: BTreeMap<&'static str, u64> = BTreeMap::new();
            for r in raws {
                let file = match SourceFile::from_bytes(repo_id, &r.path, r.bytes.clone(), map) {
                    Ok(f) => f,
                    Err(_) => {
                        *drops.entry("undecodable").or_default() += 1;
                        continue;
                    }
                };
                if enabled {
                    let v = filter_file(&file, thresholds);
                    if let Some(rule) = v.rule_fired {
                        *drops.entry(rule.as_str()).or_default() += 1;
                        continue;
                    }
                }
                kept.push(file);
            }
            (RepoFiles { repo_id: repo_id.clone(), files: kept }, drops)
        });

        let mut counts = StageCounts::new("filter", "files");
        let mut repos = Vec::new();
        let mut empty_repos = 0u64;
        for (repo, drops) in per_repo {
            for (reason, n) in drops {
                counts.drop(reason, n);
            }
            counts.output += repo.files.len() as u64;
            if repo.files.is_empty() {
                empty_repos += 1;
            } else {
                repos.push(repo);
            }
        }
        counts.input = self.raw.iter().map(|(_, r)| r.len() as u64).sum();
        let dir = self.out.join(Stage::Filter.dir());
        let shards = io::write_jsonl_shards(&dir, &repos, self.cfg.shard_size)?;
        let mut m = self.manifest(Stage::Filter, counts, shards);
        m.extras.insert("repos_in".into(), json!(self.raw.len()));
        m.extras.insert("repos_out".into(), json!(repos.len()));
        m.extras.insert("repos_without_files".into(), json!(empty_repos));
        m.extras.insert("enabled".into(), json!(enabled));
        Ok((m, repos))
    }

    fn order_stage(&self, repos: &[RepoFiles]) -> Result<(StageManifest, Vec<RepoSample>)> {
        let enabled = self.cfg.stages.order;
        let results = par_map(repos, |_, r| -> Result<(RepoSample, String, usize)> {
            if enabled {
                let (sample, graph) = order_repository(&r.repo_id, &r.files)?;
                Ok((sample, graph.edge_list(), graph.edge_count()))
            } else {
                let refs: Vec<&SourceFile> = r.files.iter().collect();
                Ok((concatenate_with_paths(&r.repo_id, &refs), String::new(), 0))
            }
        });
        let mut samples = Vec::with_capacity(results.len());
        let mut graphs = Vec::new();
        let mut edges = 0usize;
        for res in results {
            let (sample, tsv, n) = res?;
            edges += n;
            if enabled {
                graphs.push(json!({ "repo_id": sample.repo_id, "edges": tsv }));
            }
            samples.push(sample);
        }
        let mut counts = StageCounts::new("order", "repos");
        counts.input = repos.len() as u64;
        counts.output = samples.len() as u64;
        let dir = self.out.join(Stage::Order.dir());
        let shards = io::write_jsonl_shards(&dir, &samples, self.cfg.shard_size)?;
        let mut m = self.manifest(Stage::Order, counts, shards);
        m.reports.push(write_report(&dir, "graphs.jsonl", &graphs)?);
        m.extras.insert("edges".into(), json!(edges));
        m.extras.insert("enabled".into(), json!(enabled));
        Ok((m, samples))
    }

    fn dedup_stage(&self, samples: Vec<RepoSample>) -> Result<(StageManifest, Vec<RepoSample>)> {
        let d = &self.cfg.dedup;
        let mut counts = StageCounts::new("dedup", "repos");
        counts.input = samples.len() as u64;
        let clusters = if self.cfg.stages.dedup {
            let hasher = MinHasher::new(d.num_perm, d.shingle_width, self.cfg.seed)?;
            let sigs = par_map(&samples, |_, s| hasher.sample_signature(s));
            find_near_duplicates(&sigs, d.threshold, d.bands, d.rows)?
        } else {
            Vec::new()
        };
        let (kept, dropped) = dedup_repos(samples, &clusters);
        counts.output = kept.len() as u64;
        counts.drop("near_duplicate", dropped.len() as u64);
        let dir = self.out.join(Stage::Dedup.dir());
        let shards = io::write_jsonl_shards(&dir, &kept, self.cfg.shard_size)?;
        let mut m = self.manifest(Stage::Dedup, counts, shards);
        m.reports.push(write_report(&dir, "clusters.jsonl", &clusters)?);
        m.extras.insert("clusters".into(), json!(clusters.len()));
        m.extras.insert("enabled".into(), json!(self.cfg.stages.dedup));
        Ok((m, kept))
    }

    fn decontam_stage(&self, samples: Vec<RepoSample>) -> Result<(StageManifest, Vec<RepoSample>)> {
        let enabled = self.cfg.stages.decontaminate;
        let tests = if enabled { io::load_test_sets(&self.cfg.decontamination.test_sets)? } else { Vec::new() };
        let index = build_contamination_index(&tests);
        let reports: Vec<ContaminationReport> = if index.is_empty() {
            Vec::new()
        } else {
            par_map(&samples, |_, s| is_contaminated(s, &index)).into_iter().filter(|r| r.hit).collect()
        };
        let flagged: std::collections::HashSet<&str> = reports.iter().map(|r| r.repo_id.as_str()).collect();
        let mut counts = StageCounts::new("decontaminate", "repos");
        counts.input = samples.len() as u64;
        let kept: Vec<RepoSample> = samples.into_iter().filter(|s| !flagged.contains(s.repo_id.as_str())).collect();
        counts.output = kept.len() as u64;
        counts.drop("contaminated", reports.len() as u64);
        let dir = self.out.join(Stage::Decontaminate.dir());
        let shards = io::write_jsonl_shards(&dir, &kept, self.cfg.shard_size)?;
        let mut m = self.manifest(Stage::Decontaminate, counts, shards);
        m.reports.push(write_report(&dir, "contamination.jsonl", &reports)?);
        m.extras.insert("test_strings".into(), json!(tests.len()));
        m.extras.insert("indexed_ten_grams".into(), json!(index.ten_gram_count()));
        m.extras.insert("indexed_exact_strings".into(), json!(index.exact_count()));
        m.extras.insert("ignored_short_strings".into(), json!(index.ignored_count()));
        m.extras.insert("enabled".into(), json!(enabled));
        Ok((m, kept))
    }

    fn build_stage(&self, samples: &[RepoSample]) -> Result<StageManifest> {
        let b = &self.cfg.build;
        let fim = FimConfig {
            fim_rate: if self.cfg.stages.fim { b.fim_rate } else { 0.0 },
            mode: b.fim_mode,
            seed: self.cfg.seed,
        };
        let tokenizer = ByteTokenizer::new(b.sentinels.clone());
        let encoded = par_map(samples, |i, s| -> std::result::Result<(Vec<u32>, bool), &'static str> {
            let mut rng = document_rng(fim.seed, i as u64);
            let out = fim_transform(&s.text, &fim, &b.sentinels, &mut rng).map_err(|e| match e {
                FimError::SentinelCollision(_) => "sentinel_collision",
                FimError::EmptyDocument => "empty_document",
            })?;
            let ids = tokenizer.encode(&out.text).map_err(|_| "tokenizer_error")?;
            Ok((ids, out.cuts.is_some()))
        });

        let mut counts = StageCounts::new("build", "documents");
        counts.input = samples.len() as u64;
        let mut packer = Packer::new(b.entry_len, b.tail, tokenizer.eos_id());
        let mut entries = Vec::new();
        let mut fim_applied = 0u64;
        for e in encoded {
            match e {
                Ok((ids, transformed)) => {
                    fim_applied += transformed as u64;
                    packer.push_tokens(&ids, &mut entries);
                }
                Err(reason) => counts.drop(reason, 1),
            }
        }
        let pack = packer.finish(&mut entries);
        counts.output = pack.documents as u64;

        let dir = self.out.join(Stage::Build.dir());
        let shards = match b.format {
            OutputFormat::Jsonl => io::write_jsonl_shards(&dir, &entries, self.cfg.shard_size)?,
            OutputFormat::Binary => write_binary_shards(&dir, &entries, self.cfg.shard_size)?,
        };
        let mut m = self.manifest(Stage::Build, counts, shards);
        let x = &mut m.extras;
        x.insert("format".into(), json!(b.format));
        x.insert("entry_len".into(), json!(b.entry_len));
        x.insert("dtype".into(), json!("u32"));
        x.insert("tokenizer".into(), json!("byte"));
        x.insert("vocab_size".into(), json!(tokenizer.vocab_size()));
        x.insert("eos_id".into(), json!(tokenizer.eos_id()));
        x.insert("tail".into(), json!(b.tail));
        x.insert("fim_mode".into(), json!(b.fim_mode));
        x.insert("fim_rate".into(), json!(fim.fim_rate));
        x.insert("fim_applied".into(), json!(fim_applied));
        x.insert("sentinels".into(), json!(b.sentinels));
        x.insert("entries".into(), json!(pack.entries));
        x.insert("total_tokens".into(), json!(pack.total_tokens));
        x.insert("dropped_tail_tokens".into(), json!(pack.dropped_tail_tokens));
        x.insert("padding_tokens".into(), json!(pack.padding_tokens));
        Ok(m)
    }

    fn export_reports(&self, last: Stage) -> Result<()> {
        let r = &self.cfg.reports;
        let copies = [
            (Stage::Dedup, "clusters.jsonl", &r.dedup),
            (Stage::Decontaminate, "contamination.jsonl", &r.contamination),
        ];
        for (stage, name, target) in copies {
            if let (Some(target), true) = (target, stage <= last) {
                let bytes = read_file(&self.out.join(stage.dir()).join(name))?;
                if let Some(parent) = target.parent() {
                    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
                io::write_atomic(target, &bytes)?;
            }
        }
        if let (Some(dir), true) = (&r.graphs, Stage::Order <= last) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            #[derive(Deserialize)]
            struct Graph {
                repo_id: String,
                edges: String,
            }
            let src = self.out.join(Stage::Order.dir()).join("graphs.jsonl");
            io::for_each_jsonl(&src, |_, g: Graph| {
                io::write_atomic(&dir.join(graph_file_name(&g.repo_id)), g.edges.as_bytes())
            })?;
        }
        Ok(())
    }
}

/// `<repo_id>.tsv` with every character outside `[A-Za-z0-9._-]` replaced by `_`.
pub fn graph_file_name(repo_id: &str) -> String {
    let safe: String =
        repo_id.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect();
    format!("{safe}.tsv")
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_report<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<ShardInfo> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, r).expect("report rows serialize");
        buf.push(b'\n');
    }
    io::write_atomic(&dir.join(name), &buf)?;
    Ok(ShardInfo { file: name.into(), records: rows.len(), sha256: io::sha256_hex(&buf) })
}

/// `shard-NNNNN.bin` holds the entries' token ids as little-endian u32, back to
/// back; `shard-NNNNN.boundaries.jsonl` holds one boundary array per entry.
fn write_binary_shards(dir: &Path, entries: &[PackedEntry], shard_size: usize) -> Result<Vec<ShardInfo>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut shards = Vec::new();
    for (i, chunk) in entries.chunks(shard_size.max(1)).enumerate() {
        let mut bin = Vec::with_capacity(chunk.iter().map(|e| e.token_ids.len() * 4).sum());
        let mut idx = Vec::new();
        for e in chunk {
            for t in &e.token_ids {
                bin.extend_from_slice(&t.to_le_bytes());
            }
            serde_json::to_writer(&mut idx, &e.doc_boundaries).expect("boundaries serialize");
            idx.push(b'\n');
        }
        let bin_name = io::shard_name(i, "bin");
        let idx_name = io::shard_name(i, "boundaries.jsonl");
        io::write_atomic(&dir.join(&bin_name), &bin)?;
        io::write_atomic(&dir.join(&idx_name), &idx)?;
        shards.push(ShardInfo { file: bin_name, records: chunk.len(), sha256: io::sha256_hex(&bin) });
        shards.push(ShardInfo { file: idx_name, records: chunk.len(), sha256: io::sha256_hex(&idx) });
    }
    Ok(shards)
}

/// Reads entries back from a binary shard pair.
pub fn read_binary_shard(bin: &[u8], boundaries: &str, entry_len: usize) -> Result<Vec<PackedEntry>> {
    if entry_len == 0 || !bin.len().is_multiple_of(4 * entry_len) {
        return Err(Error::InvalidInput(format!(
            "{} bytes is not a whole number of {entry_len}-token entries",
            bin.len()
        )));
    }
    let ids: Vec<u32> = bin.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    let lines: Vec<&str> = boundaries.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != ids.len() / entry_len {
        return Err(Error::InvalidInput("boundary lines do not match entry count".into()));
    }
    ids.chunks(entry_len)
        .zip(lines)
        .map(|(t, l)| {
            let doc_boundaries = serde_json::from_str(l).map_err(|e| Error::InvalidInput(e.to_string()))?;
            Ok(PackedEntry { token_ids: t.to_vec(), doc_boundaries })
        })
        .collect()
}

fn fingerprints(cfg: &PipelineConfig, raw: &[(String, Vec<RawRecord>)]) -> Result<[String; 5]> {
    let mut inputs = Sha256::new();
    for (repo_id, files) in raw {
        for f in files {
            for part in [repo_id.as_bytes(), f.path.as_bytes(), &f.bytes] {
                inputs.update((part.len() as u64).to_le_bytes());
                inputs.update(part);
            }
        }
    }
    let inputs = hex(&inputs.finalize());
    let ext_map = match &cfg.languages.extension_map {
        Some(p) => io::sha256_hex(&read_file(p)?),
        None => "bundled".into(),
    };
    let mut test_sets = Vec::new();
    for p in &cfg.decontamination.test_sets {
        test_sets.push(io::sha256_hex(&read_file(p)?));
    }

    let chain = |prev: &str, part: Value| io::sha256_hex(format!("{prev}\n{part}").as_bytes());
    let filter = chain(
        FORMAT_VERSION,
        json!({ "inputs": inputs, "extension_map": ext_map, "filter": cfg.filter,
                "enabled": cfg.stages.filter, "shard_size": cfg.shard_size }),
    );
    let order = chain(&filter, json!({ "enabled": cfg.stages.order }));
    let dedup = chain(&order, json!({ "dedup": cfg.dedup, "seed": cfg.seed, "enabled": cfg.stages.dedup }));
    let decontam = chain(&dedup, json!({ "test_sets": test_sets, "enabled": cfg.stages.decontaminate }));
    let build = chain(&decontam, json!({ "build": cfg.build, "seed": cfg.seed, "fim": cfg.stages.fim }));
    Ok([filter, order, dedup, decontam, build])
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
