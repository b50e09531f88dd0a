//! Input discovery and sharded JSONL / binary output with checksums.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::decontam::TestString;
use crate::error::{Error, Result};

/// One input file before decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub repo_id: String,
    pub path: String,
    pub bytes: Vec<u8>,
}

#[derive(Deserialize)]
struct JsonlFile {
    repo_id: String,
    path: String,
    content: String,
}

/// Reads every input and groups files by repository, repositories sorted by
/// id, files in input order (directory walks are sorted by name).
pub fn ingest(inputs: &[PathBuf]) -> Result<BTreeMap<String, Vec<RawRecord>>> {
    let mut repos: BTreeMap<String, Vec<RawRecord>> = BTreeMap::new();
    for input in inputs {
        if input.is_dir() {
            read_repo_dirs(input, &mut repos)?;
        } else {
            read_jsonl_files(input, &mut repos)?;
        }
    }
    for (repo, files) in &repos {
        let mut seen = std::collections::HashSet::new();
        for f in files {
            if !seen.insert(f.path.as_str()) {
                return Err(Error::InvalidInput(format!("repository {repo:?} lists {:?} twice", f.path)));
            }
        }
    }
    Ok(repos)
}

fn is_hidden(name: &std::ffi::OsStr) -> bool {
    name.to_str().is_some_and(|s| s.starts_with('.'))
}

fn read_repo_dirs(root: &Path, repos: &mut BTreeMap<String, Vec<RawRecord>>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(root, e))?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let repo_dir = entry.path();
        if !repo_dir.is_dir() || is_hidden(&entry.file_name()) {
            continue;
        }
        let repo_id = entry.file_name().to_string_lossy().into_owned();
        let files = repos.entry(repo_id.clone()).or_default();
        let walker = WalkDir::new(&repo_dir)
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| e.depth() == 0 || !is_hidden(e.file_name()));
        for e in walker {
            let e = e.map_err(|err| {
                let p = err.path().unwrap_or(&repo_dir).to_path_buf();
                Error::io(p, err.into())
            })?;
            if !e.file_type().is_file() {
                continue;
            }
            let rel = e.path().strip_prefix(&repo_dir).expect("walk stays under root");
            let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            let bytes = fs::read(e.path()).map_err(|err| Error::io(e.path(), err))?;
            files.push(RawRecord { repo_id: repo_id.clone(), path, bytes });
        }
    }
    Ok(())
}

fn read_jsonl_files(path: &Path, repos: &mut BTreeMap<String, Vec<RawRecord>>) -> Result<()> {
    for_each_jsonl(path, |line, rec: JsonlFile| {
        if rec.path.is_empty() {
            return Err(Error::Parse { path: path.to_path_buf(), line, message: "empty path".into() });
        }
        repos.entry(rec.repo_id.clone()).or_default().push(RawRecord {
            repo_id: rec.repo_id,
            path: rec.path,
            bytes: rec.content.into_bytes(),
        });
        Ok(())
    })
}

/// Calls `f` for each non-blank line of a JSONL file with its 1-based number.
pub fn for_each_jsonl<T, F>(path: &Path, mut f: F) -> Result<()>
where
    T: DeserializeOwned,
    F: FnMut(usize, T) -> Result<()>,
{
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        f(i + 1, rec)?;
    }
    Ok(())
}

pub fn load_test_sets(paths: &[PathBuf]) -> Result<Vec<TestString>> {
    let mut out = Vec::new();
    for p in paths {
        for_each_jsonl(p, |_, t: TestString| {
            out.push(t);
            Ok(())
        })?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardInfo {
    pub file: String,
    pub records: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn shard_name(i: usize, ext: &str) -> String {
    format!("shard-{i:05}.{ext}")
}

/// Writes `bytes` to `path` via a temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serializes `records` as JSONL into `dir`, `shard_size` per shard.
pub fn write_jsonl_shards<T: Serialize>(dir: &Path, records: &[T], shard_size: usize) -> Result<Vec<ShardInfo>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut shards = Vec::new();
    for (i, chunk) in records.chunks(shard_size.max(1)).enumerate() {
        let mut buf = Vec::new();
        for r in chunk {
            serde_json::to_writer(&mut buf, r).expect("records serialize");
            buf.push(b'\n');
        }
        let file = shard_name(i, "jsonl");
        write_atomic(&dir.join(&file), &buf)?;
        shards.push(ShardInfo { file, records: chunk.len(), sha256: sha256_hex(&buf) });
    }
    Ok(shards)
}

/// Reads shards back, failing on any checksum or record-count mismatch.
pub fn read_jsonl_shards<T: DeserializeOwned>(dir: &Path, shards: &[ShardInfo]) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for s in shards {
        let path = dir.join(&s.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(&bytes) != s.sha256 {
            return Err(Error::Checkpoint { path, message: "checksum mismatch".into() });
        }
        let mut n = 0;
        for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
            if line.is_empty() {
                continue;
            }
            let rec = serde_json::from_slice(line).map_err(|e| Error::Parse {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            out.push(rec);
            n += 1;
        }
        if n != s.records {
            return Err(Error::Checkpoint { path, message: format!("expected {} records, found {n}", s.records) });
        }
    }
    Ok(out)
}

pub fn verify_shards(dir: &Path, shards: &[ShardInfo]) -> bool {
    shards.iter().all(|s| fs::read(dir.join(&s.file)).is_ok_and(|b| sha256_hex(&b) == s.sha256))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn shards_roundtrip_and_detect_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let recs: Vec<u32> = (0..7).collect();
        let shards = write_jsonl_shards(dir.path(), &recs, 3).unwrap();
        assert_eq!(shards.iter().map(|s| s.records).collect::<Vec<_>>(), vec![3, 3, 1]);
        assert_eq!(read_jsonl_shards::<u32>(dir.path(), &shards).unwrap(), recs);
        fs::write(dir.path().join(&shards[1].file), "9\n9\n9\n").unwrap();
        assert!(!verify_shards(dir.path(), &shards));
        assert!(matches!(read_jsonl_shards::<u32>(dir.path(), &shards), Err(Error::Checkpoint { .. })));
    }

    #[test]
    fn ingest_directories_and_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("repos");
        fs::create_dir_all(root.join("beta/src")).unwrap();
        fs::create_dir_all(root.join("alpha/.git")).unwrap();
        fs::write(root.join("beta/src/b.py"), "b").unwrap();
        fs::write(root.join("beta/a.py"), "a").unwrap();
        fs::write(root.join("alpha/.git/HEAD"), "x").unwrap();
        fs::write(root.join("alpha/main.c"), "m").unwrap();
        let jsonl = dir.path().join("extra.jsonl");
        fs::write(&jsonl, "{\"repo_id\":\"gamma\",\"path\":\"x.go\",\"content\":\"package x\"}\n\n").unwrap();

        let repos = ingest(&[root, jsonl]).unwrap();
        assert_eq!(repos.keys().collect::<Vec<_>>(), vec!["alpha", "beta", "gamma"]);
        let paths: Vec<&str> = repos["beta"].iter().map(|r| r.path.as_str()).collect();
        assert_eq!(paths, vec!["a.py", "src/b.py"]);
        assert_eq!(repos["alpha"].len(), 1);
        assert_eq!(repos["gamma"][0].bytes, b"package x");
    }

    #[test]
    fn duplicate_paths_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let jsonl = dir.path().join("dup.jsonl");
        let line = "{\"repo_id\":\"r\",\"path\":\"a.py\",\"content\":\"\"}\n";
        fs::write(&jsonl, line.repeat(2)).unwrap();
        assert!(ingest(&[jsonl]).is_err());
    }

    #[test]
    fn bad_jsonl_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let jsonl = dir.path().join("bad.jsonl");
        fs::write(&jsonl, "{\"text\":\"a b c\",\"benchmark\":\"X\"}\nnot json\n").unwrap();
        match load_test_sets(&[jsonl]).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }
}
