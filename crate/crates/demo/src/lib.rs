//! Browser bindings for three pipeline operations. Every export takes plain
//! strings/numbers and returns a JSON string; see `www/index.html`.

use codecorpus::deps::order_repository;
use codecorpus::filter::{filter_file, FilterThresholds};
use codecorpus::sample::{document_rng, fim_transform, split_fim, FimConfig, FimMode, SentinelSet};
use codecorpus::{compute_file_stats, ExtensionMap, SourceFile};
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Language, line statistics and filter verdict for one file.
pub fn inspect_file(path: &str, content: &str) -> Result<Value, String> {
    let file = SourceFile::detect("demo", path, content, &ExtensionMap::default()).map_err(|e| e.to_string())?;
    let verdict = filter_file(&file, &FilterThresholds::default());
    Ok(json!({
        "language": file.language.map(|l| l.name()),
        "stats": compute_file_stats(content),
        "accepted": verdict.accepted,
        "rule": verdict.rule_fired.map(|r| r.as_str()),
        "detail": verdict.detail,
    }))
}

#[derive(Deserialize)]
struct InFile {
    path: String,
    content: String,
}

/// Dependency order and concatenated sample for `[{path, content}, ...]`.
pub fn order_files(files_json: &str) -> Result<Value, String> {
    let files: Vec<InFile> = serde_json::from_str(files_json).map_err(|e| format!("bad file list: {e}"))?;
    let map = ExtensionMap::default();
    let files = files
        .into_iter()
        .map(|f| SourceFile::detect("demo", f.path, f.content, &map))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let (sample, graph) = order_repository("demo", &files).map_err(|e| e.to_string())?;
    let edges: Vec<[&str; 2]> = graph.edges().map(|(dep, dependent)| [dep, dependent]).collect();
    Ok(json!({ "order": sample.ordered_paths, "edges": edges, "text": sample.text }))
}

/// FIM transform of one document, with the pieces split out.
pub fn fim(doc: &str, seed: u32, rate: f64, mode: &str) -> Result<Value, String> {
    let mode = match mode {
        "PSM" | "psm" => FimMode::Psm,
        "SPM" | "spm" => FimMode::Spm,
        other => return Err(format!("unknown mode {other:?}; use PSM or SPM")),
    };
    if !(0.0..=1.0).contains(&rate) {
        return Err(format!("rate {rate} is outside [0, 1]"));
    }
    let cfg = FimConfig { fim_rate: rate, mode, seed: seed as u64 };
    let sentinels = SentinelSet::default();
    let out = fim_transform(doc, &cfg, &sentinels, &mut document_rng(cfg.seed, 0)).map_err(|e| e.to_string())?;
    let parts = out
        .cuts
        .and(split_fim(&out.text, mode, &sentinels))
        .map(|(prefix, middle, suffix)| json!({ "prefix": prefix, "middle": middle, "suffix": suffix }));
    Ok(json!({ "text": out.text, "cuts": out.cuts, "parts": parts }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = filterFile)]
pub fn filter_file_js(path: &str, content: &str) -> Result<String, JsError> {
    to_js(inspect_file(path, content))
}

#[wasm_bindgen(js_name = orderRepo)]
pub fn order_repo_js(files_json: &str) -> Result<String, JsError> {
    to_js(order_files(files_json))
}

#[wasm_bindgen(js_name = fimPreview)]
pub fn fim_preview_js(doc: &str, seed: u32, rate: f64, mode: &str) -> Result<String, JsError> {
    to_js(fim(doc, seed, rate, mode))
}
