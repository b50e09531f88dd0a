#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use codecorpus::config::PipelineConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ne", "po", "ru", "sa", "ti", "vo", "ze", "bra", "cle", "dri", "fen", "gor", "hul", "jin", "kre",
    "lum", "mox", "nid", "pra", "quo", "sty",
];

pub fn ident(rng: &mut impl Rng) -> String {
    let n = rng.random_range(2..4);
    (0..n).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect()
}

pub fn words(rng: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| ident(rng)).collect::<Vec<_>>().join(" ")
}

/// A plausible Python module with `funcs` small functions.
pub fn python_module(rng: &mut impl Rng, funcs: usize) -> String {
    let mut s = String::new();
    for _ in 0..funcs {
        let (name, a, b, v) = (ident(rng), ident(rng), ident(rng), ident(rng));
        let n = rng.random_range(1..100);
        s.push_str(&format!(
            "def {name}({a}, {b}):\n    \"\"\"{}\"\"\"\n    {v} = {a} + {b} * {n}\n    return {v}\n\n",
            words(rng, 6)
        ));
    }
    s
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const HUMANEVAL_LEAK: &str = "def has_close_elements(numbers: List[float], threshold: float) -> bool:\n    \"\"\" Check if in given list of numbers, are any two numbers closer to each other than given threshold.";

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub repos: PathBuf,
    pub test_set: PathBuf,
}

impl Fixture {
    pub fn config(&self, out: &str, workers: usize) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            inputs: vec![self.repos.clone()],
            output_dir: self.dir.path().join(out),
            workers,
            seed: 7,
            shard_size: 2,
            ..Default::default()
        };
        cfg.decontamination.test_sets = vec![self.test_set.clone()];
        cfg.build.entry_len = 256;
        cfg
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, bytes).unwrap();
}

/// Four repositories:
///
/// * `alpha`: two Python files plus three files every filter run must drop
///   (undecodable bytes, unknown extension, one 1500-character line);
/// * `alpha_copy`: alpha's two Python files with one identifier changed;
/// * `leaky`: embeds a benchmark prompt verbatim;
/// * `unique`: unrelated C and Python code.
pub fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let repos = dir.path().join("repos");
    let mut r = rng(1);

    let models = python_module(&mut r, 40);
    let app = format!("import models\n\n{}", python_module(&mut r, 40));
    write(&repos.join("alpha/app.py"), &app);
    write(&repos.join("alpha/models.py"), &models);
    write(&repos.join("alpha/data.bin"), [0xff, 0xfe, 0x00, 0x80]);
    write(&repos.join("alpha/notes.xyz"), "just some notes\n");
    let mut js = String::new();
    for i in 0..30 {
        js.push_str(&format!("var item{i} = compute(item{i});\n"));
    }
    js.push_str(&format!("var blob = \"{}\";\n", "abcdefghij".repeat(150)));
    write(&repos.join("alpha/min.js"), js);

    let first_def = app.find("def ").unwrap() + 4;
    let mut app_copy = app.clone();
    app_copy.replace_range(first_def..first_def + 2, "zz");
    write(&repos.join("alpha_copy/app.py"), app_copy);
    write(&repos.join("alpha_copy/models.py"), &models);

    let mut r = rng(2);
    write(
        &repos.join("leaky/solution.py"),
        format!(
            "from typing import List\n\n{HUMANEVAL_LEAK}\n    \"\"\"\n    return False\n\n{}",
            python_module(&mut r, 20)
        ),
    );

    let mut r = rng(3);
    write(&repos.join("unique/src/util.h"), "int helper(int value);\n");
    let mut c = String::from("#include \"util.h\"\n#include <stdio.h>\n\n");
    for _ in 0..20 {
        c.push_str(&format!(
            "int {}(int value) {{\n    return helper(value) + {};\n}}\n\n",
            ident(&mut r),
            r.random_range(0..50)
        ));
    }
    write(&repos.join("unique/src/main.c"), c);
    write(&repos.join("unique/tool.py"), python_module(&mut r, 15));

    let test_set = dir.path().join("tests.jsonl");
    let lines = [
        serde_json::json!({ "text": HUMANEVAL_LEAK, "benchmark": "HumanEval" }),
        serde_json::json!({ "text": "write a function to find the shared elements from the given two lists", "benchmark": "MBPP" }),
    ];
    write(&test_set, lines.iter().map(|l| format!("{l}\n")).collect::<String>());
    Fixture { dir, repos, test_set }
}

/// Every file under `root`, keyed by '/'-separated relative path.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in walkdir::WalkDir::new(root).sort_by_file_name() {
        let e = e.unwrap();
        if e.file_type().is_file() {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            out.insert(rel, fs::read(e.path()).unwrap());
        }
    }
    out
}
