//! Intra-repository dependency extraction and ordering.
//!
//! Imports are found with per-language regular expressions and resolved
//! against the repository's own paths; anything that does not resolve to a
//! file in the repository is dropped. Files are then ordered so that each
//! file's dependencies come first, using a topological sort that always picks
//! the unselected node with the smallest remaining in-degree. On cyclic
//! graphs that still yields a total order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::SourceFile;
use crate::error::{Error, Result};
use crate::language::LanguageId;

/// Lookup tables over one repository's paths (and, for C#, declared namespaces).
#[derive(Debug, Default)]
pub struct RepoIndex {
    paths: Vec<String>,
    by_path: HashMap<String, usize>,
    by_basename: HashMap<String, Vec<usize>>,
    by_dir: HashMap<String, Vec<usize>>,
    by_dir_name: HashMap<String, Vec<String>>,
    namespaces: HashMap<String, Vec<usize>>,
}

impl RepoIndex {
    pub fn from_paths<S: AsRef<str>>(paths: &[S]) -> Self {
        let mut idx = RepoIndex::default();
        for (i, p) in paths.iter().enumerate() {
            let p = p.as_ref().to_string();
            let (dir, base) = split_path(&p);
            idx.by_basename.entry(base.to_string()).or_default().push(i);
            let files = idx.by_dir.entry(dir.to_string()).or_default();
            if files.is_empty() && !dir.is_empty() {
                let (_, dir_name) = split_path(dir);
                idx.by_dir_name.entry(dir_name.to_string()).or_default().push(dir.to_string());
            }
            files.push(i);
            idx.by_path.insert(p.clone(), i);
            idx.paths.push(p);
        }
        idx
    }

    /// Also records `namespace` declarations of C# files so `using` directives
    /// can resolve to the files that declare the namespace.
    pub fn from_files(files: &[SourceFile]) -> Self {
        let paths: Vec<&str> = files.iter().map(|f| f.path.as_str()).collect();
        let mut idx = Self::from_paths(&paths);
        for (i, f) in files.iter().enumerate() {
            if f.language.is_some_and(|l| l.is("C#")) {
                for cap in CSHARP_NAMESPACE.captures_iter(&f.content) {
                    let ns = idx.namespaces.entry(cap[1].to_string()).or_default();
                    if !ns.contains(&i) {
                        ns.push(i);
                    }
                }
            }
        }
        idx
    }

    pub fn paths(&self) -> &[String] {
        &self.paths
    }

    fn exact(&self, path: &str) -> Option<usize> {
        self.by_path.get(path).copied()
    }

    /// Paths equal to `suffix` or ending in `/suffix`, shortest first.
    fn suffix_matches(&self, suffix: &str) -> Vec<usize> {
        let (_, base) = split_path(suffix);
        let mut hits: Vec<usize> = self
            .by_basename
            .get(base)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&i| path_has_suffix(&self.paths[i], suffix))
            .collect();
        hits.sort_by_key(|&i| (self.paths[i].len(), i));
        hits
    }

    fn best_suffix_match(&self, suffix: &str) -> Option<usize> {
        self.suffix_matches(suffix).into_iter().next()
    }

    fn basename_match(&self, base: &str) -> Option<usize> {
        let mut hits = self.by_basename.get(base)?.clone();
        hits.sort_by_key(|&i| (self.paths[i].len(), i));
        hits.into_iter().next()
    }

    /// Directories equal to `suffix` or ending in `/suffix`, longest match
    /// first, then shortest full path.
    fn dir_suffix_matches<'a>(&'a self, suffix: &'a str) -> Vec<&'a str> {
        if self.by_dir.contains_key(suffix) {
            return vec![suffix];
        }
        let (_, last) = split_path(suffix);
        let mut dirs: Vec<&str> = self
            .by_dir_name
            .get(last)
            .into_iter()
            .flatten()
            .map(String::as_str)
            .filter(|d| path_has_suffix(d, suffix))
            .collect();
        dirs.sort_by_key(|d| (d.len(), *d));
        dirs
    }

    /// The longest repository directory that the import path ends with.
    fn go_package_dir(&self, import: &str) -> Option<&str> {
        let (_, last) = split_path(import);
        self.by_dir_name
            .get(last)
            .into_iter()
            .flatten()
            .map(String::as_str)
            .filter(|d| path_has_suffix(import, d))
            .max_by_key(|d| (d.len(), std::cmp::Reverse(*d)))
    }

    fn files_in_dir(&self, dir: &str, ext: &[&str]) -> Vec<usize> {
        self.by_dir
            .get(dir)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&i| ext.iter().any(|e| self.paths[i].ends_with(e)))
            .collect()
    }
}

fn split_path(p: &str) -> (&str, &str) {
    match p.rfind('/') {
        Some(i) => (&p[..i], &p[i + 1..]),
        None => ("", p),
    }
}

fn path_has_suffix(path: &str, suffix: &str) -> bool {
    path == suffix
        || (path.len() > suffix.len()
            && path.ends_with(suffix)
            && path.as_bytes()[path.len() - suffix.len() - 1] == b'/')
}

/// Joins `rel` onto `dir` and resolves `.` and `..`. `None` when `..`
/// climbs above the repository root.
fn normalize_join(dir: &str, rel: &str) -> Option<String> {
    let mut parts: Vec<&str> =
        if rel.starts_with('/') { Vec::new() } else { dir.split('/').filter(|s| !s.is_empty()).collect() };
    for seg in rel.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop()?;
            }
            s => parts.push(s),
        }
    }
    Some(parts.join("/"))
}

static PY_IMPORT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*import[ \t]+([\w. \t,]+)").unwrap());
static PY_FROM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*from[ \t]+(\.*)([\w.]*)[ \t]+import[ \t]+\(?([\w \t,*]+)").unwrap());
static C_INCLUDE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?m)^[ \t]*#[ \t]*include[ \t]*["<]([^">\n]+)[">]"#).unwrap());
static CSHARP_USING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?m)^[ \t]*(?:global[ \t]+)?using[ \t]+(?:static[ \t]+)?(?:\w+[ \t]*=[ \t]*)?([\w.]+)[ \t]*;").unwrap()
});
static CSHARP_NAMESPACE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*namespace[ \t]+([\w.]+)").unwrap());
static JAVA_IMPORT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*import[ \t]+(static[ \t]+)?([\w.]+?)(\.\*)?[ \t]*;").unwrap());
static JS_FROM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?m)^[ \t]*(?:import|export)\b[^'";]*?\bfrom[ \t]*['"]([^'"\n]+)['"]"#).unwrap());
static JS_BARE_IMPORT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?m)^[ \t]*import[ \t]*['"]([^'"\n]+)['"]"#).unwrap());
static JS_CALL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"\b(?:require|import)[ \t]*\([ \t]*['"]([^'"\n]+)['"][ \t]*\)"#).unwrap());
static GO_SINGLE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?m)^[ \t]*import[ \t]+(?:[\w.]+[ \t]+)?"([^"\n]+)""#).unwrap());
static GO_BLOCK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?ms)^[ \t]*import[ \t]*\((.*?)\)").unwrap());
static GO_SPEC: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#""([^"\n]+)""#).unwrap());

const JS_EXTENSIONS: [&str; 7] = [".ts", ".tsx", ".d.ts", ".js", ".jsx", ".mjs", ".cjs"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ImportSyntax {
    Python,
    CInclude,
    CSharp,
    Java,
    JavaScript,
    Go,
}

fn syntax_for(lang: LanguageId) -> Option<ImportSyntax> {
    Some(match lang.name() {
        "Python" => ImportSyntax::Python,
        "C" | "C++" | "CUDA" => ImportSyntax::CInclude,
        "C#" => ImportSyntax::CSharp,
        "Java" => ImportSyntax::Java,
        "JavaScript" | "TypeScript" => ImportSyntax::JavaScript,
        "Go" => ImportSyntax::Go,
        _ => return None,
    })
}

/// Whether imports of `lang` are extracted at all.
pub fn supports_language(lang: Option<LanguageId>) -> bool {
    lang.and_then(syntax_for).is_some()
}

/// Paths in `repo` that `file` references, in order of first reference,
/// without duplicates and without `file` itself.
pub fn extract_dependencies(file: &SourceFile, repo: &RepoIndex) -> Vec<String> {
    let Some(syntax) = file.language.and_then(syntax_for) else {
        return Vec::new();
    };
    let (dir, _) = split_path(&file.path);
    let text = file.content.as_str();
    let mut hits: Vec<usize> = Vec::new();

    match syntax {
        ImportSyntax::Python => {
            let mut located: Vec<(usize, usize)> = Vec::new();
            for cap in PY_IMPORT.captures_iter(text) {
                let at = cap.get(0).unwrap().start();
                for item in cap[1].split(',') {
                    let module = item.split_whitespace().next().unwrap_or("");
                    if !module.is_empty() {
                        located.extend(resolve_python(repo, dir, 0, module).map(|i| (at, i)));
                    }
                }
            }
            for cap in PY_FROM.captures_iter(text) {
                let at = cap.get(0).unwrap().start();
                let level = cap[1].len();
                let module = &cap[2];
                // names that are not submodules live in the module itself
                let mut needs_module = false;
                for item in cap[3].split(',') {
                    let name = item.split_whitespace().next().unwrap_or("");
                    if name.is_empty() {
                        continue;
                    }
                    let sub = if module.is_empty() { name.to_string() } else { format!("{module}.{name}") };
                    match resolve_python(repo, dir, level, &sub).filter(|_| name != "*") {
                        Some(i) => located.push((at, i)),
                        None => needs_module = true,
                    }
                }
                if needs_module && !module.is_empty() {
                    located.extend(resolve_python(repo, dir, level, module).map(|i| (at, i)));
                }
            }
            located.sort_by_key(|&(at, _)| at);
            hits.extend(located.into_iter().map(|(_, i)| i));
        }
        ImportSyntax::CInclude => {
            for cap in C_INCLUDE.captures_iter(text) {
                hits.extend(resolve_include(repo, dir, cap[1].trim()));
            }
        }
        ImportSyntax::CSharp => {
            for cap in CSHARP_USING.captures_iter(text) {
                hits.extend(resolve_dotted(repo, &cap[1], ".cs", true));
            }
        }
        ImportSyntax::Java => {
            for cap in JAVA_IMPORT.captures_iter(text) {
                let name = &cap[2];
                if cap.get(3).is_some() {
                    for d in repo.dir_suffix_matches(&name.replace('.', "/")).into_iter().take(1) {
                        hits.extend(repo.files_in_dir(d, &[".java"]));
                    }
                } else {
                    let mut found = resolve_dotted(repo, name, ".java", false);
                    if found.is_empty() && cap.get(1).is_some() {
                        // static member import: drop the member name
                        if let Some((class, _)) = name.rsplit_once('.') {
                            found = resolve_dotted(repo, class, ".java", false);
                        }
                    }
                    hits.extend(found);
                }
            }
        }
        ImportSyntax::JavaScript => {
            let specs = JS_FROM
                .captures_iter(text)
                .chain(JS_BARE_IMPORT.captures_iter(text))
                .chain(JS_CALL.captures_iter(text))
                .filter_map(|c| c.get(1).map(|m| (m.start(), m.as_str())));
            let mut specs: Vec<(usize, &str)> = specs.collect();
            specs.sort_unstable();
            for (_, spec) in specs {
                hits.extend(resolve_js(repo, dir, spec));
            }
        }
        ImportSyntax::Go => {
            let mut specs: Vec<(usize, &str)> =
                GO_SINGLE.captures_iter(text).filter_map(|c| c.get(1).map(|m| (m.start(), m.as_str()))).collect();
            for block in GO_BLOCK.captures_iter(text) {
                let body = block.get(1).unwrap();
                for c in GO_SPEC.captures_iter(body.as_str()) {
                    let m = c.get(1).unwrap();
                    specs.push((body.start() + m.start(), m.as_str()));
                }
            }
            specs.sort_unstable();
            for (_, spec) in specs {
                if let Some(d) = repo.go_package_dir(spec) {
                    hits.extend(repo.files_in_dir(d, &[".go"]));
                }
            }
        }
    }

    let own = repo.exact(&file.path);
    let mut seen = HashSet::new();
    hits.into_iter().filter(|&i| Some(i) != own && seen.insert(i)).map(|i| repo.paths[i].clone()).collect()
}

fn resolve_python(repo: &RepoIndex, dir: &str, level: usize, module: &str) -> Option<usize> {
    let rel = module.replace('.', "/");
    let candidates = [format!("{rel}.py"), format!("{rel}/__init__.py")];
    if level > 0 {
        let mut base = dir.to_string();
        for _ in 1..level {
            base = normalize_join(&base, "..")?;
        }
        return candidates.iter().find_map(|c| normalize_join(&base, c).and_then(|p| repo.exact(&p)));
    }
    // sibling module, then from the root, then anywhere by suffix
    for c in &candidates {
        if let Some(i) = normalize_join(dir, c).and_then(|p| repo.exact(&p)) {
            return Some(i);
        }
    }
    candidates.iter().find_map(|c| repo.exact(c).or_else(|| repo.best_suffix_match(c)))
}

fn resolve_include(repo: &RepoIndex, dir: &str, inc: &str) -> Option<usize> {
    if let Some(i) = normalize_join(dir, inc).and_then(|p| repo.exact(&p)) {
        return Some(i);
    }
    if let Some(i) = normalize_join("", inc).and_then(|p| repo.exact(&p).or_else(|| repo.best_suffix_match(&p))) {
        return Some(i);
    }
    let (_, base) = split_path(inc);
    repo.basename_match(base)
}

/// `a.b.C` as the file `a/b/C<ext>`; for C#, as the files declaring
/// namespace `a.b.C` or, failing that, the files of directory `a/b/C`.
fn resolve_dotted(repo: &RepoIndex, name: &str, ext: &str, namespace: bool) -> Vec<usize> {
    let rel = name.replace('.', "/");
    if let Some(i) = repo.best_suffix_match(&format!("{rel}{ext}")) {
        return vec![i];
    }
    if namespace {
        if let Some(files) = repo.namespaces.get(name) {
            return files.clone();
        }
        if let Some(d) = repo.dir_suffix_matches(&rel).into_iter().next() {
            return repo.files_in_dir(d, &[ext]);
        }
    }
    Vec::new()
}

fn resolve_js(repo: &RepoIndex, dir: &str, spec: &str) -> Option<usize> {
    if !(spec.starts_with("./") || spec.starts_with("../") || spec == "." || spec == "..") {
        return None;
    }
    let base = normalize_join(dir, spec)?;
    if let Some(i) = repo.exact(&base) {
        return Some(i);
    }
    JS_EXTENSIONS.iter().find_map(|e| repo.exact(&format!("{base}{e}"))).or_else(|| {
        let prefix = if base.is_empty() { String::new() } else { format!("{base}/") };
        JS_EXTENSIONS.iter().find_map(|e| repo.exact(&format!("{prefix}index{e}")))
    })
}

/// Adjacency list and in-degrees over one repository's files. An edge
/// `B -> A` means A depends on B, so a file's in-degree is the number of
/// files it depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    in_degree: Vec<usize>,
}

impl DependencyGraph {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Files that depend on `path`.
    pub fn dependents(&self, path: &str) -> Vec<&str> {
        self.index
            .get(path)
            .map(|&i| self.adjacency[i].iter().map(|&j| self.nodes[j].as_str()).collect())
            .unwrap_or_default()
    }

    pub fn in_degree(&self, path: &str) -> Option<usize> {
        self.index.get(path).map(|&i| self.in_degree[i])
    }

    /// `(dependency, dependent)` pairs in node order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.adjacency.iter().enumerate().flat_map(move |(b, targets)| {
            targets.iter().map(move |&a| (self.nodes[b].as_str(), self.nodes[a].as_str()))
        })
    }

    /// One `dependency<TAB>dependent` line per edge.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for (b, a) in self.edges() {
            out.push_str(b);
            out.push('\t');
            out.push_str(a);
            out.push('\n');
        }
        out
    }
}

/// Builds the graph from `(dependent, dependency)` pairs. Repeated pairs
/// count once; self-pairs are ignored.
pub fn build_graph<S: AsRef<str>>(paths: &[S], depends_on: &[(S, S)]) -> Result<DependencyGraph> {
    let nodes: Vec<String> = paths.iter().map(|p| p.as_ref().to_string()).collect();
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.clone(), i).is_some() {
            return Err(Error::InvalidInput(format!("duplicate path {n:?} in graph")));
        }
    }
    let mut adjacency = vec![Vec::new(); nodes.len()];
    let mut in_degree = vec![0usize; nodes.len()];
    let mut seen = HashSet::new();
    for (a, b) in depends_on {
        let (a, b) = (a.as_ref(), b.as_ref());
        let ia = *index
            .get(a)
            .ok_or_else(|| Error::InvalidInput(format!("edge endpoint {a:?} is not a repository file")))?;
        let ib = *index
            .get(b)
            .ok_or_else(|| Error::InvalidInput(format!("edge endpoint {b:?} is not a repository file")))?;
        if ia == ib || !seen.insert((ia, ib)) {
            continue;
        }
        adjacency[ib].push(ia);
        in_degree[ia] += 1;
    }
    Ok(DependencyGraph { nodes, index, adjacency, in_degree })
}

/// Node indices grouped by undirected connectivity, each group in input
/// order, groups ordered by their smallest index.
fn connected_components(g: &DependencyGraph) -> Vec<Vec<usize>> {
    let n = g.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (b, targets) in g.adjacency.iter().enumerate() {
        for &a in targets {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let root = find(&mut parent, v);
        let k = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[k].push(v);
    }
    groups
}

/// Orders each connected component by repeatedly taking the unselected node
/// with the smallest current in-degree (earliest input position on ties) and
/// decrementing the in-degree of the files that depend on it.
pub fn topological_sort_indices(g: &DependencyGraph) -> Vec<Vec<usize>> {
    let mut degree = g.in_degree.clone();
    let mut selected = vec![false; g.len()];
    let mut out = Vec::new();
    for component in connected_components(g) {
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
            component.iter().map(|&v| Reverse((degree[v], v))).collect();
        let mut order = Vec::with_capacity(component.len());
        while order.len() < component.len() {
            let Reverse((d, v)) = heap.pop().expect("heap holds every unselected node");
            if selected[v] || d != degree[v] {
                continue; // stale entry
            }
            selected[v] = true;
            order.push(v);
            for &w in &g.adjacency[v] {
                degree[w] = degree[w].saturating_sub(1);
                if !selected[w] {
                    heap.push(Reverse((degree[w], w)));
                }
            }
        }
        out.push(order);
    }
    out
}

pub fn topological_sort(g: &DependencyGraph) -> Vec<Vec<String>> {
    topological_sort_indices(g).into_iter().map(|seq| seq.into_iter().map(|i| g.nodes[i].clone()).collect()).collect()
}

/// Per-file summary kept alongside a repository sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub language: Option<LanguageId>,
    pub byte_size: usize,
}

/// One repository's files, dependency ordered and concatenated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoSample {
    pub repo_id: String,
    pub ordered_paths: Vec<String>,
    pub text: String,
    pub char_count: usize,
    pub files: Vec<FileEntry>,
}

pub fn path_header(language: Option<LanguageId>, path: &str) -> String {
    let (open, close) = language.map_or(("//", ""), LanguageId::comment_style);
    format!("{open} {path}{close}\n")
}

/// Each file becomes a path-comment line, its content, and one blank line.
/// Content that lacks a final newline gets one before the blank line.
pub fn concatenate_with_paths(repo_id: &str, ordered: &[&SourceFile]) -> RepoSample {
    let mut text = String::new();
    for f in ordered {
        text.push_str(&path_header(f.language, &f.path));
        text.push_str(&f.content);
        if !f.content.is_empty() && !f.content.ends_with('\n') {
            text.push('\n');
        }
        text.push('\n');
    }
    RepoSample {
        repo_id: repo_id.to_string(),
        ordered_paths: ordered.iter().map(|f| f.path.clone()).collect(),
        char_count: text.chars().count(),
        text,
        files: ordered
            .iter()
            .map(|f| FileEntry { path: f.path.clone(), language: f.language, byte_size: f.byte_size })
            .collect(),
    }
}

/// Extracts, builds, sorts and concatenates one repository's files, which
/// must all share `repo_id` and be given in stable input order.
pub fn order_repository(repo_id: &str, files: &[SourceFile]) -> Result<(RepoSample, DependencyGraph)> {
    let index = RepoIndex::from_files(files);
    let mut pairs: Vec<(String, String)> = Vec::new();
    for f in files {
        for dep in extract_dependencies(f, &index) {
            pairs.push((f.path.clone(), dep));
        }
    }
    let paths: Vec<String> = files.iter().map(|f| f.path.clone()).collect();
    let graph = build_graph(&paths, &pairs)?;
    let ordered: Vec<&SourceFile> = topological_sort_indices(&graph).into_iter().flatten().map(|i| &files[i]).collect();
    Ok((concatenate_with_paths(repo_id, &ordered), graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::ExtensionMap;

    fn src(path: &str, content: &str) -> SourceFile {
        SourceFile::detect("r", path, content, &ExtensionMap::default()).unwrap()
    }

    fn deps(files: &[SourceFile], which: usize) -> Vec<String> {
        extract_dependencies(&files[which], &RepoIndex::from_files(files))
    }

    #[test]
    fn python_import_resolves_root_module() {
        let files = [src("main.py", "import utils\nimport numpy as np\n"), src("utils.py", "X = 1\n")];
        assert_eq!(deps(&files, 0), vec!["utils.py"]);
    }

    #[test]
    fn python_external_import_is_dropped() {
        let files = [src("main.py", "import numpy\n")];
        assert!(deps(&files, 0).is_empty());
    }

    #[test]
    fn python_from_and_relative_imports() {
        let files = [
            src("pkg/app.py", "from .models import User\nfrom . import views\nfrom pkg.util import helpers, other\nimport pkg.db, os\n"),
            src("pkg/models.py", ""),
            src("pkg/views.py", ""),
            src("pkg/util/helpers.py", ""),
            src("pkg/util/__init__.py", ""),
            src("pkg/db/__init__.py", ""),
        ];
        assert_eq!(
            deps(&files, 0),
            vec!["pkg/models.py", "pkg/views.py", "pkg/util/helpers.py", "pkg/util/__init__.py", "pkg/db/__init__.py"]
        );
    }

    #[test]
    fn python_dotted_module_matches_path_suffix() {
        let files = [src("src/main.py", "import a.b\n"), src("src/a/b.py", "")];
        assert_eq!(deps(&files, 0), vec!["src/a/b.py"]);
    }

    #[test]
    fn c_include_verbatim_then_basename() {
        let files = [
            src(
                "main.c",
                "#include \"lib/foo.h\"\n#include <stdio.h>\n# include \"bar.h\"\n#include \"missing/dir/baz.h\"\n",
            ),
            src("lib/foo.h", ""),
            src("include/bar.h", ""),
            src("other/baz.h", ""),
        ];
        assert_eq!(deps(&files, 0), vec!["lib/foo.h", "include/bar.h", "other/baz.h"]);
    }

    #[test]
    fn c_include_relative_to_file() {
        let files =
            [src("src/a.c", "#include \"../inc/a.h\"\n#include \"a.h\"\n"), src("inc/a.h", ""), src("src/a.h", "")];
        assert_eq!(deps(&files, 0), vec!["inc/a.h", "src/a.h"]);
    }

    #[test]
    fn csharp_using_by_namespace_and_path() {
        let files = [
            src("App/Program.cs", "using System;\nusing MyApp.Models;\nusing static MyApp.Util.Helpers;\n"),
            src("App/Models/User.cs", "namespace MyApp.Models\n{\n}\n"),
            src("App/Models/Order.cs", "namespace MyApp.Models;\n"),
            src("MyApp/Util/Helpers.cs", ""),
        ];
        assert_eq!(deps(&files, 0), vec!["App/Models/User.cs", "App/Models/Order.cs", "MyApp/Util/Helpers.cs"]);
    }

    #[test]
    fn java_imports() {
        let files = [
            src("src/com/x/App.java", "import com.x.model.User;\nimport com.x.util.*;\nimport static com.x.Consts.MAX;\nimport java.util.List;\n"),
            src("src/com/x/model/User.java", ""),
            src("src/com/x/util/A.java", ""),
            src("src/com/x/util/B.java", ""),
            src("src/com/x/Consts.java", ""),
        ];
        assert_eq!(
            deps(&files, 0),
            vec![
                "src/com/x/model/User.java",
                "src/com/x/util/A.java",
                "src/com/x/util/B.java",
                "src/com/x/Consts.java"
            ]
        );
    }

    #[test]
    fn javascript_relative_specifiers() {
        let files = [
            src("src/index.ts", "import { a } from './a';\nimport './side.js';\nconst b = require(\"../lib/b\");\nimport React from 'react';\nexport * from './c';\n"),
            src("src/a.ts", ""),
            src("src/side.js", ""),
            src("lib/b.js", ""),
            src("src/c/index.tsx", ""),
        ];
        assert_eq!(deps(&files, 0), vec!["src/a.ts", "src/side.js", "lib/b.js", "src/c/index.tsx"]);
    }

    #[test]
    fn go_import_block() {
        let files = [
            src("cmd/main.go", "package main\n\nimport (\n\t\"fmt\"\n\tu \"example.com/proj/internal/util\"\n)\nimport \"example.com/proj/store\"\n"),
            src("internal/util/a.go", ""),
            src("internal/util/b.go", ""),
            src("store/s.go", ""),
        ];
        assert_eq!(deps(&files, 0), vec!["internal/util/a.go", "internal/util/b.go", "store/s.go"]);
    }

    #[test]
    fn self_reference_and_duplicates_removed() {
        let files = [src("a.py", "import a\nimport b\nimport b\nfrom b import *\n"), src("b.py", "")];
        assert_eq!(deps(&files, 0), vec!["b.py"]);
    }

    #[test]
    fn unsupported_language_has_no_edges() {
        let files = [src("a.rb", "require 'b'\n"), src("b.rb", "")];
        assert!(deps(&files, 0).is_empty());
        assert!(!supports_language(files[0].language));
    }

    #[test]
    fn build_graph_examples() {
        let g = build_graph(&["A", "B"], &[("A", "B")]).unwrap();
        assert_eq!(g.dependents("B"), vec!["A"]);
        assert_eq!(g.in_degree("A"), Some(1));
        assert_eq!(g.in_degree("B"), Some(0));

        let g = build_graph(&["A"], &[]).unwrap();
        assert!(g.dependents("A").is_empty());
        assert_eq!(g.in_degree("A"), Some(0));

        let g = build_graph(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("A", "C")]).unwrap();
        assert_eq!(g.in_degree("A"), Some(2));
        assert_eq!(g.in_degree("B"), Some(1));
        assert_eq!(g.in_degree("C"), Some(0));

        assert!(build_graph(&["A"], &[("A", "Z")]).is_err());
    }

    #[test]
    fn topo_examples() {
        let g = build_graph(&["A", "B"], &[("A", "B")]).unwrap();
        assert_eq!(topological_sort(&g), vec![vec!["B", "A"]]);

        let g = build_graph::<&str>(&["A", "B"], &[]).unwrap();
        assert_eq!(topological_sort(&g), vec![vec!["A"], vec!["B"]]);

        let g = build_graph(&["A", "B"], &[("A", "B"), ("B", "A")]).unwrap();
        assert_eq!(topological_sort(&g), vec![vec!["A", "B"]]);
    }

    #[test]
    fn components_ordered_by_first_member() {
        // {B, D} and {A, C}; A comes first in input order
        let g = build_graph(&["A", "B", "C", "D"], &[("D", "B"), ("A", "C")]).unwrap();
        assert_eq!(topological_sort(&g), vec![vec!["C", "A"], vec!["B", "D"]]);
    }

    #[test]
    fn concatenation_format() {
        let a = src("a.py", "x=1");
        assert_eq!(concatenate_with_paths("r", &[&a]).text, "# a.py\nx=1\n\n");
        let b = src("b.py", "y=2\n");
        let s = concatenate_with_paths("r", &[&b, &a]);
        assert_eq!(s.text, "# b.py\ny=2\n\n# a.py\nx=1\n\n");
        assert_eq!(s.ordered_paths, vec!["b.py", "a.py"]);
        let c = src("main.c", "int main(){}");
        assert!(concatenate_with_paths("r", &[&c]).text.starts_with("// main.c\n"));
        let h = src("index.html", "<p>x</p>");
        assert!(concatenate_with_paths("r", &[&h]).text.starts_with("<!-- index.html -->\n"));
    }

    #[test]
    fn order_repository_puts_dependencies_first() {
        let files = [src("main.py", "import utils\n"), src("utils.py", "import helpers\n"), src("helpers.py", "")];
        let (sample, graph) = order_repository("r", &files).unwrap();
        assert_eq!(sample.ordered_paths, vec!["helpers.py", "utils.py", "main.py"]);
        assert_eq!(graph.edge_list(), "utils.py\tmain.py\nhelpers.py\tutils.py\n");
    }
}
