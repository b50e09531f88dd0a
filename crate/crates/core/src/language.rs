//! The closed set of supported languages and path-based language detection.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Every language the corpus keeps, in the order of the published summary table.
pub const LANGUAGES: [&str; 87] = [
    "Ada",
    "Agda",
    "Alloy",
    "ANTLR",
    "AppleScript",
    "Assembly",
    "Augeas",
    "AWK",
    "Batchfile",
    "Bluespec",
    "C",
    "C#",
    "Clojure",
    "CMake",
    "CoffeeScript",
    "Common Lisp",
    "C++",
    "CSS",
    "CUDA",
    "Dart",
    "Dockerfile",
    "Elixir",
    "Elm",
    "Emacs Lisp",
    "Erlang",
    "F#",
    "Fortran",
    "GLSL",
    "Go",
    "Groovy",
    "Haskell",
    "HTML",
    "Idris",
    "Isabelle",
    "Java",
    "Java Server Pages",
    "JavaScript",
    "JSON",
    "Julia",
    "Jupyter Notebook",
    "Kotlin",
    "Lean",
    "Literate Agda",
    "Literate CoffeeScript",
    "Literate Haskell",
    "Lua",
    "Makefile",
    "Maple",
    "Mathematica",
    "MATLAB",
    "OCaml",
    "Pascal",
    "Perl",
    "PHP",
    "PowerShell",
    "Prolog",
    "Protocol Buffer",
    "Python",
    "R",
    "Racket",
    "RMarkdown",
    "Ruby",
    "Rust",
    "SAS",
    "Scala",
    "Scheme",
    "Shell",
    "Smalltalk",
    "Solidity",
    "Sparql",
    "SQL",
    "Stan",
    "Standard ML",
    "Stata",
    "SystemVerilog",
    "TCL",
    "Tcsh",
    "Tex",
    "Thrift",
    "TypeScript",
    "Verilog",
    "VHDL",
    "Visual Basic",
    "XSLT",
    "Yacc",
    "YAML",
    "Zig",
];

/// A member of [`LANGUAGES`], stored as its index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageId(u8);

impl LanguageId {
    pub fn from_name(name: &str) -> Option<Self> {
        LANGUAGES.iter().position(|&l| l == name).map(|i| LanguageId(i as u8))
    }

    /// Panics on names outside the table; meant for literals.
    pub fn named(name: &str) -> Self {
        Self::from_name(name).unwrap_or_else(|| panic!("unknown language {name:?}"))
    }

    pub fn name(self) -> &'static str {
        LANGUAGES[self.0 as usize]
    }

    pub fn all() -> impl Iterator<Item = LanguageId> {
        (0..LANGUAGES.len()).map(|i| LanguageId(i as u8))
    }

    pub fn is(self, name: &str) -> bool {
        self.name() == name
    }

    /// Line-comment opener (and closer, for block-only languages) used for
    /// the path header written above each file in a repository sample.
    pub fn comment_style(self) -> (&'static str, &'static str) {
        match self.name() {
            "Python"
            | "Shell"
            | "Ruby"
            | "Perl"
            | "R"
            | "RMarkdown"
            | "YAML"
            | "Makefile"
            | "Dockerfile"
            | "CMake"
            | "PowerShell"
            | "Julia"
            | "Elixir"
            | "Tcsh"
            | "AWK"
            | "TCL"
            | "Stan"
            | "Stata"
            | "SAS"
            | "Sparql"
            | "Jupyter Notebook"
            | "Augeas"
            | "Literate CoffeeScript"
            | "CoffeeScript"
            | "Batchfile" => ("#", ""),
            "SQL" | "Haskell" | "Literate Haskell" | "Lua" | "Ada" | "Elm" | "VHDL" | "Agda" | "Literate Agda"
            | "Idris" | "Lean" | "AppleScript" => ("--", ""),
            "Common Lisp" | "Clojure" | "Scheme" | "Racket" | "Emacs Lisp" | "Assembly" => (";", ""),
            "Tex" | "Erlang" | "Prolog" | "MATLAB" | "Mathematica" | "Maple" => ("%", ""),
            "HTML" | "XSLT" | "Java Server Pages" => ("<!--", " -->"),
            "CSS" => ("/*", " */"),
            "OCaml" | "Standard ML" | "Isabelle" => ("(*", " *)"),
            "Fortran" => ("!", ""),
            "Visual Basic" => ("'", ""),
            "Smalltalk" => ("\"", "\""),
            _ => ("//", ""),
        }
    }
}

impl fmt::Debug for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for LanguageId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for LanguageId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        LanguageId::from_name(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown language {name:?}")))
    }
}

const DEFAULT_TABLE: &str = include_str!("../data/extensions.toml");

#[derive(Deserialize)]
struct RawTable {
    #[serde(default)]
    basenames: HashMap<String, String>,
    #[serde(default)]
    extensions: HashMap<String, String>,
}

/// Maps basenames and extensions to languages. Basenames win over extensions.
#[derive(Debug, Clone)]
pub struct ExtensionMap {
    basenames: HashMap<String, LanguageId>,
    extensions: HashMap<String, LanguageId>,
}

impl Default for ExtensionMap {
    fn default() -> Self {
        Self::from_toml(DEFAULT_TABLE).expect("bundled extension table is valid")
    }
}

impl ExtensionMap {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawTable = toml::from_str(text).map_err(|e| Error::Config(format!("extension map: {e}")))?;
        let resolve = |(k, v): (String, String)| -> Result<(String, LanguageId)> {
            LanguageId::from_name(&v)
                .map(|l| (k.clone(), l))
                .ok_or_else(|| Error::Config(format!("extension map: {k:?} maps to unknown language {v:?}")))
        };
        let basenames = raw.basenames.into_iter().map(resolve).collect::<Result<_>>()?;
        let extensions =
            raw.extensions.into_iter().map(|(k, v)| resolve((k.to_ascii_lowercase(), v))).collect::<Result<_>>()?;
        Ok(Self { basenames, extensions })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn detect(&self, path: &str) -> Option<LanguageId> {
        let base = path.rsplit(['/', '\\']).next().unwrap_or(path);
        if let Some(&lang) = self.basenames.get(base) {
            return Some(lang);
        }
        let (stem, ext) = base.rsplit_once('.')?;
        if stem.is_empty() {
            // dotfiles such as `.bashrc` have no extension
            return None;
        }
        self.extensions.get(&ext.to_ascii_lowercase()).copied()
    }
}

/// Language of `path` under `map`, or `None` when neither the basename nor the
/// extension is known.
pub fn detect_language(path: &str, map: &ExtensionMap) -> Option<LanguageId> {
    debug_assert!(!path.is_empty());
    map.detect(path)
}
