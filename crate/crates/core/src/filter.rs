//! Rule-based file filters.
//!
//! Rules run in a fixed order and the first one that fires is reported:
//!
//! 1. `unknown_language`
//! 2. `avg_line_len` (> 100 characters)
//! 3. `max_line_len` (> 1000 characters)
//! 4. `alphabetic_fraction` (< 25 %)
//! 5. `xml_header` (`<?xml version=` in the first 100 characters, XSLT exempt)
//! 6. `visible_min_chars` / `visible_ratio` (HTML only)
//! 7. `data_too_small` / `data_too_large` (JSON and YAML only)
//! 8. `repeated_token` / `long_lines` (heuristic screening)

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{compute_file_stats, FileStats, SourceFile};
use crate::language::LanguageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    UnknownLanguage,
    AvgLineLen,
    MaxLineLen,
    AlphabeticFraction,
    XmlHeader,
    VisibleMinChars,
    VisibleRatio,
    DataTooSmall,
    DataTooLarge,
    RepeatedToken,
    LongLines,
}

impl Rule {
    pub const ALL: [Rule; 11] = [
        Rule::UnknownLanguage,
        Rule::AvgLineLen,
        Rule::MaxLineLen,
        Rule::AlphabeticFraction,
        Rule::XmlHeader,
        Rule::VisibleMinChars,
        Rule::VisibleRatio,
        Rule::DataTooSmall,
        Rule::DataTooLarge,
        Rule::RepeatedToken,
        Rule::LongLines,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::UnknownLanguage => "unknown_language",
            Rule::AvgLineLen => "avg_line_len",
            Rule::MaxLineLen => "max_line_len",
            Rule::AlphabeticFraction => "alphabetic_fraction",
            Rule::XmlHeader => "xml_header",
            Rule::VisibleMinChars => "visible_min_chars",
            Rule::VisibleRatio => "visible_ratio",
            Rule::DataTooSmall => "data_too_small",
            Rule::DataTooLarge => "data_too_large",
            Rule::RepeatedToken => "repeated_token",
            Rule::LongLines => "long_lines",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub rule_fired: Option<Rule>,
    pub detail: String,
}

impl FilterVerdict {
    pub fn accept() -> Self {
        Self { accepted: true, rule_fired: None, detail: String::new() }
    }

    pub fn reject(rule: Rule, detail: impl Into<String>) -> Self {
        Self { accepted: false, rule_fired: Some(rule), detail: detail.into() }
    }
}

/// Numeric thresholds for every rule. Comparison direction is fixed per rule;
/// only the numbers are configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterThresholds {
    /// Reject when the mean line length is strictly greater.
    pub max_avg_line_len: f64,
    /// Reject when the longest line is strictly longer.
    pub max_line_len: usize,
    /// Reject when the alphabetic fraction is strictly lower.
    pub min_alphabetic_fraction: f64,
    /// Window (in characters) searched for the XML declaration.
    pub xml_header_window: usize,
    /// HTML: keep only if visible text is at least this many characters...
    pub html_min_visible_chars: usize,
    /// ...and at least this fraction of the whole file.
    pub html_min_visible_ratio: f64,
    /// JSON/YAML inclusive character-count bounds.
    pub data_min_chars: usize,
    pub data_max_chars: usize,
    /// Reject when one token's occurrences cover strictly more than this
    /// fraction of the file's characters.
    pub max_repeated_token_fraction: f64,
    /// Lines strictly longer than this count as "long" for the next rule.
    pub long_line_chars: usize,
    /// Reject when strictly more than this fraction of non-comment lines is long.
    pub max_long_line_fraction: f64,
    pub heuristics: bool,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self {
            max_avg_line_len: 100.0,
            max_line_len: 1000,
            min_alphabetic_fraction: 0.25,
            xml_header_window: 100,
            html_min_visible_chars: 100,
            html_min_visible_ratio: 0.20,
            data_min_chars: 50,
            data_max_chars: 5000,
            max_repeated_token_fraction: 0.5,
            long_line_chars: 200,
            max_long_line_fraction: 0.9,
            heuristics: true,
        }
    }
}

const XML_DECL: &str = "<?xml version=";

pub fn apply_base_filters(file: &SourceFile, stats: &FileStats, t: &FilterThresholds) -> FilterVerdict {
    if stats.avg_line_len > t.max_avg_line_len {
        return FilterVerdict::reject(
            Rule::AvgLineLen,
            format!("average line length {:.2} > {}", stats.avg_line_len, t.max_avg_line_len),
        );
    }
    if stats.max_line_len > t.max_line_len {
        return FilterVerdict::reject(
            Rule::MaxLineLen,
            format!("maximum line length {} > {}", stats.max_line_len, t.max_line_len),
        );
    }
    if stats.alphabetic_fraction < t.min_alphabetic_fraction {
        return FilterVerdict::reject(
            Rule::AlphabeticFraction,
            format!("alphabetic fraction {:.4} < {}", stats.alphabetic_fraction, t.min_alphabetic_fraction),
        );
    }
    let is_xslt = file.language.is_some_and(|l| l.is("XSLT"));
    if !is_xslt && prefix_chars(&file.content, t.xml_header_window).contains(XML_DECL) {
        return FilterVerdict::reject(
            Rule::XmlHeader,
            format!("{XML_DECL:?} within the first {} characters", t.xml_header_window),
        );
    }
    FilterVerdict::accept()
}

fn prefix_chars(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// HTML: visible text must be at least `html_min_visible_chars` characters and
/// at least `html_min_visible_ratio` of the file.
pub fn filter_html(content: &str, t: &FilterThresholds) -> FilterVerdict {
    let total = content.chars().count();
    let visible = visible_text(content).chars().count();
    if visible < t.html_min_visible_chars {
        return FilterVerdict::reject(
            Rule::VisibleMinChars,
            format!("{visible} visible characters < {}", t.html_min_visible_chars),
        );
    }
    // visible >= min > 0 here unless the threshold is 0
    let ratio = if total == 0 { 0.0 } else { visible as f64 / total as f64 };
    if ratio < t.html_min_visible_ratio {
        return FilterVerdict::reject(
            Rule::VisibleRatio,
            format!("visible ratio {ratio:.4} ({visible}/{total}) < {}", t.html_min_visible_ratio),
        );
    }
    FilterVerdict::accept()
}

/// JSON/YAML: the character count must fall in the inclusive range.
pub fn filter_data_file(content: &str, language: LanguageId, t: &FilterThresholds) -> FilterVerdict {
    debug_assert!(language.is("JSON") || language.is("YAML"));
    let n = content.chars().count();
    if n < t.data_min_chars {
        return FilterVerdict::reject(
            Rule::DataTooSmall,
            format!("{language} file has {n} characters < {}", t.data_min_chars),
        );
    }
    if n > t.data_max_chars {
        return FilterVerdict::reject(
            Rule::DataTooLarge,
            format!("{language} file has {n} characters > {}", t.data_max_chars),
        );
    }
    FilterVerdict::accept()
}

/// Heuristic stand-ins for compiler/model based quality screening.
pub fn apply_quality_heuristics(file: &SourceFile, stats: &FileStats, t: &FilterThresholds) -> FilterVerdict {
    if stats.char_count == 0 {
        return FilterVerdict::accept();
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tok in file.content.split_whitespace() {
        *counts.entry(tok).or_default() += 1;
    }
    if let Some((tok, covered)) = counts
        .iter()
        .filter(|(_, &n)| n >= 2)
        .map(|(tok, &n)| (*tok, n * tok.chars().count()))
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
    {
        let frac = covered as f64 / stats.char_count as f64;
        if frac > t.max_repeated_token_fraction {
            return FilterVerdict::reject(
                Rule::RepeatedToken,
                format!("token {tok:?} covers {:.1}% of the file", frac * 100.0),
            );
        }
    }

    let comment = file.language.map(|l| l.comment_style().0);
    let mut code_lines = 0usize;
    let mut long = 0usize;
    for line in file.content.lines() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || is_comment_line(trimmed, comment) {
            continue;
        }
        code_lines += 1;
        if line.chars().count() > t.long_line_chars {
            long += 1;
        }
    }
    if code_lines > 0 {
        let frac = long as f64 / code_lines as f64;
        if frac > t.max_long_line_fraction {
            return FilterVerdict::reject(
                Rule::LongLines,
                format!("{long}/{code_lines} code lines longer than {} characters", t.long_line_chars),
            );
        }
    }
    FilterVerdict::accept()
}

fn is_comment_line(trimmed: &str, lang_token: Option<&str>) -> bool {
    if let Some(tok) = lang_token {
        if trimmed.starts_with(tok) {
            return true;
        }
    }
    ["//", "/*", "* ", "#", "--"].iter().any(|p| trimmed.starts_with(p))
}

/// Runs every applicable rule in order.
pub fn filter_file(file: &SourceFile, t: &FilterThresholds) -> FilterVerdict {
    let Some(lang) = file.language else {
        return FilterVerdict::reject(Rule::UnknownLanguage, format!("no language for {}", file.path));
    };
    let stats = compute_file_stats(&file.content);
    let v = apply_base_filters(file, &stats, t);
    if !v.accepted {
        return v;
    }
    let v = match lang.name() {
        "HTML" => filter_html(&file.content, t),
        "JSON" | "YAML" => filter_data_file(&file.content, lang, t),
        _ => FilterVerdict::accept(),
    };
    if !v.accepted || !t.heuristics {
        return v;
    }
    apply_quality_heuristics(file, &stats, t)
}

/// Visible text of an HTML document: text nodes outside `<script>`/`<style>`,
/// comments and tags, with whitespace runs collapsed to one space and trimmed.
/// Malformed markup never fails; an unterminated tag swallows the rest.
pub fn visible_text(html: &str) -> String {
    let mut raw = String::with_capacity(html.len() / 2);
    let mut rest = html;
    while let Some(lt) = rest.find('<') {
        raw.push_str(&rest[..lt]);
        let tail = &rest[lt..];
        if let Some(after) = tail.strip_prefix("<!--") {
            rest = match after.find("-->") {
                Some(end) => &after[end + 3..],
                None => "",
            };
            continue;
        }
        let Some(gt) = tail.find('>') else {
            rest = "";
            break;
        };
        let name = tag_name(&tail[1..gt]);
        rest = &tail[gt + 1..];
        let is_closing = tail[1..].starts_with('/');
        if !is_closing && (name == "script" || name == "style") && !tail[..gt].ends_with('/') {
            rest = skip_raw_element(rest, &name);
        }
    }
    raw.push_str(rest);

    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn tag_name(inner: &str) -> String {
    inner
        .trim_start_matches('/')
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

fn skip_raw_element<'a>(s: &'a str, name: &str) -> &'a str {
    let closing = format!("</{name}");
    let lower = s.to_ascii_lowercase();
    match lower.find(&closing) {
        Some(i) => match s[i..].find('>') {
            Some(j) => &s[i + j + 1..],
            None => "",
        },
        None => "",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::ExtensionMap;

    fn file(path: &str, content: &str) -> SourceFile {
        SourceFile::detect("r", path, content, &ExtensionMap::default()).unwrap()
    }

    fn base(path: &str, content: &str) -> FilterVerdict {
        let f = file(path, content);
        apply_base_filters(&f, &compute_file_stats(&f.content), &FilterThresholds::default())
    }

    #[test]
    fn long_single_line_rejected_by_max_len() {
        // 1500 chars averages 1500 too, so make the average pass with short lines
        let mut text = "x".repeat(1500);
        text.push('\n');
        text.push_str(&"ab\n".repeat(20));
        let v = base("a.py", &text);
        assert_eq!(v.rule_fired, Some(Rule::MaxLineLen));
    }

    #[test]
    fn single_1500_char_line_fires_first_rule_in_order() {
        let v = base("a.py", &"x".repeat(1500));
        assert_eq!(v.rule_fired, Some(Rule::AvgLineLen));
    }

    #[test]
    fn digits_only_rejected_by_alphabetic() {
        let v = base("a.py", &"1234567890\n".repeat(10));
        assert_eq!(v.rule_fired, Some(Rule::AlphabeticFraction));
    }

    #[test]
    fn xslt_exempt_from_xml_rule() {
        let doc = "<?xml version=\"1.0\"?>\n<xsl:stylesheet version=\"1.0\">\n</xsl:stylesheet>\n";
        assert!(base("t.xsl", doc).accepted);
        assert_eq!(base("t.java", doc).rule_fired, Some(Rule::XmlHeader));
    }

    #[test]
    fn xml_header_outside_window_is_fine() {
        let doc = format!("{}\n<?xml version=\"1.0\"?>\n", "a".repeat(99));
        assert!(base("t.java", &doc).accepted);
        let doc = format!("{}\n<?xml version=\"1.0\"?>\n", "a".repeat(85));
        assert_eq!(base("t.java", &doc).rule_fired, Some(Rule::XmlHeader));
    }

    #[test]
    fn visible_text_strips_markup() {
        let html = "<html><head><style>p{color:red}</style><script>var x = '<b>';</script></head>\
                    <body><!-- hidden --><p>Hello   <b>world</b></p>\n<SCRIPT>y()</SCRIPT>done</body></html>";
        assert_eq!(visible_text(html), "Hello world done");
    }

    #[test]
    fn visible_text_tolerates_garbage() {
        assert_eq!(visible_text("a <b unterminated"), "a");
        assert_eq!(visible_text("<script>never closed"), "");
        assert_eq!(visible_text("x <!-- open"), "x");
        assert_eq!(visible_text("1 < 2"), "1");
    }

    fn html_with(visible: usize, total: usize) -> String {
        let text = "v".repeat(visible);
        let wrapper = "<p></p>".len();
        assert!(total >= visible + wrapper);
        let pad = total - visible - wrapper;
        format!("<p>{text}{}</p>", "<i>".repeat(pad / 3)) + &" ".repeat(pad % 3)
    }

    #[test]
    fn html_examples() {
        let t = FilterThresholds::default();
        let doc = html_with(250, 800);
        assert_eq!(doc.chars().count(), 800);
        assert!(filter_html(&doc, &t).accepted);
        assert_eq!(filter_html(&html_with(250, 5000), &t).rule_fired, Some(Rule::VisibleRatio));
        assert_eq!(filter_html(&html_with(40, 100), &t).rule_fired, Some(Rule::VisibleMinChars));
    }

    #[test]
    fn data_file_examples() {
        let t = FilterThresholds::default();
        let json = LanguageId::named("JSON");
        let yaml = LanguageId::named("YAML");
        assert_eq!(filter_data_file(&"x".repeat(30), json, &t).rule_fired, Some(Rule::DataTooSmall));
        assert!(filter_data_file(&"x".repeat(4000), yaml, &t).accepted);
        assert_eq!(filter_data_file(&"x".repeat(5001), json, &t).rule_fired, Some(Rule::DataTooLarge));
    }

    #[test]
    fn unknown_language_rejected_first() {
        let v = filter_file(&file("notes.xyz", "hello"), &FilterThresholds::default());
        assert_eq!(v.rule_fired, Some(Rule::UnknownLanguage));
    }

    #[test]
    fn repeated_token_heuristic() {
        let t = FilterThresholds::default();
        let spam = "spam\n".repeat(50) + "def f():\n    return 1\n";
        assert_eq!(filter_file(&file("a.py", &spam), &t).rule_fired, Some(Rule::RepeatedToken));
        let ok = "def add(a, b):\n    return a + b\n\nprint(add(1, 2))\n";
        assert!(filter_file(&file("a.py", ok), &t).accepted);
    }

    #[test]
    fn long_lines_heuristic_ignores_comments() {
        let t = FilterThresholds { max_avg_line_len: 1e9, ..Default::default() };
        let long = format!("x = '{}'\n", "ab cd ".repeat(40));
        let code = long.repeat(10) + "y = 1\n";
        assert_eq!(filter_file(&file("a.py", &code), &t).rule_fired, Some(Rule::LongLines));
        let commented = long.repeat(10) + &"# short comment\n".repeat(50);
        assert_eq!(filter_file(&file("a.py", &commented), &t).rule_fired, Some(Rule::LongLines));
        let mixed = long.repeat(5) + &"z = 2\n".repeat(5);
        assert!(filter_file(&file("a.py", &mixed), &t).accepted);
    }

    #[test]
    fn verdict_invariant() {
        let t = FilterThresholds::default();
        for (p, c) in [("a.py", "x = 1\n"), ("a.py", "1111"), ("b.json", "{}"), ("c.zz", "")] {
            let v = filter_file(&file(p, c), &t);
            assert_eq!(v.accepted, v.rule_fired.is_none());
        }
    }
}
