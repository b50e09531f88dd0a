//! Training-entry construction: document-level fill-in-the-middle followed
//! by packing into fixed-length token sequences.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FimMode {
    /// prefix, suffix, middle
    #[serde(rename = "PSM")]
    Psm,
    /// suffix, prefix, middle
    #[serde(rename = "SPM")]
    Spm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FimConfig {
    pub fim_rate: f64,
    pub mode: FimMode,
    pub seed: u64,
}

impl Default for FimConfig {
    fn default() -> Self {
        Self { fim_rate: 0.5, mode: FimMode::Psm, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentinelSet {
    pub fim_start: String,
    pub fim_hole: String,
    pub fim_end: String,
    pub eos: String,
}

impl Default for SentinelSet {
    fn default() -> Self {
        // fullwidth bars in the FIM markers, ASCII bars in EOS
        Self {
            fim_start: "<\u{ff5c}fim_start\u{ff5c}>".into(),
            fim_hole: "<\u{ff5c}fim_hole\u{ff5c}>".into(),
            fim_end: "<\u{ff5c}fim_end\u{ff5c}>".into(),
            eos: "<|eos_token|>".into(),
        }
    }
}

impl SentinelSet {
    pub fn all(&self) -> [&str; 4] {
        [&self.fim_start, &self.fim_hole, &self.fim_end, &self.eos]
    }

    /// Problems that make the set unusable: empty or repeated literals.
    pub fn problems(&self) -> Vec<String> {
        let all = self.all();
        let mut out = Vec::new();
        for (i, s) in all.iter().enumerate() {
            if s.is_empty() {
                out.push(format!("sentinel #{i} is empty"));
            }
            for t in &all[i + 1..] {
                if s == t {
                    out.push(format!("sentinel {s:?} is used twice"));
                }
            }
        }
        out
    }

    /// The first sentinel literal that occurs in `doc`.
    pub fn collision(&self, doc: &str) -> Option<&str> {
        self.all().into_iter().find(|s| doc.contains(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FimError {
    SentinelCollision(String),
    EmptyDocument,
}

impl fmt::Display for FimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FimError::SentinelCollision(s) => write!(f, "document contains sentinel {s:?}"),
            FimError::EmptyDocument => f.write_str("empty document"),
        }
    }
}

impl std::error::Error for FimError {}

/// The transformed text, plus the character cut points when FIM applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FimOutput {
    pub text: String,
    pub cuts: Option<(usize, usize)>,
}

/// Per-document generator: the stream for document `index` depends only on
/// `seed` and `index`, never on processing order.
pub fn document_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index))
}

/// Lays out `doc` split at character offsets `i <= j` in the given mode.
pub fn fim_layout(doc: &str, i: usize, j: usize, mode: FimMode, s: &SentinelSet) -> String {
    assert!(i <= j, "cut points out of order");
    let (pre, rest) = split_at_char(doc, i);
    let (middle, suf) = split_at_char(rest, j - i);
    let mut out = String::with_capacity(doc.len() + 64);
    out.push_str(&s.fim_start);
    match mode {
        FimMode::Psm => {
            out.push_str(pre);
            out.push_str(&s.fim_hole);
            out.push_str(suf);
        }
        FimMode::Spm => {
            out.push_str(suf);
            out.push_str(&s.fim_hole);
            out.push_str(pre);
        }
    }
    out.push_str(&s.fim_end);
    out.push_str(middle);
    out.push_str(&s.eos);
    out
}

fn split_at_char(s: &str, n: usize) -> (&str, &str) {
    match s.char_indices().nth(n) {
        Some((b, _)) => s.split_at(b),
        None => (s, ""),
    }
}

/// With probability `fim_rate`, cuts `doc` at two uniform character positions
/// and emits the FIM layout; otherwise emits `doc` followed by EOS.
pub fn fim_transform<R: Rng>(
    doc: &str,
    cfg: &FimConfig,
    sentinels: &SentinelSet,
    rng: &mut R,
) -> Result<FimOutput, FimError> {
    if doc.is_empty() {
        return Err(FimError::EmptyDocument);
    }
    if let Some(s) = sentinels.collision(doc) {
        return Err(FimError::SentinelCollision(s.to_string()));
    }
    // always draw so the stream shape does not depend on the branch taken
    let roll: f64 = rng.random();
    let len = doc.chars().count();
    let a = rng.random_range(0..=len);
    let b = rng.random_range(0..=len);
    if roll < cfg.fim_rate {
        let (i, j) = (a.min(b), a.max(b));
        Ok(FimOutput { text: fim_layout(doc, i, j, cfg.mode, sentinels), cuts: Some((i, j)) })
    } else {
        Ok(FimOutput { text: format!("{doc}{}", sentinels.eos), cuts: None })
    }
}

/// Splits a FIM-formatted entry back into `(prefix, middle, suffix)`.
pub fn split_fim<'a>(text: &'a str, mode: FimMode, s: &SentinelSet) -> Option<(&'a str, &'a str, &'a str)> {
    let body = text.strip_prefix(s.fim_start.as_str())?.strip_suffix(s.eos.as_str())?;
    let (first, rest) = body.split_once(s.fim_hole.as_str())?;
    let (second, middle) = rest.split_once(s.fim_end.as_str())?;
    Some(match mode {
        FimMode::Psm => (first, middle, second),
        FimMode::Spm => (second, middle, first),
    })
}

/// Recovers the original document from any transformed text.
pub fn reassemble(text: &str, mode: FimMode, s: &SentinelSet) -> Option<String> {
    if let Some((pre, mid, suf)) = split_fim(text, mode, s) {
        return Some(format!("{pre}{mid}{suf}"));
    }
    text.strip_suffix(s.eos.as_str()).map(str::to_string)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerError(pub String);

impl fmt::Display for TokenizerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tokenizer: {}", self.0)
    }
}

impl std::error::Error for TokenizerError {}

/// Text to token ids. Sentinels must map to stable ids.
pub trait Tokenizer: Send + Sync {
    fn encode(&self, text: &str) -> Result<Vec<u32>, TokenizerError>;
    fn eos_id(&self) -> u32;
    fn vocab_size(&self) -> usize;
}

/// One id per UTF-8 byte (0..=255); the four sentinels get 256..=259.
#[derive(Debug, Clone)]
pub struct ByteTokenizer {
    sentinels: SentinelSet,
}

impl ByteTokenizer {
    pub const FIM_START: u32 = 256;
    pub const FIM_HOLE: u32 = 257;
    pub const FIM_END: u32 = 258;
    pub const EOS: u32 = 259;

    pub fn new(sentinels: SentinelSet) -> Self {
        Self { sentinels }
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String, TokenizerError> {
        let mut bytes = Vec::with_capacity(ids.len());
        for &id in ids {
            match id {
                0..=255 => bytes.push(id as u8),
                Self::FIM_START => bytes.extend_from_slice(self.sentinels.fim_start.as_bytes()),
                Self::FIM_HOLE => bytes.extend_from_slice(self.sentinels.fim_hole.as_bytes()),
                Self::FIM_END => bytes.extend_from_slice(self.sentinels.fim_end.as_bytes()),
                Self::EOS => bytes.extend_from_slice(self.sentinels.eos.as_bytes()),
                _ => return Err(TokenizerError(format!("id {id} out of range"))),
            }
        }
        String::from_utf8(bytes).map_err(|e| TokenizerError(e.to_string()))
    }
}

impl Default for ByteTokenizer {
    fn default() -> Self {
        Self::new(SentinelSet::default())
    }
}

impl Tokenizer for ByteTokenizer {
    fn encode(&self, text: &str) -> Result<Vec<u32>, TokenizerError> {
        let specials = [
            (self.sentinels.fim_start.as_str(), Self::FIM_START),
            (self.sentinels.fim_hole.as_str(), Self::FIM_HOLE),
            (self.sentinels.fim_end.as_str(), Self::FIM_END),
            (self.sentinels.eos.as_str(), Self::EOS),
        ];
        let mut out = Vec::with_capacity(text.len());
        let mut rest = text;
        loop {
            let next = specials
                .iter()
                .filter_map(|&(lit, id)| rest.find(lit).map(|at| (at, lit.len(), id)))
                .min_by_key(|&(at, len, _)| (at, std::cmp::Reverse(len)));
            match next {
                Some((at, len, id)) => {
                    out.extend(rest[..at].bytes().map(u32::from));
                    out.push(id);
                    rest = &rest[at + len..];
                }
                None => {
                    out.extend(rest.bytes().map(u32::from));
                    break;
                }
            }
        }
        Ok(out)
    }

    fn eos_id(&self) -> u32 {
        Self::EOS
    }

    fn vocab_size(&self) -> usize {
        260
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedEntry {
    pub token_ids: Vec<u32>,
    /// Offsets within `token_ids` where a document starts.
    pub doc_boundaries: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    #[default]
    Drop,
    PadWithEos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PackStats {
    pub documents: usize,
    pub skipped_documents: usize,
    pub total_tokens: usize,
    pub entries: usize,
    pub dropped_tail_tokens: usize,
    pub padding_tokens: usize,
}

/// Streaming packer: feed documents in order, collect full entries as they
/// complete, then call [`Packer::finish`].
#[derive(Debug)]
pub struct Packer {
    entry_len: usize,
    tail: TailPolicy,
    eos: u32,
    buf: Vec<u32>,
    boundaries: Vec<usize>,
    stats: PackStats,
}

impl Packer {
    pub fn new(entry_len: usize, tail: TailPolicy, eos: u32) -> Self {
        assert!(entry_len >= 2, "entry_len must be at least 2");
        Self {
            entry_len,
            tail,
            eos,
            buf: Vec::with_capacity(entry_len),
            boundaries: Vec::new(),
            stats: PackStats::default(),
        }
    }

    pub fn push_tokens(&mut self, tokens: &[u32], out: &mut Vec<PackedEntry>) {
        self.stats.documents += 1;
        self.stats.total_tokens += tokens.len();
        if tokens.is_empty() {
            return;
        }
        self.boundaries.push(self.buf.len());
        let mut rest = tokens;
        while !rest.is_empty() {
            let room = self.entry_len - self.buf.len();
            let take = room.min(rest.len());
            self.buf.extend_from_slice(&rest[..take]);
            rest = &rest[take..];
            if self.buf.len() == self.entry_len {
                self.flush(out);
            }
        }
    }

    pub fn push_text(
        &mut self,
        text: &str,
        tokenizer: &dyn Tokenizer,
        out: &mut Vec<PackedEntry>,
    ) -> Result<(), TokenizerError> {
        match tokenizer.encode(text) {
            Ok(t) => {
                self.push_tokens(&t, out);
                Ok(())
            }
            Err(e) => {
                self.stats.skipped_documents += 1;
                Err(e)
            }
        }
    }

    fn flush(&mut self, out: &mut Vec<PackedEntry>) {
        let token_ids = std::mem::replace(&mut self.buf, Vec::with_capacity(self.entry_len));
        out.push(PackedEntry { token_ids, doc_boundaries: std::mem::take(&mut self.boundaries) });
        self.stats.entries += 1;
    }

    pub fn finish(mut self, out: &mut Vec<PackedEntry>) -> PackStats {
        if !self.buf.is_empty() {
            match self.tail {
                TailPolicy::Drop => self.stats.dropped_tail_tokens = self.buf.len(),
                TailPolicy::PadWithEos => {
                    let pad = self.entry_len - self.buf.len();
                    self.buf.extend(std::iter::repeat_n(self.eos, pad));
                    self.stats.padding_tokens = pad;
                    self.flush(out);
                }
            }
        }
        self.stats
    }
}

/// Tokenizes and packs `docs` in order. Documents the tokenizer rejects are
/// skipped and counted.
pub fn pack_entries<S: AsRef<str>>(
    docs: &[S],
    tokenizer: &dyn Tokenizer,
    entry_len: usize,
    tail: TailPolicy,
) -> (Vec<PackedEntry>, PackStats) {
    let mut packer = Packer::new(entry_len, tail, tokenizer.eos_id());
    let mut out = Vec::new();
    for d in docs {
        let _ = packer.push_text(d.as_ref(), tokenizer, &mut out);
    }
    let stats = packer.finish(&mut out);
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Treats each document as a decimal token count.
    struct Fixed;

    impl Tokenizer for Fixed {
        fn encode(&self, text: &str) -> Result<Vec<u32>, TokenizerError> {
            let n: usize = text.parse().map_err(|_| TokenizerError("not a number".into()))?;
            Ok((0..n as u32).collect())
        }
        fn eos_id(&self) -> u32 {
            9999
        }
        fn vocab_size(&self) -> usize {
            10_000
        }
    }

    #[test]
    fn forced_psm_layout() {
        let out = fim_layout("abcdef", 2, 4, FimMode::Psm, &SentinelSet::default());
        assert_eq!(out, "<｜fim_start｜>ab<｜fim_hole｜>ef<｜fim_end｜>cd<|eos_token|>");
    }

    #[test]
    fn spm_layout_and_roundtrip() {
        let s = SentinelSet::default();
        let out = fim_layout("abcdef", 2, 4, FimMode::Spm, &s);
        assert_eq!(out, "<｜fim_start｜>ef<｜fim_hole｜>ab<｜fim_end｜>cd<|eos_token|>");
        assert_eq!(reassemble(&out, FimMode::Spm, &s).unwrap(), "abcdef");
    }

    #[test]
    fn zero_rate_is_identity_plus_eos() {
        let cfg = FimConfig { fim_rate: 0.0, ..Default::default() };
        let out = fim_transform("abcdef", &cfg, &SentinelSet::default(), &mut document_rng(1, 0)).unwrap();
        assert_eq!(out.text, "abcdef<|eos_token|>");
        assert_eq!(out.cuts, None);
    }

    #[test]
    fn degenerate_cuts_keep_sentinels() {
        let s = SentinelSet::default();
        let out = fim_layout("abc", 0, 3, FimMode::Psm, &s);
        assert_eq!(out, "<｜fim_start｜><｜fim_hole｜><｜fim_end｜>abc<|eos_token|>");
        assert_eq!(split_fim(&out, FimMode::Psm, &s), Some(("", "abc", "")));
    }

    #[test]
    fn cuts_are_character_positions() {
        let s = SentinelSet::default();
        let out = fim_layout("aé中b", 1, 3, FimMode::Psm, &s);
        assert_eq!(split_fim(&out, FimMode::Psm, &s), Some(("a", "é中", "b")));
    }

    #[test]
    fn sentinel_collision_rejected() {
        let s = SentinelSet::default();
        let doc = "x = '<|eos_token|>'";
        let err = fim_transform(doc, &FimConfig::default(), &s, &mut document_rng(0, 0)).unwrap_err();
        assert_eq!(err, FimError::SentinelCollision("<|eos_token|>".into()));
    }

    #[test]
    fn default_sentinels_are_distinct() {
        assert!(SentinelSet::default().problems().is_empty());
        let bad = SentinelSet { eos: "<｜fim_end｜>".into(), ..Default::default() };
        assert_eq!(bad.problems().len(), 1);
    }

    #[test]
    fn byte_tokenizer_roundtrip_with_sentinels() {
        let t = ByteTokenizer::default();
        let text = "<｜fim_start｜>a<b<｜fim_hole｜>é<｜fim_end｜>c<|eos_token|>";
        let ids = t.encode(text).unwrap();
        assert_eq!(ids[0], ByteTokenizer::FIM_START);
        assert_eq!(*ids.last().unwrap(), ByteTokenizer::EOS);
        assert_eq!(ids.iter().filter(|&&i| i >= 256).count(), 4);
        assert_eq!(t.decode(&ids).unwrap(), text);
    }

    #[test]
    fn packing_examples() {
        let tok = Fixed;
        let (e, st) = pack_entries(&["6", "4"], &tok, 5, TailPolicy::Drop);
        assert_eq!(e.len(), 2);
        assert_eq!(st.dropped_tail_tokens, 0);
        assert_eq!(e[0].doc_boundaries, vec![0]);
        assert_eq!(e[1].doc_boundaries, vec![1]);

        let (e, st) = pack_entries(&["7"], &tok, 5, TailPolicy::Drop);
        assert_eq!(e.len(), 1);
        assert_eq!(st.dropped_tail_tokens, 2);

        let (e, st) = pack_entries(&["7"], &tok, 5, TailPolicy::PadWithEos);
        assert_eq!(e.len(), 2);
        assert_eq!(st.padding_tokens, 3);
        assert_eq!(&e[1].token_ids[2..], &[9999, 9999, 9999]);
    }

    #[test]
    fn tokenizer_failures_are_skipped() {
        let (e, st) = pack_entries(&["3", "oops", "2"], &Fixed, 5, TailPolicy::Drop);
        assert_eq!(e.len(), 1);
        assert_eq!(st.skipped_documents, 1);
        assert_eq!(e[0].doc_boundaries, vec![0, 3]);
    }

    proptest! {
        #[test]
        fn roundtrip_any_document(doc in "\\PC{1,80}", seed in any::<u64>(), spm in any::<bool>()) {
            let s = SentinelSet::default();
            let mode = if spm { FimMode::Spm } else { FimMode::Psm };
            let cfg = FimConfig { fim_rate: 1.0, mode, seed };
            prop_assume!(s.collision(&doc).is_none());
            let out = fim_transform(&doc, &cfg, &s, &mut document_rng(seed, 0)).unwrap();
            prop_assert_eq!(reassemble(&out.text, mode, &s).unwrap(), doc);
        }

        #[test]
        fn packing_conserves_tokens(lens in proptest::collection::vec(0usize..50, 0..40), entry_len in 2usize..20) {
            let docs: Vec<String> = lens.iter().map(|n| n.to_string()).collect();
            let (entries, st) = pack_entries(&docs, &Fixed, entry_len, TailPolicy::Drop);
            prop_assert!(entries.iter().all(|e| e.token_ids.len() == entry_len));
            prop_assert_eq!(entries.len() * entry_len + st.dropped_tail_tokens, lens.iter().sum::<usize>());
        }
    }
}
