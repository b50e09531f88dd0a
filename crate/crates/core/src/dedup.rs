//! Repository-level near-deduplication with MinHash and LSH banding.
//!
//! Each [`RepoSample`] is one unit: it is either kept whole or dropped whole.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::deps::RepoSample;
use crate::error::{Error, Result};

const MERSENNE_61: u64 = (1 << 61) - 1;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub const DEFAULT_SEED: u64 = 0x6d69_6e68_6173_6831;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Lowercased word tokens: maximal runs of alphanumerics and `_`.
pub fn shingle_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_')).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Hashes of every window of `width` consecutive tokens. Texts with fewer
/// tokens than `width` produce one shingle holding all of them.
pub fn shingle_hashes(text: &str, width: usize) -> HashSet<u64> {
    let tokens = shingle_tokens(text);
    let hash_window = |w: &[String]| {
        let mut h = FNV_OFFSET;
        for t in w {
            h = fnv1a(h, t.as_bytes());
            h = fnv1a(h, &[0x1f]);
        }
        h
    };
    if tokens.len() < width.max(1) {
        return HashSet::from([hash_window(&tokens)]);
    }
    tokens.windows(width).map(hash_window).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub repo_id: String,
    pub values: Vec<u64>,
    pub num_perm: usize,
    /// Size of the sample, used to pick cluster representatives.
    pub char_count: usize,
}

impl MinHashSignature {
    /// Fraction of matching slots, an unbiased estimate of shingle Jaccard.
    pub fn similarity(&self, other: &MinHashSignature) -> f64 {
        debug_assert_eq!(self.num_perm, other.num_perm);
        let same = self.values.iter().zip(&other.values).filter(|(a, b)| a == b).count();
        same as f64 / self.num_perm as f64
    }
}

/// A seeded family of `num_perm` universal hash functions
/// `h(x) = (a*x + b) mod (2^61 - 1)`.
#[derive(Debug, Clone)]
pub struct MinHasher {
    shingle_width: usize,
    a: Vec<u64>,
    b: Vec<u64>,
}

impl MinHasher {
    pub fn new(num_perm: usize, shingle_width: usize, seed: u64) -> Result<Self> {
        if num_perm < 16 {
            return Err(Error::InvalidInput(format!("num_perm must be at least 16, got {num_perm}")));
        }
        if shingle_width == 0 {
            return Err(Error::InvalidInput("shingle_width must be positive".into()));
        }
        let mut state = seed;
        let mut a = Vec::with_capacity(num_perm);
        let mut b = Vec::with_capacity(num_perm);
        for _ in 0..num_perm {
            a.push(splitmix64(&mut state) % (MERSENNE_61 - 1) + 1);
            b.push(splitmix64(&mut state) % MERSENNE_61);
        }
        Ok(Self { shingle_width, a, b })
    }

    pub fn num_perm(&self) -> usize {
        self.a.len()
    }

    pub fn signature(&self, repo_id: &str, text: &str, char_count: usize) -> MinHashSignature {
        let shingles = shingle_hashes(text, self.shingle_width);
        let mut values = vec![u64::MAX; self.num_perm()];
        for &s in &shingles {
            let x = (s % MERSENNE_61) as u128;
            for (v, (&a, &b)) in values.iter_mut().zip(self.a.iter().zip(&self.b)) {
                let h = ((a as u128 * x + b as u128) % MERSENNE_61 as u128) as u64;
                if h < *v {
                    *v = h;
                }
            }
        }
        MinHashSignature { repo_id: repo_id.to_string(), values, num_perm: self.num_perm(), char_count }
    }

    pub fn sample_signature(&self, sample: &RepoSample) -> MinHashSignature {
        self.signature(&sample.repo_id, &sample.text, sample.char_count)
    }
}

/// Signature of `sample` under the default permutation seed.
pub fn minhash_signature(sample: &RepoSample, num_perm: usize, shingle_width: usize) -> Result<MinHashSignature> {
    Ok(MinHasher::new(num_perm, shingle_width, DEFAULT_SEED)?.sample_signature(sample))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateCluster {
    /// Sorted lexicographically.
    pub member_repo_ids: Vec<String>,
    pub representative: String,
    /// Estimated similarity of every other member to the representative.
    pub similarity_to_representative: Vec<(String, f64)>,
}

/// Probability that a pair with similarity `s` shares at least one band.
pub fn collision_probability(s: f64, bands: usize, rows: usize) -> f64 {
    1.0 - (1.0 - s.powi(rows as i32)).powi(bands as i32)
}

/// Similarity at which the banding S-curve turns, `(1/b)^(1/r)`.
pub fn s_curve_midpoint(bands: usize, rows: usize) -> f64 {
    (1.0 / bands as f64).powf(1.0 / rows as f64)
}

/// The `(bands, rows)` with `bands * rows <= num_perm` whose midpoint is
/// closest to `threshold`; ties prefer more bands.
pub fn banding_for_threshold(num_perm: usize, threshold: f64) -> (usize, usize) {
    let mut best = (1, num_perm);
    let mut best_err = f64::INFINITY;
    for rows in 1..=num_perm {
        let bands = num_perm / rows;
        let err = (s_curve_midpoint(bands, rows) - threshold).abs();
        if err < best_err - 1e-12 {
            best = (bands, rows);
            best_err = err;
        }
    }
    best
}

fn band_key(band: usize, values: &[u64]) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &(band as u64).to_le_bytes());
    for v in values {
        h = fnv1a(h, &v.to_le_bytes());
    }
    h
}

/// Candidate pairs from `bands` x `rows` LSH buckets, kept when the
/// estimated similarity reaches `threshold`, then merged transitively.
/// Singletons are not reported. Representatives are the largest member,
/// lexicographically smallest repo id on ties.
pub fn find_near_duplicates(
    signatures: &[MinHashSignature],
    threshold: f64,
    bands: usize,
    rows: usize,
) -> Result<Vec<DuplicateCluster>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput(format!("threshold must be in (0, 1), got {threshold}")));
    }
    let Some(first) = signatures.first() else {
        return Ok(Vec::new());
    };
    let num_perm = first.num_perm;
    if let Some(bad) = signatures.iter().find(|s| s.num_perm != num_perm || s.values.len() != num_perm) {
        return Err(Error::InvalidInput(format!(
            "signature of {} has {} permutations, expected {num_perm}",
            bad.repo_id, bad.num_perm
        )));
    }
    if bands == 0 || rows == 0 || bands * rows > num_perm {
        return Err(Error::InvalidInput(format!("{bands} bands x {rows} rows does not fit {num_perm} permutations")));
    }

    let mut candidates: HashSet<(usize, usize)> = HashSet::new();
    for band in 0..bands {
        let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, sig) in signatures.iter().enumerate() {
            let key = band_key(band, &sig.values[band * rows..(band + 1) * rows]);
            buckets.entry(key).or_default().push(i);
        }
        for members in buckets.values().filter(|m| m.len() > 1) {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    candidates.insert((i, j));
                }
            }
        }
    }
    let mut candidates: Vec<(usize, usize)> = candidates.into_iter().collect();
    candidates.sort_unstable();

    let mut uf = UnionFind::new(signatures.len());
    for (i, j) in candidates {
        if signatures[i].similarity(&signatures[j]) >= threshold {
            uf.union(i, j);
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..signatures.len() {
        let root = uf.find(i);
        let k = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[k].push(i);
    }

    Ok(groups
        .into_iter()
        .filter(|g| g.len() > 1)
        .map(|g| {
            let rep = *g
                .iter()
                .max_by(|&&a, &&b| {
                    let (sa, sb) = (&signatures[a], &signatures[b]);
                    sa.char_count.cmp(&sb.char_count).then_with(|| sb.repo_id.cmp(&sa.repo_id))
                })
                .unwrap();
            let mut members: Vec<String> = g.iter().map(|&i| signatures[i].repo_id.clone()).collect();
            members.sort();
            let mut sims: Vec<(String, f64)> = g
                .iter()
                .filter(|&&i| i != rep)
                .map(|&i| (signatures[i].repo_id.clone(), signatures[i].similarity(&signatures[rep])))
                .collect();
            sims.sort_by(|a, b| a.0.cmp(&b.0));
            DuplicateCluster {
                member_repo_ids: members,
                representative: signatures[rep].repo_id.clone(),
                similarity_to_representative: sims,
            }
        })
        .collect())
}

/// Keeps each cluster's representative and every unclustered sample, in
/// input order. Returns `(retained, dropped_repo_ids)`.
pub fn dedup_repos(samples: Vec<RepoSample>, clusters: &[DuplicateCluster]) -> (Vec<RepoSample>, Vec<String>) {
    let drop: HashSet<&str> = clusters
        .iter()
        .flat_map(|c| c.member_repo_ids.iter().filter(move |m| **m != c.representative))
        .map(String::as_str)
        .collect();
    let mut dropped = Vec::new();
    let mut kept = Vec::with_capacity(samples.len());
    for s in samples {
        if drop.contains(s.repo_id.as_str()) {
            dropped.push(s.repo_id);
        } else {
            kept.push(s);
        }
    }
    (kept, dropped)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, text: &str) -> RepoSample {
        RepoSample {
            repo_id: id.into(),
            ordered_paths: vec![],
            text: text.into(),
            char_count: text.chars().count(),
            files: vec![],
        }
    }

    /// Independent oracle: exact Jaccard over string shingles.
    fn exact_jaccard(a: &str, b: &str, w: usize) -> f64 {
        let sh = |t: &str| -> HashSet<String> {
            let toks: Vec<String> = t
                .split(|c: char| !c.is_alphanumeric() && c != '_')
                .filter(|s| !s.is_empty())
                .map(|s| s.to_lowercase())
                .collect();
            toks.windows(w).map(|x| x.join(" ")).collect()
        };
        let (sa, sb) = (sh(a), sh(b));
        sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
    }

    fn words(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn identical_texts_identical_signatures() {
        let h = MinHasher::new(64, 5, 1).unwrap();
        let t = "fn main() { println!(\"hello world\"); let x = compute(1, 2, 3); }";
        assert_eq!(h.signature("a", t, 0).values, h.signature("b", t, 0).values);
    }

    #[test]
    fn same_shingle_set_identical_signatures() {
        // width 1: the shingle set is the token set, so order does not matter
        let h = MinHasher::new(64, 1, 1).unwrap();
        assert_eq!(h.signature("a", "x y z y", 0).values, h.signature("b", "z y x", 0).values);
        // formatting and case are not part of the shingles
        let h = MinHasher::new(64, 3, 1).unwrap();
        assert_eq!(h.signature("a", "Foo(bar, baz)", 0).values, h.signature("b", "foo bar\n  baz", 0).values);
    }

    #[test]
    fn estimate_tracks_half_jaccard() {
        // A = {w0..w99}, B = {w0..w66} + {v0..v32}: |A∩B| = 67, |A∪B| = 133, J ≈ 0.504
        let a = words("w", 100).join(" ");
        let mut b = words("w", 67);
        b.extend(words("v", 33));
        let b = b.join(" ");
        let j = exact_jaccard(&a, &b, 1);
        assert!((j - 67.0 / 133.0).abs() < 1e-12);
        let h = MinHasher::new(128, 1, DEFAULT_SEED).unwrap();
        let est = h.signature("a", &a, 0).similarity(&h.signature("b", &b, 0));
        assert!((est - 0.5).abs() <= 0.15, "estimate {est}");
    }

    #[test]
    fn short_text_single_shingle() {
        let s = shingle_hashes("a b", 5);
        assert_eq!(s.len(), 1);
        assert_eq!(shingle_hashes("", 5).len(), 1);
        assert!(MinHasher::new(8, 5, 0).is_err());
    }

    fn cluster(texts: &[(&str, &str)], threshold: f64) -> Vec<DuplicateCluster> {
        let h = MinHasher::new(128, 5, DEFAULT_SEED).unwrap();
        let sigs: Vec<_> = texts.iter().map(|(id, t)| h.signature(id, t, t.len())).collect();
        find_near_duplicates(&sigs, threshold, 16, 8).unwrap()
    }

    #[test]
    fn ninety_percent_overlap_clusters() {
        let base = words("tok", 400);
        let mut near = base.clone();
        for i in (40..400).step_by(130) {
            near[i] = format!("changed{i}");
        }
        let (a, b) = (base.join(" "), near.join(" "));
        let j = exact_jaccard(&a, &b, 5);
        assert!(j >= 0.9, "oracle jaccard {j}");
        let c = cluster(&[("a", &a), ("b", &b)], 0.85);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].member_repo_ids, vec!["a", "b"]);
    }

    #[test]
    fn disjoint_texts_do_not_cluster() {
        let a = words("alpha", 300).join(" ");
        let b = words("beta", 300).join(" ");
        assert_eq!(exact_jaccard(&a, &b, 5), 0.0);
        assert!(cluster(&[("a", &a), ("b", &b)], 0.85).is_empty());
    }

    #[test]
    fn transitive_triple_is_one_cluster() {
        let base = words("t", 500);
        let variant = |k: usize| {
            let mut v = base.clone();
            v[100 + k] = format!("x{k}");
            v.join(" ")
        };
        let (a, b, c) = (variant(0), variant(200), variant(300));
        for (x, y) in [(&a, &b), (&b, &c), (&a, &c)] {
            assert!(exact_jaccard(x, y, 5) >= 0.85);
        }
        let cl = cluster(&[("c", &c), ("a", &a), ("b", &b)], 0.85);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].member_repo_ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn inconsistent_num_perm_rejected() {
        let a = MinHasher::new(32, 5, 0).unwrap().signature("a", "x", 1);
        let b = MinHasher::new(64, 5, 0).unwrap().signature("b", "x", 1);
        assert!(find_near_duplicates(&[a, b], 0.8, 4, 8).is_err());
    }

    #[test]
    fn representative_rules() {
        let c = |members: &[&str], rep: &str| DuplicateCluster {
            member_repo_ids: members.iter().map(|s| s.to_string()).collect(),
            representative: rep.into(),
            similarity_to_representative: vec![],
        };
        let samples = vec![sample("A", &"a".repeat(10_000)), sample("B", &"b".repeat(8_000)), sample("C", "c")];
        let (kept, dropped) = dedup_repos(samples.clone(), &[c(&["A", "B"], "A")]);
        assert_eq!(kept.iter().map(|s| s.repo_id.as_str()).collect::<Vec<_>>(), vec!["A", "C"]);
        assert_eq!(dropped, vec!["B"]);
        let (kept, _) = dedup_repos(samples.clone(), &[]);
        assert_eq!(kept, samples);

        // the representative is chosen inside find_near_duplicates
        let h = MinHasher::new(32, 2, 0).unwrap();
        let text = "same text in both repositories here";
        let sigs = vec![h.signature("Y", text, 100), h.signature("X", text, 100), h.signature("Z", text, 50)];
        let cl = find_near_duplicates(&sigs, 0.9, 4, 8).unwrap();
        assert_eq!(cl[0].representative, "X");
        let sigs = vec![h.signature("Y", text, 100), h.signature("X", text, 99)];
        assert_eq!(find_near_duplicates(&sigs, 0.9, 4, 8).unwrap()[0].representative, "Y");
    }

    #[test]
    fn banding_math() {
        assert!((s_curve_midpoint(16, 8) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
        let (b, r) = banding_for_threshold(128, 0.85);
        assert!(b * r <= 128);
        assert!((s_curve_midpoint(b, r) - 0.85).abs() < 0.05);
        assert!(collision_probability(0.9, 16, 8) > 0.99);
        assert!(collision_probability(0.3, 16, 8) < 0.002);
    }
}
