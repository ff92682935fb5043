//! Dictionary-based approximate entity extraction.
//!
//! Entities and the document are tokenized (q-grams for ED/EDS, words for the
//! set similarities). One heap pass over the document's inverted lists yields
//! every entity's position list, and each list is filtered by lazy, bucket or
//! batch counting before exact verification.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use thiserror::Error;

use crate::similarity::{
    bounded_edit_distance, eds_distance_bound, eds_from_distance, floor_g, lazy_threshold,
    overlap_threshold, score_from_overlap, sorted_overlap, token_count_bounds, SimFn, SimValue,
    SimilaritySpec, SizeBounds,
};
use crate::tokenize::{qgrams, word_tokens};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pruning {
    Lazy,
    Bucket,
    BatchBinary,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("entity {id} is too short: {reason}")]
    EntityTooShort { id: usize, reason: String },
}

#[derive(Clone, Debug)]
struct Entity {
    chars: Vec<char>,
    /// Token texts sorted, repeats kept.
    sorted_tokens: Vec<String>,
    size: usize,
    bounds: SizeBounds,
    lazy: usize,
}

#[derive(Clone, Debug)]
pub struct EntityIndex {
    spec: SimilaritySpec,
    lists: HashMap<String, Vec<u32>>,
    entities: Vec<Entity>,
    /// Smallest lower and largest upper token-count bound over the dictionary.
    pub bounds: Option<SizeBounds>,
}

fn tokens_of(spec: &SimilaritySpec, text: &str) -> Vec<String> {
    if spec.func.is_string_based() {
        let chars: Vec<char> = text.chars().collect();
        qgrams(&chars, spec.q).into_iter().map(|g| g.text).collect()
    } else {
        word_tokens(text).into_iter().map(|g| g.text).collect()
    }
}

impl EntityIndex {
    pub fn build<S: AsRef<str>>(entities: &[S], spec: SimilaritySpec) -> Result<Self, ExtractError> {
        let mut lists: HashMap<String, Vec<u32>> = HashMap::new();
        let mut out = Vec::with_capacity(entities.len());
        let mut bounds: Option<SizeBounds> = None;
        for (k, text) in entities.iter().enumerate() {
            let text = text.as_ref();
            let chars: Vec<char> = text.chars().collect();
            let id = k + 1;
            if spec.func.is_string_based() && chars.len() < spec.q {
                return Err(ExtractError::EntityTooShort {
                    id,
                    reason: format!("{} characters but q = {}", chars.len(), spec.q),
                });
            }
            if spec.func == SimFn::Ed && chars.len() <= spec.tau {
                return Err(ExtractError::EntityTooShort {
                    id,
                    reason: format!("{} characters but tau = {}", chars.len(), spec.tau),
                });
            }
            let mut tokens = tokens_of(&spec, text);
            if tokens.is_empty() {
                return Err(ExtractError::EntityTooShort { id, reason: "no tokens".into() });
            }
            tokens.sort_unstable();
            let mut distinct = tokens.clone();
            distinct.dedup();
            for t in distinct {
                lists.entry(t).or_default().push(k as u32);
            }
            let size = tokens.len();
            let b = token_count_bounds(&spec, size);
            bounds = Some(match bounds {
                None => b,
                Some(x) => SizeBounds { lower: x.lower.min(b.lower), upper: x.upper.max(b.upper) },
            });
            out.push(Entity {
                chars,
                sorted_tokens: tokens,
                size,
                bounds: b,
                lazy: lazy_threshold(&spec, size).max(1) as usize,
            });
        }
        Ok(EntityIndex { spec, lists, entities: out, bounds })
    }

    pub fn spec(&self) -> &SimilaritySpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Ascending 1-based entity ids whose token set contains `token`.
    pub fn list(&self, token: &str) -> Vec<usize> {
        self.lists.get(token).map_or_else(Vec::new, |l| l.iter().map(|&e| e as usize + 1).collect())
    }

    pub fn total_list_len(&self) -> usize {
        self.lists.values().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionList {
    /// 1-based entity id.
    pub entity: usize,
    /// Ascending 1-based document token positions.
    pub positions: Vec<usize>,
}

/// Single-heap merge over the inverted lists of every document token.
pub struct DocumentScan<'a> {
    lists: Vec<&'a [u32]>,
    heap: BinaryHeap<Reverse<(u32, usize, usize)>>,
    reads: usize,
}

impl<'a> DocumentScan<'a> {
    pub fn new(doc_tokens: &[String], index: &'a EntityIndex) -> Self {
        let lists: Vec<&[u32]> = doc_tokens
            .iter()
            .map(|t| index.lists.get(t).map_or(&[][..], |l| l.as_slice()))
            .collect();
        let mut heap = BinaryHeap::new();
        let mut reads = 0;
        for (p, l) in lists.iter().enumerate() {
            if let Some(&e) = l.first() {
                reads += 1;
                heap.push(Reverse((e, p + 1, 0)));
            }
        }
        DocumentScan { lists, heap, reads }
    }

    /// Inverted-list elements consumed so far.
    pub fn reads(&self) -> usize {
        self.reads
    }
}

impl Iterator for DocumentScan<'_> {
    type Item = PositionList;

    fn next(&mut self) -> Option<PositionList> {
        let Reverse((entity, _, _)) = *self.heap.peek()?;
        let mut positions = Vec::new();
        while let Some(&Reverse((e, p, k))) = self.heap.peek() {
            if e != entity {
                break;
            }
            self.heap.pop();
            positions.push(p);
            if let Some(&next) = self.lists[p - 1].get(k + 1) {
                self.reads += 1;
                self.heap.push(Reverse((next, p, k + 1)));
            }
        }
        Some(PositionList { entity: entity as usize + 1, positions })
    }
}

pub fn scan_document<'a>(doc_tokens: &[String], index: &'a EntityIndex) -> DocumentScan<'a> {
    DocumentScan::new(doc_tokens, index)
}

/// Window `P[i..=j]` of a position list, 1-based and inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateWindow {
    pub i: usize,
    pub j: usize,
}

/// Windows with at least `min_count` positions whose span lies in `[lower_span, upper]`.
///
/// Windows whose first `min_count` positions already span more than `upper`
/// are skipped by a binary search for the next viable start; from a viable
/// start a binary search finds the last end that still fits.
pub fn find_candidate_windows(p: &[usize], min_count: usize, lower_span: usize, upper: usize) -> Vec<CandidateWindow> {
    let mut out = Vec::new();
    let n = p.len();
    if min_count == 0 || n < min_count || min_count > upper {
        return out;
    }
    let span = |a: usize, b: usize| p[b] - p[a] + 1;
    let mut i = 0;
    while i + min_count <= n {
        let j = i + min_count - 1;
        if span(i, j) <= upper {
            let (mut lo, mut hi) = (j, (i + upper - 1).min(n - 1));
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if span(i, mid) <= upper {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            for k in j..=lo {
                if span(i, k) >= lower_span {
                    debug_assert!(k - i + 1 >= min_count && span(i, k) <= upper);
                    out.push(CandidateWindow { i: i + 1, j: k + 1 });
                }
            }
            i += 1;
        } else {
            // A start m in (i, j] ends no earlier than p[j] + (m - i).
            let fits = |m: usize| p[j] + (m - i) - p[m] < upper;
            if !fits(j) {
                i = j + 1;
                continue;
            }
            let (mut lo, mut hi) = (i + 1, j);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if fits(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            i = lo;
        }
    }
    out
}

/// Substrings `(start, token_count)` whose exact positions from `p` are the window's.
///
/// Starts range over `[max(p_j - upper + 1, p_{i-1} + 1), p_i]` and ends over
/// `[p_j, min(p_i + upper - 1, p_{j+1} - 1)]`; the ends of the list act as
/// sentinels bounded by the document.
pub fn windows_to_candidates(
    w: CandidateWindow,
    p: &[usize],
    n_tokens: usize,
    spec: &SimilaritySpec,
    e_size: usize,
) -> Vec<(usize, usize)> {
    let bounds = token_count_bounds(spec, e_size);
    let (pi, pj) = (p[w.i - 1], p[w.j - 1]);
    let count = w.j - w.i + 1;
    let prev = if w.i >= 2 { p[w.i - 2] } else { 0 };
    let next = p.get(w.j).copied().unwrap_or(n_tokens + 1);
    let lo = (pj + 1).saturating_sub(bounds.upper).max(prev + 1).max(1);
    let up = (pi + bounds.upper - 1).min(next - 1).min(n_tokens);
    let cap = tight_upper(spec, e_size, count).min(bounds.upper);
    let mut out = Vec::new();
    for a in lo..=pi {
        for b in pj..=up {
            let l = b - a + 1;
            if l < bounds.lower || l > cap {
                continue;
            }
            let t = overlap_threshold(spec, e_size, l);
            if t >= 1 && count as i64 >= t {
                out.push((a, l));
            }
        }
    }
    out
}

/// Largest substring size compatible with `count` shared tokens.
fn tight_upper(spec: &SimilaritySpec, e_size: usize, count: usize) -> usize {
    let m = e_size.min(count) as f64;
    let d = spec.delta;
    let v = match spec.func {
        SimFn::Jac => floor_g(m / d),
        SimFn::Cos => floor_g(m / (d * d)),
        SimFn::Dice => floor_g(m * (2.0 - d) / d),
        SimFn::Ed | SimFn::Eds => i64::MAX,
    };
    v.max(0) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct Match {
    /// 1-based entity id.
    pub entity: usize,
    /// 1-based inclusive span: characters for ED/EDS, word tokens otherwise.
    pub start: usize,
    pub end: usize,
    pub value: SimValue,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtractCounters {
    /// (entity, substring) pairs sent to verification.
    pub candidates: usize,
    pub windows: usize,
    /// Inverted-list elements read during the scan.
    pub list_reads: usize,
    /// Sum of position-list lengths emitted by the scan.
    pub positions: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ExtractOutput {
    pub matches: Vec<Match>,
    pub counters: ExtractCounters,
}

struct Doc {
    chars: Vec<char>,
    tokens: Vec<String>,
}

impl Doc {
    fn new(spec: &SimilaritySpec, text: &str) -> Self {
        Doc { chars: text.chars().collect(), tokens: tokens_of(spec, text) }
    }
}

fn verify(index: &EntityIndex, doc: &Doc, e: usize, start: usize, len: usize) -> Option<Match> {
    let spec = &index.spec;
    let ent = &index.entities[e];
    match spec.func {
        SimFn::Ed | SimFn::Eds => {
            let end = start + len + spec.q - 2;
            let sub = &doc.chars[start - 1..end];
            let value = if spec.func == SimFn::Ed {
                SimValue::Distance(bounded_edit_distance(&ent.chars, sub, spec.tau)?)
            } else {
                let bound = eds_distance_bound(spec.delta, ent.chars.len().max(sub.len()));
                let d = bounded_edit_distance(&ent.chars, sub, bound)?;
                SimValue::Score(eds_from_distance(d, ent.chars.len(), sub.len()))
            };
            spec.accepts(value).then_some(Match { entity: e + 1, start, end, value })
        }
        func => {
            let mut sub: Vec<&str> = doc.tokens[start - 1..start - 1 + len].iter().map(String::as_str).collect();
            sub.sort_unstable();
            let ent_tokens: Vec<&str> = ent.sorted_tokens.iter().map(String::as_str).collect();
            let o = sorted_overlap(&ent_tokens, &sub);
            let value = SimValue::Score(score_from_overlap(func, o, ent.size, len));
            spec.accepts(value).then_some(Match { entity: e + 1, start, end: start + len - 1, value })
        }
    }
}

/// Token counts of the entity that need no shared token and must be checked exhaustively.
fn unconditional_sizes(spec: &SimilaritySpec, ent: &Entity, n_tokens: usize) -> Vec<usize> {
    (ent.bounds.lower..=ent.bounds.upper.min(n_tokens))
        .filter(|&l| overlap_threshold(spec, ent.size, l) <= 0)
        .collect()
}

fn split_buckets(spec: &SimilaritySpec, ent: &Entity, p: &[usize]) -> Vec<std::ops::Range<usize>> {
    let max_gap = if spec.func == SimFn::Ed {
        spec.tau * spec.q
    } else {
        ent.bounds.upper.saturating_sub(ent.lazy)
    };
    let mut out = Vec::new();
    let mut s = 0;
    for k in 1..=p.len() {
        if k == p.len() || p[k] - p[k - 1] - 1 > max_gap {
            if k - s >= ent.lazy {
                out.push(s..k);
            }
            s = k;
        }
    }
    out
}

/// Every substring with enough of `p`'s positions, by prefix counting.
fn count_substrings(
    spec: &SimilaritySpec,
    ent: &Entity,
    p: &[usize],
    n_tokens: usize,
    out: &mut HashSet<(usize, usize)>,
) {
    let (first, last) = (p[0], p[p.len() - 1]);
    let mut pref = vec![0usize; n_tokens + 1];
    for &x in p {
        pref[x] += 1;
    }
    for k in 1..=n_tokens {
        pref[k] += pref[k - 1];
    }
    for l in ent.bounds.lower..=ent.bounds.upper.min(n_tokens) {
        let t = overlap_threshold(spec, ent.size, l);
        if t <= 0 {
            continue;
        }
        let a0 = (first + 1).saturating_sub(l).max(1);
        let a1 = last.min(n_tokens + 1 - l);
        for a in a0..=a1 {
            let c = pref[a + l - 1] - pref[a - 1];
            if c as i64 >= t {
                out.insert((a, l));
            }
        }
    }
}

/// Extract every (substring, entity) pair satisfying the index's similarity spec.
pub fn extract(index: &EntityIndex, document: &str, pruning: Pruning) -> ExtractOutput {
    let spec = index.spec;
    let doc = Doc::new(&spec, document);
    let n = doc.tokens.len();
    let mut counters = ExtractCounters::default();
    let mut matches = Vec::new();
    let mut push = |cands: &mut dyn Iterator<Item = (usize, usize)>, e: usize, counters: &mut ExtractCounters| {
        for (a, l) in cands {
            counters.candidates += 1;
            if let Some(m) = verify(index, &doc, e, a, l) {
                matches.push(m);
            }
        }
    };
    if n == 0 {
        return ExtractOutput { matches, counters };
    }

    let mut scan = scan_document(&doc.tokens, index);
    for PositionList { entity, positions: p } in scan.by_ref() {
        counters.positions += p.len();
        let e = entity - 1;
        let ent = &index.entities[e];
        if p.len() < ent.lazy {
            continue;
        }
        let mut cands: HashSet<(usize, usize)> = HashSet::new();
        match pruning {
            Pruning::Lazy => count_substrings(&spec, ent, &p, n, &mut cands),
            Pruning::Bucket => {
                for b in split_buckets(&spec, ent, &p) {
                    count_substrings(&spec, ent, &p[b], n, &mut cands);
                }
            }
            Pruning::BatchBinary => {
                let lower = sound_lower_span(&spec, ent, n);
                for b in split_buckets(&spec, ent, &p) {
                    let off = b.start;
                    for w in find_candidate_windows(&p[b], ent.lazy, lower, ent.bounds.upper) {
                        counters.windows += 1;
                        let w = CandidateWindow { i: w.i + off, j: w.j + off };
                        cands.extend(windows_to_candidates(w, &p, n, &spec, ent.size));
                    }
                }
            }
        }
        let mut cands: Vec<_> = cands.into_iter().collect();
        cands.sort_unstable();
        push(&mut cands.into_iter(), e, &mut counters);
    }
    counters.list_reads = scan.reads();

    for (e, ent) in index.entities.iter().enumerate() {
        for l in unconditional_sizes(&spec, ent, n) {
            push(&mut (1..=n + 1 - l).map(|a| (a, l)), e, &mut counters);
        }
    }
    matches.sort_by_key(|m| (m.entity, m.start, m.end));
    ExtractOutput { matches, counters }
}

/// Smallest window span any similar substring can induce.
///
/// A window of `c` positions spans at least `c` tokens, and a candidate needs
/// `c >= T(|e|, l)`, so the minimum of `T` over the valid sizes is a safe floor.
fn sound_lower_span(spec: &SimilaritySpec, ent: &Entity, n_tokens: usize) -> usize {
    (ent.bounds.lower..=ent.bounds.upper.min(n_tokens))
        .map(|l| overlap_threshold(spec, ent.size, l))
        .filter(|&t| t >= 1)
        .min()
        .unwrap_or(1) as usize
}

/// Build the index and extract in one call.
pub fn extract_all<S: AsRef<str>>(
    dictionary: &[S],
    document: &str,
    spec: SimilaritySpec,
    pruning: Pruning,
) -> Result<ExtractOutput, ExtractError> {
    let index = EntityIndex::build(dictionary, spec)?;
    Ok(extract(&index, document, pruning))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const DICTIONARY: [&str; 5] = ["kaushik ch", "chakrabarti", "chaudhuri", "venkatesh", "surajit ch"];
    pub(crate) const DOCUMENT: &str = "an efficient filter for approximate membership checking. \
venkaee shga kamunshik kabarati, dong xin, surauijt chadhurisigmod.";

    const P_E4: [usize; 14] = [10, 17, 33, 34, 43, 58, 59, 60, 61, 66, 71, 76, 81, 86];

    fn doc_tokens(spec: &SimilaritySpec, s: &str) -> Vec<String> {
        tokens_of(spec, s)
    }

    #[test]
    fn inverted_list_of_ch() {
        let idx = EntityIndex::build(&DICTIONARY, SimilaritySpec::ed(2, 2)).unwrap();
        assert_eq!(idx.list("ch"), vec![1, 2, 3, 5]);
        let empty = EntityIndex::build::<&str>(&[], SimilaritySpec::ed(2, 2)).unwrap();
        assert!(empty.is_empty() && empty.bounds.is_none());
    }

    #[test]
    fn short_entities_are_rejected() {
        let err = EntityIndex::build(&["abc", "x"], SimilaritySpec::ed(1, 2)).unwrap_err();
        assert!(matches!(err, ExtractError::EntityTooShort { id: 2, .. }));
        let err = EntityIndex::build(&["ab"], SimilaritySpec::ed(2, 2)).unwrap_err();
        assert!(matches!(err, ExtractError::EntityTooShort { id: 1, .. }));
        let err = EntityIndex::build(&["a b", "  "], SimilaritySpec::jaccard(0.8)).unwrap_err();
        assert!(matches!(err, ExtractError::EntityTooShort { id: 2, .. }));
    }

    #[test]
    fn position_lists_from_scan() {
        let spec = SimilaritySpec::ed(2, 2);
        let idx = EntityIndex::build(&DICTIONARY, spec).unwrap();
        let tokens = doc_tokens(&spec, DOCUMENT);
        let lists: Vec<PositionList> = scan_document(&tokens, &idx).collect();
        let e4 = lists.iter().find(|l| l.entity == 4).unwrap();
        assert_eq!(e4.positions, P_E4);
        let ids: Vec<usize> = lists.iter().map(|l| l.entity).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));

        let spec = SimilaritySpec::ed(1, 2);
        let idx = EntityIndex::build(&DICTIONARY, spec).unwrap();
        let tokens = doc_tokens(&spec, "venkaee shga kamunshi");
        let e1 = scan_document(&tokens, &idx).find(|l| l.entity == 1).unwrap();
        assert_eq!(e1.positions, [4, 9, 14, 19, 20]);

        assert_eq!(scan_document(&doc_tokens(&spec, "zzzzzz"), &idx).count(), 0);
    }

    #[test]
    fn windows_of_e4() {
        let w = find_candidate_windows(&P_E4, 4, 6, 10);
        assert_eq!(w, [CandidateWindow { i: 6, j: 10 }, CandidateWindow { i: 7, j: 10 }]);
    }

    #[test]
    fn buckets_prune_everything() {
        let spec = SimilaritySpec::ed(1, 2);
        let p = [1, 2, 3, 4, 9, 14, 19];
        let ent = Entity {
            chars: "abcdefghi".chars().collect(),
            sorted_tokens: vec![],
            size: 8,
            bounds: token_count_bounds(&spec, 8),
            lazy: lazy_threshold(&spec, 8) as usize,
        };
        assert_eq!(ent.lazy, 6);
        assert!(split_buckets(&spec, &ent, &p).is_empty());
        assert!(find_candidate_windows(&p, 6, 7, 9).is_empty());
        assert!(find_candidate_windows(&p[..3], 6, 1, 9).is_empty());
    }

    #[test]
    fn window_yields_venkaee() {
        let spec = SimilaritySpec::ed(2, 2);
        let cands = windows_to_candidates(CandidateWindow { i: 6, j: 10 }, &P_E4, 126, &spec, 8);
        assert!(cands.contains(&(58, 9)));
        let chars: Vec<char> = DOCUMENT.chars().collect();
        let text: String = chars[57..57 + 9 + 1].iter().collect();
        assert_eq!(text, "venkaee sh");
    }

    #[test]
    fn single_position_window() {
        let spec = SimilaritySpec::jaccard(1.0);
        let c = windows_to_candidates(CandidateWindow { i: 1, j: 1 }, &[3], 5, &spec, 1);
        assert_eq!(c, [(3, 1)]);
    }

    #[test]
    fn table_extraction_results() {
        let spec = SimilaritySpec::ed(2, 2);
        let chars: Vec<char> = DOCUMENT.chars().collect();
        for pruning in [Pruning::Lazy, Pruning::Bucket, Pruning::BatchBinary] {
            let out = extract_all(&DICTIONARY, DOCUMENT, spec, pruning).unwrap();
            let found: Vec<(usize, String)> = out
                .matches
                .iter()
                .map(|m| (m.entity, chars[m.start - 1..m.end].iter().collect()))
                .collect();
            for want in [(4, "venkaee sh"), (5, "surauijt ch"), (3, "chadhuri")] {
                assert!(found.contains(&(want.0, want.1.to_string())), "{pruning:?} misses {want:?}");
            }
        }
    }

    #[test]
    fn exact_jaccard_matches_only() {
        let dict = ["new york", "york new city"];
        let doc = "i love new york city and york new city";
        let out = extract_all(&dict, doc, SimilaritySpec::jaccard(1.0), Pruning::BatchBinary).unwrap();
        let got: Vec<(usize, usize, usize)> = out.matches.iter().map(|m| (m.entity, m.start, m.end)).collect();
        assert_eq!(got, [(1, 3, 4), (1, 7, 8), (2, 3, 5), (2, 7, 9)]);
    }

    #[test]
    fn spec_window_floor_misses_a_match() {
        // ED 2, yet the shared grams span only 4 tokens, below the entity's 6-token floor.
        let spec = SimilaritySpec::ed(2, 2);
        let p = {
            let idx = EntityIndex::build(&["abcdefghi"], spec).unwrap();
            let t = doc_tokens(&spec, "aXcdefgYi");
            scan_document(&t, &idx).next().unwrap().positions
        };
        assert_eq!(p, [3, 4, 5, 6]);
        assert!(find_candidate_windows(&p, 4, 6, 10).is_empty());
        let out = extract_all(&["abcdefghi"], "aXcdefgYi", spec, Pruning::BatchBinary).unwrap();
        assert_eq!(out.matches[0].value, SimValue::Distance(2));
    }

    fn brute_windows(p: &[usize], min_count: usize, lower: usize, upper: usize) -> Vec<CandidateWindow> {
        let mut v = Vec::new();
        for i in 0..p.len() {
            for j in i..p.len() {
                let (c, s) = (j - i + 1, p[j] - p[i] + 1);
                if c >= min_count.max(1) && c <= upper && s >= lower && s <= upper {
                    v.push(CandidateWindow { i: i + 1, j: j + 1 });
                }
            }
        }
        v
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn windows_match_definition(
            gaps in proptest::collection::vec(1usize..6, 0..40),
            min_count in 1usize..6,
            lower in 1usize..8,
            extra in 0usize..10,
        ) {
            let mut p = Vec::new();
            let mut x = 0;
            for g in gaps { x += g; p.push(x); }
            let upper = lower + extra;
            prop_assert_eq!(find_candidate_windows(&p, min_count, lower, upper), brute_windows(&p, min_count, lower, upper));
        }

        #[test]
        fn window_substrings_are_distinct(
            gaps in proptest::collection::vec(1usize..4, 1..30),
            tau in 0usize..3,
            e_size in 3usize..9,
        ) {
            let spec = SimilaritySpec::ed(tau, 2);
            let mut p = Vec::new();
            let mut x = 0;
            for g in gaps { x += g; p.push(x); }
            let n = x + 3;
            let b = token_count_bounds(&spec, e_size);
            let tl = lazy_threshold(&spec, e_size).max(1) as usize;
            let mut all = Vec::new();
            for w in find_candidate_windows(&p, tl, 1, b.upper) {
                all.extend(windows_to_candidates(w, &p, n, &spec, e_size));
            }
            let set: HashSet<_> = all.iter().copied().collect();
            prop_assert_eq!(set.len(), all.len());
            // each span contains exactly its window's positions, with enough of them
            for &(a, l) in &all {
                let c = p.iter().filter(|&&y| y >= a && y < a + l).count() as i64;
                prop_assert!(c >= overlap_threshold(&spec, e_size, l));
            }
            // and every qualifying span shows up
            let mut want = HashSet::new();
            for l in b.lower..=b.upper.min(n) {
                let t = overlap_threshold(&spec, e_size, l);
                if t < 1 { continue; }
                for a in 1..=n + 1 - l {
                    let c = p.iter().filter(|&&y| y >= a && y < a + l).count() as i64;
                    if c >= t { want.insert((a, l)); }
                }
            }
            prop_assert_eq!(set, want);
        }

        #[test]
        fn scan_reads_each_list_once(doc in "[abc ]{0,60}", dict in proptest::collection::vec("[abc]{2,6}", 1..8)) {
            let spec = SimilaritySpec::ed(1, 2);
            let idx = EntityIndex::build(&dict, spec).unwrap();
            let tokens = doc_tokens(&spec, &doc);
            let mut scan = scan_document(&tokens, &idx);
            let total: usize = scan.by_ref().map(|l| l.positions.len()).sum();
            let expect: usize = tokens.iter().map(|t| idx.lists.get(t).map_or(0, Vec::len)).sum();
            prop_assert_eq!(scan.reads(), total);
            prop_assert_eq!(total, expect);
        }
    }
}
