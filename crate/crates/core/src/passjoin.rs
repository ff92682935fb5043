//! Partition-based similarity joins under edit distance and edit similarity.
//!
//! Indexed strings are split evenly into `tau + 1` segments; a probe string
//! selects substrings per segment slot, and any indexed string sharing one of
//! them is verified by extending the match to the left and to the right.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;

use crate::similarity::{bounded_edit_distance, eds_distance_bound, eds_from_distance, floor_g, SimValue, EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Length,
    Shift,
    Position,
    MultiMatch,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Length, Strategy::Shift, Strategy::Position, Strategy::MultiMatch];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    /// 1-based start.
    pub start: usize,
    pub len: usize,
}

/// Segment layout of any string of length `len` split into `tau + 1` parts.
///
/// Returns `None` when `len <= tau`.
pub fn partition_layout(len: usize, tau: usize) -> Option<Vec<Segment>> {
    let m = tau + 1;
    if len < m {
        return None;
    }
    let short = len / m;
    let k = len - short * m;
    let mut out = Vec::with_capacity(m);
    let mut start = 1;
    for i in 0..m {
        let l = if i < m - k { short } else { short + 1 };
        out.push(Segment { start, len: l });
        start += l;
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvenPartition {
    pub segments: Vec<(Segment, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShortRecord {
    pub len: usize,
    pub tau: usize,
}

pub fn partition_even(s: &str, tau: usize) -> Result<EvenPartition, ShortRecord> {
    let chars: Vec<char> = s.chars().collect();
    let layout = partition_layout(chars.len(), tau).ok_or(ShortRecord { len: chars.len(), tau })?;
    let segments = layout
        .into_iter()
        .map(|g| (g, chars[g.start - 1..g.start - 1 + g.len].iter().collect()))
        .collect();
    Ok(EvenPartition { segments })
}

/// Inclusive 1-based start range for slot `i` (1-based) of a length-`l` layout, probed by a length-`s_len` string.
pub fn selection_range(s_len: usize, l: usize, tau: usize, i: usize, seg: Segment, strategy: Strategy) -> Option<(usize, usize)> {
    if seg.len > s_len {
        return None;
    }
    let (s, t, p, i) = (s_len as i64, tau as i64, seg.start as i64, i as i64);
    let delta = s - l as i64;
    let last = s - seg.len as i64 + 1;
    let (lo, hi) = match strategy {
        Strategy::Length => (1, last),
        Strategy::Shift => (p - t, p + t),
        Strategy::Position => (p - (t - delta).div_euclid(2), p + (t + delta).div_euclid(2)),
        Strategy::MultiMatch => {
            let (ll, lr) = (p - (i - 1), p + (i - 1));
            let (rl, rr) = (p + delta - (t + 1 - i), p + delta + (t + 1 - i));
            (ll.max(rl), lr.min(rr))
        }
    };
    let (lo, hi) = (lo.max(1), hi.min(last));
    (lo <= hi).then_some((lo as usize, hi as usize))
}

/// Start positions chosen per slot for probing strings of length `l`.
pub fn select_starts(s_len: usize, l: usize, tau: usize, strategy: Strategy) -> Vec<Vec<usize>> {
    let Some(layout) = partition_layout(l, tau) else {
        return Vec::new();
    };
    layout
        .iter()
        .enumerate()
        .map(|(k, &seg)| selection_range(s_len, l, tau, k + 1, seg, strategy).map_or_else(Vec::new, |(a, b)| (a..=b).collect()))
        .collect()
}

/// Substrings chosen per slot, as text.
pub fn select_substrings(s: &str, l: usize, tau: usize, strategy: Strategy) -> Vec<Vec<String>> {
    let chars: Vec<char> = s.chars().collect();
    let Some(layout) = partition_layout(l, tau) else {
        return Vec::new();
    };
    select_starts(chars.len(), l, tau, strategy)
        .into_iter()
        .zip(layout)
        .map(|(starts, seg)| starts.into_iter().map(|p| chars[p - 1..p - 1 + seg.len].iter().collect()).collect())
        .collect()
}

/// Left-part bound, or `None` when the right parts alone already exceed `tau`.
fn left_bound(r_len: usize, s_len: usize, seg: Segment, p: usize, slot: usize, tau: usize) -> Option<usize> {
    let rr = r_len + 1 - seg.start - seg.len;
    let sr = s_len + 1 - p - seg.len;
    let diff = rr.abs_diff(sr);
    (diff <= tau).then(|| (tau - diff).min(slot - 1))
}

/// Verify a segment match by extension; returns the exact edit distance when it is at most `tau`.
///
/// `slot` and `seg` locate the matched segment in `r`; `p` is the 1-based start of the equal substring in `s`.
pub fn extension_verify(r: &[char], s: &[char], slot: usize, seg: Segment, p: usize, tau: usize) -> Option<usize> {
    let tl = left_bound(r.len(), s.len(), seg, p, slot, tau)?;
    let dl = bounded_edit_distance(&r[..seg.start - 1], &s[..p - 1], tl)?;
    finish_right(r, s, slot, seg, p, tau, dl)
}

fn finish_right(r: &[char], s: &[char], slot: usize, seg: Segment, p: usize, tau: usize, dl: usize) -> Option<usize> {
    let tr = (tau + 1 - slot).min(tau - dl);
    bounded_edit_distance(&r[seg.start - 1 + seg.len..], &s[p - 1 + seg.len..], tr)?;
    bounded_edit_distance(r, s, tau)
}

/// Left-part verifier that reuses DP rows across a list of lexicographically sorted strings.
struct SharedLeft<'a> {
    s: &'a [char],
    bound: usize,
    prev: Vec<char>,
    rows: Vec<Vec<usize>>,
    dead: Option<usize>,
}

impl<'a> SharedLeft<'a> {
    fn new(s: &'a [char], bound: usize, r_len: usize) -> Self {
        let cap = bound + 1;
        let row0 = (0..=s.len()).map(|j| j.min(cap)).collect();
        let mut rows = Vec::with_capacity(r_len + 1);
        rows.push(row0);
        SharedLeft { s, bound, prev: Vec::new(), rows, dead: None }
    }

    fn verify(&mut self, r: &[char]) -> Option<usize> {
        let (n, m, b) = (r.len(), self.s.len(), self.bound);
        if n.abs_diff(m) > b {
            return None;
        }
        let lcp = r.iter().zip(&self.prev).take_while(|(a, c)| a == c).count().min(self.rows.len() - 1);
        self.rows.truncate(lcp + 1);
        self.prev.clear();
        self.prev.extend_from_slice(r);
        if self.dead.is_some_and(|d| d <= lcp) {
            return None;
        }
        self.dead = None;
        let cap = b + 1;
        for i in self.rows.len()..=n {
            let prev = &self.rows[i - 1];
            let mut row = vec![cap; m + 1];
            let lo = i.saturating_sub(b);
            let hi = (i + b).min(m);
            let mut best = cap;
            for j in lo..=hi {
                let v = if j == 0 {
                    i
                } else {
                    let sub = prev[j - 1] + usize::from(r[i - 1] != self.s[j - 1]);
                    sub.min(prev[j] + 1).min(row[j - 1] + 1)
                };
                row[j] = v.min(cap);
                best = best.min(row[j] + (m - j).abs_diff(n - i));
            }
            self.rows.push(row);
            if best > b {
                self.dead = Some(i);
                return None;
            }
        }
        let d = self.rows[n][m];
        (d <= b).then_some(d)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JoinCounters {
    /// Distinct (indexed, probe) pairs that reached verification.
    pub candidates: usize,
    /// Extension or direct verifications run.
    pub verifications: usize,
    pub substrings: usize,
    /// Sum of inverted-list lengths looked up.
    pub list_entries: usize,
    /// Most segment-index lengths alive at once.
    pub max_live_lengths: usize,
}

impl JoinCounters {
    fn add(mut self, o: JoinCounters) -> JoinCounters {
        self.candidates += o.candidates;
        self.verifications += o.verifications;
        self.substrings += o.substrings;
        self.list_entries += o.list_entries;
        self.max_live_lengths = self.max_live_lengths.max(o.max_live_lengths);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    pub value: SimValue,
}

#[derive(Clone, Debug, Default)]
pub struct JoinOutput {
    pub pairs: Vec<Pair>,
    pub counters: JoinCounters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JoinOptions {
    pub strategy: Strategy,
    pub shared_prefix: bool,
}

impl Default for JoinOptions {
    fn default() -> Self {
        JoinOptions { strategy: Strategy::MultiMatch, shared_prefix: true }
    }
}

struct LenIndex {
    tau: usize,
    layout: Vec<Segment>,
    slots: Vec<HashMap<Vec<char>, Vec<u32>>>,
}

impl LenIndex {
    fn new(len: usize, tau: usize) -> Self {
        let layout = partition_layout(len, tau).expect("indexed strings are longer than tau");
        LenIndex { tau, slots: vec![HashMap::new(); layout.len()], layout }
    }

    fn insert(&mut self, id: u32, r: &[char]) {
        for (seg, slot) in self.layout.iter().zip(&mut self.slots) {
            slot.entry(r[seg.start - 1..seg.start - 1 + seg.len].to_vec()).or_default().push(id);
        }
    }
}

/// Probe one length index with `s`; matches land in `found` as (record id, distance).
fn probe(
    li: &LenIndex,
    l: usize,
    recs: &[Vec<char>],
    s: &[char],
    opts: JoinOptions,
    found: &mut HashMap<u32, usize>,
    seen: &mut HashSet<u32>,
    c: &mut JoinCounters,
) {
    let tau = li.tau;
    for (k, (&seg, slot)) in li.layout.iter().zip(&li.slots).enumerate() {
        let i = k + 1;
        let Some((lo, hi)) = selection_range(s.len(), l, tau, i, seg, opts.strategy) else {
            continue;
        };
        for p in lo..=hi {
            c.substrings += 1;
            let Some(list) = slot.get(&s[p - 1..p - 1 + seg.len]) else {
                continue;
            };
            c.list_entries += list.len();
            let Some(tl) = left_bound(l, s.len(), seg, p, i, tau) else {
                continue;
            };
            let s_left = &s[..p - 1];
            let mut shared = opts.shared_prefix.then(|| SharedLeft::new(s_left, tl, seg.start - 1));
            for &rid in list {
                if found.contains_key(&rid) {
                    continue;
                }
                if seen.insert(rid) {
                    c.candidates += 1;
                }
                c.verifications += 1;
                let r = &recs[rid as usize];
                let r_left = &r[..seg.start - 1];
                let dl = match shared.as_mut() {
                    Some(v) => v.verify(r_left),
                    None => bounded_edit_distance(r_left, s_left, tl),
                };
                if let Some(d) = dl.and_then(|dl| finish_right(r, s, i, seg, p, tau, dl)) {
                    found.insert(rid, d);
                }
            }
        }
    }
}

fn to_chars<S: AsRef<str>>(records: &[S]) -> Vec<Vec<char>> {
    records.iter().map(|r| r.as_ref().chars().collect()).collect()
}

fn sorted_ids(recs: &[Vec<char>], descending: bool) -> Vec<u32> {
    let mut ids: Vec<u32> = (0..recs.len() as u32).collect();
    ids.sort_by(|&a, &b| {
        let (x, y) = (&recs[a as usize], &recs[b as usize]);
        let by_len = if descending { y.len().cmp(&x.len()) } else { x.len().cmp(&y.len()) };
        by_len.then_with(|| x.cmp(y)).then(a.cmp(&b))
    });
    ids
}

fn sort_pairs(pairs: &mut [Pair]) {
    pairs.sort_by_key(|p| (p.a, p.b));
}

/// Self join: every unordered pair with edit distance at most `tau`, ids 1-based with `a < b`.
pub fn join_ed_self<S: AsRef<str>>(records: &[S], tau: usize, opts: JoinOptions) -> JoinOutput {
    let recs = to_chars(records);
    let mut c = JoinCounters::default();
    let mut pairs = Vec::new();
    let mut index: BTreeMap<usize, LenIndex> = BTreeMap::new();
    let mut short: Vec<u32> = Vec::new();
    for sid in sorted_ids(&recs, false) {
        let s = &recs[sid as usize];
        let mut found = HashMap::new();
        let mut seen = HashSet::new();
        if s.len() > tau {
            for l in (s.len() - tau).max(tau + 1)..=s.len() {
                if let Some(li) = index.get(&l) {
                    probe(li, l, &recs, s, opts, &mut found, &mut seen, &mut c);
                }
            }
        }
        for &rid in &short {
            let r = &recs[rid as usize];
            if s.len() - r.len() <= tau {
                c.candidates += 1;
                c.verifications += 1;
                if let Some(d) = bounded_edit_distance(r, s, tau) {
                    found.insert(rid, d);
                }
            }
        }
        for (rid, d) in found {
            let (a, b) = (rid.min(sid) as usize + 1, rid.max(sid) as usize + 1);
            pairs.push(Pair { a, b, value: SimValue::Distance(d) });
        }
        if s.len() <= tau {
            short.push(sid);
        } else {
            index.entry(s.len()).or_insert_with(|| LenIndex::new(s.len(), tau)).insert(sid, s);
            let keep = index.split_off(&(s.len() - tau));
            index = keep;
        }
        c.max_live_lengths = c.max_live_lengths.max(index.len());
    }
    sort_pairs(&mut pairs);
    JoinOutput { pairs, counters: c }
}

/// R-S join: pairs `(r id, s id)` with edit distance at most `tau`.
///
/// `r_records` is indexed; `s_records` probes in parallel.
pub fn join_ed_rs<S: AsRef<str>, T: AsRef<str> + Sync>(r_records: &[S], s_records: &[T], tau: usize, opts: JoinOptions) -> JoinOutput {
    let recs = to_chars(r_records);
    let mut index: BTreeMap<usize, LenIndex> = BTreeMap::new();
    let mut short = Vec::new();
    for rid in sorted_ids(&recs, false) {
        let r = &recs[rid as usize];
        if r.len() <= tau {
            short.push(rid);
        } else {
            index.entry(r.len()).or_insert_with(|| LenIndex::new(r.len(), tau)).insert(rid, r);
        }
    }
    let live = index.len();
    let (mut pairs, c) = s_records
        .par_iter()
        .enumerate()
        .map(|(sid, s)| {
            let s: Vec<char> = s.as_ref().chars().collect();
            let mut c = JoinCounters::default();
            let mut found = HashMap::new();
            let mut seen = HashSet::new();
            for (&l, li) in index.range(s.len().saturating_sub(tau)..=s.len() + tau) {
                probe(li, l, &recs, &s, opts, &mut found, &mut seen, &mut c);
            }
            for &rid in &short {
                let r = &recs[rid as usize];
                if r.len().abs_diff(s.len()) <= tau {
                    c.candidates += 1;
                    c.verifications += 1;
                    if let Some(d) = bounded_edit_distance(r, &s, tau) {
                        found.insert(rid, d);
                    }
                }
            }
            let pairs: Vec<Pair> = found
                .into_iter()
                .map(|(rid, d)| Pair { a: rid as usize + 1, b: sid + 1, value: SimValue::Distance(d) })
                .collect();
            (pairs, c)
        })
        .reduce(|| (Vec::new(), JoinCounters::default()), |(mut p, c), (q, d)| {
            p.extend(q);
            (p, c.add(d))
        });
    sort_pairs(&mut pairs);
    JoinOutput { pairs, counters: JoinCounters { max_live_lengths: live, ..c } }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("record {id} is empty")]
pub struct EmptyRecord {
    pub id: usize,
}

/// Self join under edit similarity: every unordered pair with similarity at least `delta`.
pub fn join_eds<S: AsRef<str>>(records: &[S], delta: f64, opts: JoinOptions) -> Result<JoinOutput, EmptyRecord> {
    let recs = to_chars(records);
    if let Some(k) = recs.iter().position(Vec::is_empty) {
        return Err(EmptyRecord { id: k + 1 });
    }
    let mut c = JoinCounters::default();
    let mut pairs = Vec::new();
    let mut index: BTreeMap<usize, LenIndex> = BTreeMap::new();
    for sid in sorted_ids(&recs, true) {
        let s = &recs[sid as usize];
        let top = floor_g(s.len() as f64 / delta).max(s.len() as i64) as usize;
        let mut found = HashMap::new();
        let mut seen = HashSet::new();
        for (&l, li) in index.range(s.len()..=top) {
            if l - s.len() <= li.tau {
                probe(li, l, &recs, s, opts, &mut found, &mut seen, &mut c);
            }
        }
        for (rid, d) in found {
            let r = &recs[rid as usize];
            let v = eds_from_distance(d, r.len(), s.len());
            if v + EPS >= delta {
                let (a, b) = (rid.min(sid) as usize + 1, rid.max(sid) as usize + 1);
                pairs.push(Pair { a, b, value: SimValue::Score(v) });
            }
        }
        let tau = eds_distance_bound(delta, s.len());
        index.entry(s.len()).or_insert_with(|| LenIndex::new(s.len(), tau)).insert(sid, s);
        index.retain(|&l, _| l <= top);
        c.max_live_lengths = c.max_live_lengths.max(index.len());
    }
    sort_pairs(&mut pairs);
    Ok(JoinOutput { pairs, counters: c })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use super::Strategy;
    use crate::similarity::edit_distance;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) const TABLE_3_1: [&str; 6] = [
        "vankatesh",
        "avataresha",
        "kaushik chakrab",
        "kaushuk chadhui",
        "kausic chakduri",
        "caushik chakrabar",
    ];

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn even_partition() {
        let p = partition_even("vankatesh", 3).unwrap();
        let texts: Vec<&str> = p.segments.iter().map(|x| x.1.as_str()).collect();
        assert_eq!(texts, ["va", "nk", "at", "esh"]);
        let starts: Vec<usize> = p.segments.iter().map(|x| x.0.start).collect();
        assert_eq!(starts, [1, 3, 5, 7]);
        assert_eq!(partition_even("abc", 0).unwrap().segments[0].1, "abc");
        let eq = partition_layout(12, 3).unwrap();
        assert!(eq.iter().all(|s| s.len == 3));
        assert_eq!(partition_even("ab", 2), Err(ShortRecord { len: 2, tau: 2 }));
    }

    #[test]
    fn multimatch_example() {
        let w = select_substrings("avataresha", 9, 3, Strategy::MultiMatch);
        assert_eq!(w, [vec!["av"], vec!["va", "at", "ta"], vec!["ar", "re", "es"], vec!["sha"]]);
        let total: usize = w.iter().map(Vec::len).sum();
        assert_eq!(total, 8);
        assert_eq!(total, multimatch_formula(3, 1));
    }

    #[test]
    fn position_example() {
        let w = select_substrings("avataresha", 9, 3, Strategy::Position);
        assert_eq!(w[0], ["av", "va", "at"]);
        assert_eq!(w[1], ["va", "at", "ta", "ar"]);
        assert_eq!(w[2], ["ta", "ar", "re", "es"]);
        assert_eq!(w[3], ["res", "esh", "sha"]);
    }

    #[test]
    fn zero_tau_selects_the_string() {
        for st in Strategy::ALL {
            assert_eq!(select_substrings("abcd", 4, 0, st), [vec!["abcd"]]);
        }
    }

    #[test]
    fn extension_rejects_on_left() {
        let r = chars("kaushuk chadhui");
        let s = chars("caushik chakrabar");
        let layout = partition_layout(r.len(), 3).unwrap();
        let seg = layout[2];
        assert_eq!(r[seg.start - 1..seg.start - 1 + seg.len].iter().collect::<String>(), " cha");
        assert_eq!(left_bound(r.len(), s.len(), seg, 8, 3, 3), Some(1));
        assert_eq!(extension_verify(&r, &s, 3, seg, 8, 3), None);
        let x = chars("kaushik");
        assert_eq!(extension_verify(&x, &x, 1, partition_layout(7, 2).unwrap()[0], 1, 2), Some(0));
    }

    #[test]
    fn shared_left_matches_plain() {
        let s = chars("kaushik");
        let mut v = SharedLeft::new(&s, 2, 7);
        for r in ["kaushak", "kaushik", "kaushxx", "kbxxxxx", "kbushik", "zzzzzzz"] {
            let r = chars(r);
            assert_eq!(v.verify(&r), bounded_edit_distance(&r, &s, 2));
        }
    }

    #[test]
    fn table_joins() {
        let out = join_ed_self(&TABLE_3_1, 3, JoinOptions::default());
        let pairs: Vec<(usize, usize)> = out.pairs.iter().map(|p| (p.a, p.b)).collect();
        assert!(pairs.contains(&(3, 6)));
        assert!(!pairs.contains(&(1, 2)));
        let eds = join_eds(&TABLE_3_1, 0.82, JoinOptions::default()).unwrap();
        assert_eq!(eds.pairs.iter().map(|p| (p.a, p.b)).collect::<Vec<_>>(), [(3, 6)]);
        assert!(join_eds(&["a", ""], 0.9, JoinOptions::default()).is_err());
    }

    #[test]
    fn zero_tau_finds_duplicates() {
        let out = join_ed_self(&["ab", "cd", "ab", "a"], 0, JoinOptions::default());
        assert_eq!(out.pairs, [Pair { a: 1, b: 3, value: SimValue::Distance(0) }]);
        let out = join_eds(&["ab", "cd", "ab"], 1.0, JoinOptions::default()).unwrap();
        assert_eq!(out.pairs.len(), 1);
    }

    #[test]
    fn short_records_fall_back() {
        let out = join_ed_self(&["a", "ab", "", "abcd", "xbcd"], 2, JoinOptions::default());
        let got: Vec<(usize, usize)> = out.pairs.iter().map(|p| (p.a, p.b)).collect();
        assert_eq!(got, [(1, 2), (1, 3), (2, 3), (2, 4), (4, 5)]);
    }

    fn multimatch_formula(tau: usize, delta: usize) -> usize {
        (tau * tau - delta * delta) / 2 + tau + 1
    }

    fn random_strings(rng: &mut ChaCha8Rng, n: usize, lo: usize, hi: usize, alpha: &[u8]) -> Vec<String> {
        let mut v: Vec<String> = Vec::with_capacity(n);
        for _ in 0..n {
            if !v.is_empty() && rng.gen_bool(0.3) {
                // mutate an earlier string so near pairs exist
                let base: Vec<u8> = v[rng.gen_range(0..v.len())].bytes().collect();
                let mut b = base.clone();
                for _ in 0..rng.gen_range(0..4) {
                    let k = rng.gen_range(0..=b.len());
                    match rng.gen_range(0..3) {
                        0 if k < b.len() => b[k] = alpha[rng.gen_range(0..alpha.len())],
                        1 if k < b.len() && b.len() > lo => {
                            b.remove(k);
                        }
                        _ if b.len() < hi => b.insert(k, alpha[rng.gen_range(0..alpha.len())]),
                        _ => {}
                    }
                }
                v.push(String::from_utf8(b).unwrap());
            } else {
                let len = rng.gen_range(lo..=hi);
                v.push((0..len).map(|_| alpha[rng.gen_range(0..alpha.len())] as char).collect());
            }
        }
        v
    }

    fn brute(records: &[String], tau: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..records.len() {
            for j in i + 1..records.len() {
                let d = edit_distance(&chars(&records[i]), &chars(&records[j]));
                if d <= tau {
                    out.push((i + 1, j + 1, d));
                }
            }
        }
        out
    }

    fn triples(out: &JoinOutput) -> Vec<(usize, usize, usize)> {
        out.pairs.iter().map(|p| (p.a, p.b, p.value.as_f64() as usize)).collect()
    }

    #[test]
    fn strategies_and_sharing_agree_with_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for tau in 0..4 {
            let recs = random_strings(&mut rng, 200, 0, 14, b"abc");
            let want = brute(&recs, tau);
            for st in Strategy::ALL {
                for shared in [false, true] {
                    let out = join_ed_self(&recs, tau, JoinOptions { strategy: st, shared_prefix: shared });
                    assert_eq!(triples(&out), want, "tau {tau} {st:?} shared {shared}");
                    assert!(out.counters.max_live_lengths <= tau + 1);
                }
            }
        }
    }

    #[test]
    fn rs_join_agrees_with_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = random_strings(&mut rng, 120, 1, 12, b"ab");
        let s = random_strings(&mut rng, 120, 1, 12, b"ab");
        for tau in 0..4 {
            let mut want = Vec::new();
            for (i, x) in r.iter().enumerate() {
                for (j, y) in s.iter().enumerate() {
                    let d = edit_distance(&chars(x), &chars(y));
                    if d <= tau {
                        want.push((i + 1, j + 1, d));
                    }
                }
            }
            for st in Strategy::ALL {
                let out = join_ed_rs(&r, &s, tau, JoinOptions { strategy: st, shared_prefix: true });
                assert_eq!(triples(&out), want, "tau {tau} {st:?}");
            }
        }
    }

    #[test]
    fn eds_join_agrees_with_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let recs = random_strings(&mut rng, 250, 1, 20, b"abc");
        for delta in [0.6, 0.75, 0.8, 0.9, 1.0] {
            let mut want = Vec::new();
            for i in 0..recs.len() {
                for j in i + 1..recs.len() {
                    let (a, b) = (chars(&recs[i]), chars(&recs[j]));
                    let v = 1.0 - edit_distance(&a, &b) as f64 / a.len().max(b.len()) as f64;
                    if v + 1e-9 >= delta {
                        want.push((i + 1, j + 1));
                    }
                }
            }
            for st in Strategy::ALL {
                let out = join_eds(&recs, delta, JoinOptions { strategy: st, shared_prefix: st == Strategy::MultiMatch }).unwrap();
                let got: Vec<(usize, usize)> = out.pairs.iter().map(|p| (p.a, p.b)).collect();
                assert_eq!(got, want, "delta {delta} {st:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn selection_chain(s_len in 1usize..60, tau in 0usize..6, d in 0usize..6, neg in any::<bool>()) {
            let d = d.min(tau);
            let l = if neg { s_len + d } else { s_len.saturating_sub(d) };
            prop_assume!(l > tau);
            let sets: Vec<Vec<Vec<usize>>> = Strategy::ALL.iter().map(|&st| select_starts(s_len, l, tau, st)).collect();
            for k in 0..=tau {
                for w in sets.windows(2) {
                    prop_assert!(w[1][k].iter().all(|p| w[0][k].contains(p)));
                }
            }
        }

        #[test]
        fn shared_prefix_is_transparent(s in "[ab]{0,10}", rs in proptest::collection::vec("[ab]{6}", 1..12), b in 0usize..4) {
            let s = chars(&s);
            let mut rs: Vec<Vec<char>> = rs.iter().map(|x| chars(x)).collect();
            rs.sort();
            let mut v = SharedLeft::new(&s, b, 6);
            for r in &rs {
                prop_assert_eq!(v.verify(r), bounded_edit_distance(r, &s, b));
            }
        }

        #[test]
        fn extension_matches_some_slot(r in "[abc]{2,14}", s in "[abc]{0,16}", tau in 1usize..4) {
            let (r, s) = (chars(&r), chars(&s));
            prop_assume!(r.len() > tau);
            let truth = edit_distance(&r, &s);
            let layout = partition_layout(r.len(), tau).unwrap();
            let mut any = None;
            for (k, &seg) in layout.iter().enumerate() {
                if seg.len > s.len() { continue; }
                for p in 1..=s.len() + 1 - seg.len {
                    if s[p - 1..p - 1 + seg.len] == r[seg.start - 1..seg.start - 1 + seg.len] {
                        if let Some(d) = extension_verify(&r, &s, k + 1, seg, p, tau) {
                            prop_assert_eq!(d, truth);
                            any = Some(d);
                        }
                    }
                }
            }
            prop_assert_eq!(any.is_some(), truth <= tau);
        }
    }

    #[test]
    fn multimatch_count_formula() {
        for tau in 0..=5usize {
            for d in 0..=tau {
                for s_len in 1..=60usize {
                    let l = match s_len.checked_sub(d) {
                        Some(l) if l > tau => l,
                        _ => continue,
                    };
                    let layout = partition_layout(l, tau).unwrap();
                    // skip instances where some raw interval gets clamped by the string ends
                    let clamped = layout.iter().enumerate().any(|(k, seg)| {
                        let (p, i, t, dd) = (seg.start as i64, k as i64 + 1, tau as i64, d as i64);
                        let lo = (p - (i - 1)).max(p + dd - (t + 1 - i));
                        let hi = (p + (i - 1)).min(p + dd + (t + 1 - i));
                        lo < 1 || hi > (s_len - seg.len + 1) as i64
                    });
                    if clamped {
                        continue;
                    }
                    let n: usize = select_starts(s_len, l, tau, Strategy::MultiMatch).iter().map(Vec::len).sum();
                    assert_eq!(n, multimatch_formula(tau, d), "s {s_len} tau {tau} d {d}");
                }
            }
        }
    }

    #[test]
    fn multimatch_is_smallest_complete_strategy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let tau: usize = rng.gen_range(1..4);
            let s_len = rng.gen_range(tau + 1..30);
            let l = rng.gen_range(s_len.saturating_sub(tau).max(tau + 1)..=s_len);
            let n: Vec<usize> = Strategy::ALL
                .iter()
                .map(|&st| select_starts(s_len, l, tau, st).iter().map(Vec::len).sum())
                .collect();
            assert!(n[3] <= n[2] && n[2] <= n[1] && n[1] <= n[0]);
        }
    }
}
