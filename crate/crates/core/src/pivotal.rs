//! Threshold edit-distance search with pivotal prefixes and the alignment filter.
//!
//! Each record keeps, for every threshold up to `tau_max`, its prefix (the
//! `q*tau + 1` rarest positional grams) and a pivotal set of `tau + 1`
//! disjoint prefix grams. Prefix grams go to incremental lists `I^+_t` and
//! pivots to `I^-_t`; both are grouped by record length.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::similarity::bounded_edit_distance;
use crate::tokenize::{ordered_grams, qgrams, GlobalOrder, PositionalGram};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("record {id} is shorter than q = {q}")]
    ShortRecord { id: usize, q: usize },
    #[error("tau {tau} exceeds the index maximum {tau_max}")]
    TauTooLarge { tau: usize, tau_max: usize },
    #[error("only {found} disjoint grams available, {needed} needed")]
    NotEnoughDisjoint { found: usize, needed: usize },
    #[error("gram length must be positive")]
    GramLength,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PivotMode {
    Random,
    Optimal,
}

/// Global order of the five-record example corpus, ties as listed there.
pub fn table_5_1_order() -> GlobalOrder {
    let ranked = [
        ("im", 1),
        ("my", 1),
        ("te", 1),
        ("bu", 1),
        ("un", 1),
        ("nt", 1),
        ("uc", 1),
        ("bb", 1),
        ("tb", 1),
        ("oy", 1),
        ("yt", 1),
        ("ca", 2),
        ("om", 2),
        ("yo", 3),
        ("ou", 3),
        ("ut", 3),
        ("ub", 3),
        ("co", 3),
        ("tu", 3),
        ("be", 3),
        ("ec", 4),
    ];
    GlobalOrder::from_ranking(ranked.into_iter().map(|(t, f)| (t.to_string(), f)))
}

fn disjoint(a: &PositionalGram, b: &PositionalGram, q: usize) -> bool {
    a.pos.abs_diff(b.pos) >= q
}

/// Minimum-weight `tau + 1` pairwise disjoint grams.
///
/// `grams` must be sorted by position. Returns indices into `grams`, ascending.
pub fn select_pivots(grams: &[PositionalGram], weights: &[u64], tau: usize, q: usize) -> Result<(Vec<usize>, u64), SearchError> {
    let n = grams.len();
    let need = tau + 1;
    debug_assert!(grams.windows(2).all(|w| w[0].pos < w[1].pos));
    const INF: u64 = u64::MAX;
    // w[i][j]: best weight choosing j grams among the first i; from[i][j]: chosen last index
    let mut w = vec![vec![INF; need + 1]; n + 1];
    let mut from = vec![vec![usize::MAX; need + 1]; n + 1];
    let prev_disjoint: Vec<Option<usize>> = (0..n).map(|k| (0..k).rev().find(|&k2| disjoint(&grams[k2], &grams[k], q))).collect();
    for i in 1..=n {
        let k = i - 1;
        // j = 1
        if w[i - 1][1] <= weights[k] && i > 1 {
            w[i][1] = w[i - 1][1];
            from[i][1] = from[i - 1][1];
        } else {
            w[i][1] = weights[k];
            from[i][1] = k;
        }
        for j in 2..=need {
            w[i][j] = w[i - 1][j];
            from[i][j] = from[i - 1][j];
            if let Some(k2) = prev_disjoint[k] {
                let base = w[k2 + 1][j - 1];
                if base != INF && base + weights[k] < w[i][j] {
                    w[i][j] = base + weights[k];
                    from[i][j] = k;
                }
            }
        }
    }
    if n == 0 || w[n][need] == INF {
        let found = reference_sweep(grams, q).len();
        return Err(SearchError::NotEnoughDisjoint { found, needed: need });
    }
    let mut out = Vec::with_capacity(need);
    let (mut i, mut j) = (n, need);
    while j > 0 {
        let k = from[i][j];
        out.push(k);
        j -= 1;
        if j > 0 {
            i = prev_disjoint[k].expect("chosen gram has a disjoint predecessor") + 1;
        }
    }
    out.reverse();
    let total = out.iter().map(|&k| weights[k]).sum();
    Ok((out, total))
}

/// Greedy disjoint references over position-sorted grams.
fn reference_sweep(grams: &[PositionalGram], q: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for (k, g) in grams.iter().enumerate() {
        if out.last().is_none_or(|&r| disjoint(&grams[r], g, q)) {
            out.push(k);
        }
    }
    out
}

/// First-fit pivots in global order, falling back to the positional sweep.
pub fn random_pivots(ordered: &[PositionalGram], tau: usize, q: usize) -> Result<Vec<PositionalGram>, SearchError> {
    let mut picked: Vec<&PositionalGram> = Vec::new();
    for g in ordered {
        if picked.len() == tau + 1 {
            break;
        }
        if picked.iter().all(|p| disjoint(p, g, q)) {
            picked.push(g);
        }
    }
    if picked.len() == tau + 1 {
        let mut v: Vec<PositionalGram> = picked.into_iter().cloned().collect();
        v.sort_by_key(|g| g.pos);
        return Ok(v);
    }
    let mut by_pos = ordered.to_vec();
    by_pos.sort_by_key(|g| g.pos);
    let refs = reference_sweep(&by_pos, q);
    if refs.len() < tau + 1 {
        return Err(SearchError::NotEnoughDisjoint { found: refs.len(), needed: tau + 1 });
    }
    Ok(refs[..tau + 1].iter().map(|&k| by_pos[k].clone()).collect())
}

/// Fewest edits that destroy every gram in `grams` (minimum stabbing of their spans).
fn destroy_cost(grams: &[&PositionalGram], q: usize) -> usize {
    let mut spans: Vec<(usize, usize)> = grams.iter().map(|g| (g.pos + q - 1, g.pos)).collect();
    spans.sort_unstable();
    let mut last = 0;
    let mut n = 0;
    for (end, start) in spans {
        if n == 0 || start > last {
            n += 1;
            last = end;
        }
    }
    n
}

/// `g_i`: first gram in global order whose destruction, with all earlier ones, needs at least `i + 1` edits.
pub fn boundary_grams(ordered: &[PositionalGram], q: usize, tau_max: usize) -> Vec<PositionalGram> {
    let mut out = Vec::new();
    let mut seen: Vec<&PositionalGram> = Vec::new();
    for g in ordered {
        seen.push(g);
        if destroy_cost(&seen, q) > out.len() {
            out.push(g.clone());
            if out.len() > tau_max {
                break;
            }
        }
    }
    out
}

/// Minimum edit distance between `g` and any substring of `r` within `tau` of `g.pos`,
/// or `None` once it must exceed `budget`.
pub fn substring_ed(g: &[char], pos: usize, r: &[char], tau: usize, budget: usize) -> Option<usize> {
    let lo = pos.saturating_sub(tau).max(1);
    let hi = (pos + g.len() - 1 + tau).min(r.len());
    let window: &[char] = if lo <= hi { &r[lo - 1..hi] } else { &[] };
    sed(g, window, budget)
}

fn sed(g: &[char], w: &[char], budget: usize) -> Option<usize> {
    let mut prev = vec![0usize; w.len() + 1];
    let mut cur = vec![0usize; w.len() + 1];
    for (i, &c) in g.iter().enumerate() {
        cur[0] = i + 1;
        let mut best = cur[0];
        for j in 1..=w.len() {
            cur[j] = (prev[j - 1] + usize::from(c != w[j - 1])).min(prev[j] + 1).min(cur[j - 1] + 1);
            best = best.min(cur[j]);
        }
        if best > budget {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev.iter().copied().min().unwrap_or(0);
    (d <= budget).then_some(d)
}

/// True when `r` survives: the pivots' substring edit distances sum to at most `tau`.
pub fn alignment_filter(pivots: &[(Vec<char>, usize)], r: &[char], tau: usize) -> bool {
    let mut acc = 0;
    for (g, pos) in pivots {
        match substring_ed(g, *pos, r, tau, tau - acc) {
            Some(d) => acc += d,
            None => return false,
        }
    }
    true
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    len: u32,
    rid: u32,
    pos: u32,
}

type Lists = HashMap<String, Vec<Entry>>;

/// Entries of `list` whose record length lies in `[lo, hi]`.
fn by_length(list: &[Entry], lo: usize, hi: usize) -> &[Entry] {
    let a = list.partition_point(|e| (e.len as usize) < lo);
    let b = list.partition_point(|e| (e.len as usize) <= hi);
    &list[a..b.max(a)]
}

#[derive(Clone, Debug)]
struct LastGram {
    rank: usize,
    text: String,
}

pub struct SearchIndex {
    q: usize,
    tau_max: usize,
    order: GlobalOrder,
    records: Vec<Vec<char>>,
    /// Record ids ascending by length.
    by_len: Vec<u32>,
    plus: Vec<Lists>,
    minus: Vec<Lists>,
    /// Per threshold, per record: last prefix gram, or `None` when the record has too few grams.
    last: Vec<Vec<Option<LastGram>>>,
    pivots: PivotMode,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchCounters {
    /// Distinct records passing the prefix, length and position filters.
    pub candidates: usize,
    /// Candidates surviving the alignment filter.
    pub aligned: usize,
    /// Inverted-list entries scanned.
    pub probed: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub pivots: PivotMode,
    pub align: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { pivots: PivotMode::Optimal, align: true }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchOutput {
    /// `(record id, edit distance)`, ids 1-based and ascending.
    pub results: Vec<(usize, usize)>,
    /// Candidate ids before the alignment filter, ascending.
    pub candidates: Vec<usize>,
    pub counters: SearchCounters,
}

fn push(lists: &mut Lists, g: &PositionalGram, rid: u32, len: usize) {
    lists.entry(g.text.clone()).or_default().push(Entry { len: len as u32, rid, pos: g.pos as u32 });
}

impl SearchIndex {
    pub fn build<S: AsRef<str>>(records: &[S], q: usize, tau_max: usize, pivots: PivotMode) -> Result<Self, SearchError> {
        if q == 0 {
            return Err(SearchError::GramLength);
        }
        let chars: Vec<Vec<char>> = records.iter().map(|r| r.as_ref().chars().collect()).collect();
        let grams: Vec<Vec<PositionalGram>> = chars.iter().map(|c| qgrams(c, q)).collect();
        let order = GlobalOrder::build(&grams);
        Self::build_with_order(records, q, tau_max, pivots, order)
    }

    pub fn build_with_order<S: AsRef<str>>(
        records: &[S],
        q: usize,
        tau_max: usize,
        pivots: PivotMode,
        order: GlobalOrder,
    ) -> Result<Self, SearchError> {
        if q == 0 {
            return Err(SearchError::GramLength);
        }
        let records: Vec<Vec<char>> = records.iter().map(|r| r.as_ref().chars().collect()).collect();
        if let Some(k) = records.iter().position(|r| r.len() < q) {
            return Err(SearchError::ShortRecord { id: k + 1, q });
        }
        let mut by_len: Vec<u32> = (0..records.len() as u32).collect();
        by_len.sort_by_key(|&i| (records[i as usize].len(), i));
        let mut plus = vec![Lists::new(); tau_max + 1];
        let mut minus = vec![Lists::new(); tau_max + 1];
        let mut last = vec![vec![None; records.len()]; tau_max + 1];
        for &rid in &by_len {
            let r = &records[rid as usize];
            let ordered = ordered_grams(&qgrams(r, q), &order);
            for t in 0..=tau_max {
                let lo = if t == 0 { 0 } else { q * (t - 1) + 1 };
                let hi = (q * t + 1).min(ordered.len());
                for g in ordered.get(lo..hi).unwrap_or(&[]) {
                    push(&mut plus[t], g, rid, r.len());
                }
                if ordered.len() < q * t + 1 {
                    continue;
                }
                let pre = &ordered[..q * t + 1];
                let lg = &pre[q * t];
                last[t][rid as usize] = Some(LastGram { rank: order.rank(&lg.text), text: lg.text.clone() });
                let piv = match pivots {
                    PivotMode::Optimal => {
                        let mut by_pos = pre.to_vec();
                        by_pos.sort_by_key(|g| g.pos);
                        let w: Vec<u64> = by_pos.iter().map(|g| order.frequency(&g.text) as u64).collect();
                        let (idx, _) = select_pivots(&by_pos, &w, t, q)?;
                        idx.into_iter().map(|k| by_pos[k].clone()).collect()
                    }
                    PivotMode::Random => random_pivots(pre, t, q)?,
                };
                for g in &piv {
                    push(&mut minus[t], g, rid, r.len());
                }
            }
        }
        Ok(SearchIndex { q, tau_max, order, records, by_len, plus, minus, last, pivots })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn order(&self) -> &GlobalOrder {
        &self.order
    }

    /// Prefix-list entries `(record id, position)` of `gram` at exactly level `t`.
    pub fn prefix_entries(&self, t: usize, gram: &str) -> Vec<(usize, usize)> {
        self.plus[t].get(gram).map_or_else(Vec::new, |l| l.iter().map(|e| (e.rid as usize + 1, e.pos as usize)).collect())
    }

    /// Pivot-list entries `(record id, position)` of `gram` at level `t`.
    pub fn pivot_entries(&self, t: usize, gram: &str) -> Vec<(usize, usize)> {
        self.minus[t].get(gram).map_or_else(Vec::new, |l| l.iter().map(|e| (e.rid as usize + 1, e.pos as usize)).collect())
    }

    fn compare_last(&self, a: &LastGram, rank: usize, text: &str) -> Ordering {
        a.rank.cmp(&rank).then_with(|| a.text.as_str().cmp(text))
    }

    pub fn search(&self, query: &str, tau: usize, opts: SearchOptions) -> Result<SearchOutput, SearchError> {
        if tau > self.tau_max {
            return Err(SearchError::TauTooLarge { tau, tau_max: self.tau_max });
        }
        let q = self.q;
        let s: Vec<char> = query.chars().collect();
        let (lo, hi) = (s.len().saturating_sub(tau), s.len() + tau);
        let ordered = ordered_grams(&qgrams(&s, q), &self.order);
        let mut c = SearchCounters::default();
        let mut is_cand = vec![false; self.records.len()];
        let mut pivots: Vec<(Vec<char>, usize)> = Vec::new();

        let a = self.by_len.partition_point(|&i| self.records[i as usize].len() < lo);
        let b = self.by_len.partition_point(|&i| self.records[i as usize].len() <= hi);
        let in_range = &self.by_len[a..b.max(a)];

        if ordered.len() < q * tau + 1 {
            for &rid in in_range {
                is_cand[rid as usize] = true;
            }
        } else {
            let pre = &ordered[..q * tau + 1];
            let ls = &pre[q * tau];
            let (ls_rank, ls_text) = (self.order.rank(&ls.text), ls.text.as_str());
            let piv: Vec<PositionalGram> = match opts.pivots {
                PivotMode::Optimal => {
                    let mut by_pos = pre.to_vec();
                    by_pos.sort_by_key(|g| g.pos);
                    let w: Vec<u64> = by_pos
                        .iter()
                        .map(|g| (0..=tau).map(|t| self.plus[t].get(&g.text).map_or(0, |l| by_length(l, lo, hi).len() as u64)).sum())
                        .collect();
                    let (idx, _) = select_pivots(&by_pos, &w, tau, q)?;
                    idx.into_iter().map(|k| by_pos[k].clone()).collect()
                }
                PivotMode::Random => random_pivots(pre, tau, q)?,
            };
            for g in &piv {
                for t in 0..=tau {
                    let Some(list) = self.plus[t].get(&g.text) else { continue };
                    for e in by_length(list, lo, hi) {
                        c.probed += 1;
                        let Some(lr) = &self.last[tau][e.rid as usize] else { continue };
                        if self.compare_last(lr, ls_rank, ls_text) != Ordering::Less && (e.pos as usize).abs_diff(g.pos) <= tau {
                            is_cand[e.rid as usize] = true;
                        }
                    }
                }
            }
            for g in pre {
                let Some(list) = self.minus[tau].get(&g.text) else { continue };
                for e in by_length(list, lo, hi) {
                    c.probed += 1;
                    let Some(lr) = &self.last[tau][e.rid as usize] else { continue };
                    if self.compare_last(lr, ls_rank, ls_text) != Ordering::Greater && (e.pos as usize).abs_diff(g.pos) <= tau {
                        is_cand[e.rid as usize] = true;
                    }
                }
            }
            for &rid in in_range {
                if self.last[tau][rid as usize].is_none() {
                    is_cand[rid as usize] = true;
                }
            }
            pivots = piv.iter().map(|g| (g.text.chars().collect(), g.pos)).collect();
        }

        let mut out = SearchOutput { counters: c, ..Default::default() };
        for (rid, _) in is_cand.iter().enumerate().filter(|x| *x.1) {
            out.counters.candidates += 1;
            out.candidates.push(rid + 1);
            let r = &self.records[rid];
            if opts.align && !pivots.is_empty() && !alignment_filter(&pivots, r, tau) {
                continue;
            }
            out.counters.aligned += 1;
            if let Some(d) = bounded_edit_distance(r, &s, tau) {
                out.results.push((rid + 1, d));
            }
        }
        Ok(out)
    }

    /// Queries processed in parallel; results keep query order.
    pub fn search_many<S: AsRef<str> + Sync>(&self, queries: &[S], tau: usize, opts: SearchOptions) -> Result<Vec<SearchOutput>, SearchError> {
        queries.par_iter().map(|s| self.search(s.as_ref(), tau, opts)).collect()
    }

    pub fn pivot_mode(&self) -> PivotMode {
        self.pivots
    }
}
