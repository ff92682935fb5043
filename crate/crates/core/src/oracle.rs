//! Brute-force references: all pairs, all substrings, all subsets.
//!
//! Nothing here calls engine code; only plain data types are shared.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::faerie::Match;
use crate::setjoin::CostTriple;
use crate::similarity::{SimFn, SimValue, SimilaritySpec};
use crate::tokenize::PositionalGram;

const SLACK: f64 = 1e-9;
pub const MAX_SLOTS: usize = 12;
pub const MAX_PREFIX: usize = 13;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle instance too large: {what} = {size} exceeds {cap}")]
    TooLarge { what: &'static str, size: usize, cap: usize },
}

/// Full-matrix Levenshtein distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        m[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            m[i][j] = sub.min(m[i - 1][j] + 1).min(m[i][j - 1] + 1);
        }
    }
    m[a.len()][b.len()]
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

fn eds(a: &[char], b: &[char]) -> Option<f64> {
    let mx = a.len().max(b.len());
    (mx > 0).then(|| 1.0 - levenshtein(a, b) as f64 / mx as f64)
}

fn sorted_view<'a>(a: &[&'a str], as_set: bool) -> Vec<&'a str> {
    let mut x = a.to_vec();
    x.sort_unstable();
    if as_set {
        x.dedup();
    }
    x
}

/// Score of two sorted token bags.
fn token_score(func: SimFn, x: &[&str], y: &[&str]) -> Option<f64> {
    if x.is_empty() || y.is_empty() {
        return None;
    }
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < x.len() && j < y.len() {
        if x[i] == y[j] {
            common += 1;
            i += 1;
            j += 1;
        } else if x[i] < y[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    let (o, p, q) = (common as f64, x.len() as f64, y.len() as f64);
    Some(match func {
        SimFn::Jac => o / (p + q - o),
        SimFn::Cos => o / (p * q).sqrt(),
        SimFn::Dice => 2.0 * o / (p + q),
        SimFn::Ed | SimFn::Eds => unreachable!("string similarity"),
    })
}

fn pairs_of(n: usize, m: Option<usize>) -> Vec<(usize, usize)> {
    match m {
        None => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Some(m) => (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect(),
    }
}

/// `(a, b, distance)` with 1-based ids; `a < b` for a self join.
pub fn brute_join_ed<S: AsRef<str>>(r: &[S], s: Option<&[S]>, tau: usize) -> Vec<(usize, usize, usize)> {
    let rc: Vec<Vec<char>> = r.iter().map(|x| chars(x.as_ref())).collect();
    let sc: Vec<Vec<char>> = s.map_or_else(|| rc.clone(), |s| s.iter().map(|x| chars(x.as_ref())).collect());
    pairs_of(rc.len(), s.map(|s| s.len()))
        .into_iter()
        .filter_map(|(i, j)| {
            let d = levenshtein(&rc[i], &sc[j]);
            (d <= tau).then_some((i + 1, j + 1, d))
        })
        .collect()
}

/// Self join under edit similarity; pairs involving an empty record are skipped.
pub fn brute_join_eds<S: AsRef<str>>(r: &[S], delta: f64) -> Vec<(usize, usize, f64)> {
    let rc: Vec<Vec<char>> = r.iter().map(|x| chars(x.as_ref())).collect();
    pairs_of(rc.len(), None)
        .into_iter()
        .filter_map(|(i, j)| {
            let v = eds(&rc[i], &rc[j])?;
            (v + SLACK >= delta).then_some((i + 1, j + 1, v))
        })
        .collect()
}

/// Set join over token sets (repeats ignored); empty sets never pair.
pub fn brute_join_set<S: AsRef<str>>(r: &[Vec<S>], s: Option<&[Vec<S>]>, func: SimFn, delta: f64) -> Vec<(usize, usize, f64)> {
    let view = |v: &'_ [Vec<S>]| -> Vec<Vec<String>> {
        v.iter()
            .map(|x| {
                let t: Vec<&str> = x.iter().map(AsRef::as_ref).collect();
                sorted_view(&t, true).into_iter().map(str::to_string).collect()
            })
            .collect()
    };
    let rv = view(r);
    let sv = s.map_or_else(|| rv.clone(), view);
    pairs_of(rv.len(), s.map(|s| s.len()))
        .into_iter()
        .filter_map(|(i, j)| {
            let a: Vec<&str> = rv[i].iter().map(String::as_str).collect();
            let b: Vec<&str> = sv[j].iter().map(String::as_str).collect();
            let v = token_score(func, &a, &b)?;
            (v + SLACK >= delta).then_some((i + 1, j + 1, v))
        })
        .collect()
}

/// Records within edit distance `tau` of `query`, as `(id, distance)`.
pub fn brute_search<S: AsRef<str>>(records: &[S], query: &str, tau: usize) -> Vec<(usize, usize)> {
    let q = chars(query);
    records
        .iter()
        .enumerate()
        .filter_map(|(k, r)| {
            let d = levenshtein(&chars(r.as_ref()), &q);
            (d <= tau).then_some((k + 1, d))
        })
        .collect()
}

/// Every (substring, entity) pair meeting `spec`, sorted by entity then span.
///
/// ED/EDS consider character substrings holding at least one q-gram; the set
/// similarities consider runs of whitespace-separated words.
pub fn brute_extract<S: AsRef<str>>(dictionary: &[S], document: &str, spec: &SimilaritySpec) -> Vec<Match> {
    let mut out = Vec::new();
    if spec.func.is_string_based() {
        let d = chars(document);
        for (k, e) in dictionary.iter().enumerate() {
            let e = chars(e.as_ref());
            // longer substrings cannot reach the threshold
            let max_len = match spec.func {
                SimFn::Ed => e.len() + spec.tau,
                _ => (e.len() as f64 / spec.delta).floor() as usize + 1,
            };
            for start in 0..d.len() {
                for len in spec.q..=max_len.min(d.len() - start) {
                    let sub = &d[start..start + len];
                    let value = if spec.func == SimFn::Ed {
                        let x = levenshtein(&e, sub);
                        if x > spec.tau {
                            continue;
                        }
                        SimValue::Distance(x)
                    } else {
                        match eds(&e, sub) {
                            Some(v) if v + SLACK >= spec.delta => SimValue::Score(v),
                            _ => continue,
                        }
                    };
                    out.push(Match { entity: k + 1, start: start + 1, end: start + len, value });
                }
            }
        }
    } else {
        let words: Vec<&str> = document.split_whitespace().collect();
        for (k, e) in dictionary.iter().enumerate() {
            let et = sorted_view(&e.as_ref().split_whitespace().collect::<Vec<_>>(), false);
            let max_len = (et.len() as f64 / (spec.delta * spec.delta)).floor() as usize + 1;
            for start in 0..words.len() {
                for len in 1..=max_len.min(words.len() - start) {
                    let window = sorted_view(&words[start..start + len], false);
                    let Some(v) = token_score(spec.func, &et, &window) else { continue };
                    if v + SLACK >= spec.delta {
                        out.push(Match { entity: k + 1, start: start + 1, end: start + len, value: SimValue::Score(v) });
                    }
                }
            }
        }
    }
    out.sort_by_key(|m| (m.entity, m.start, m.end));
    out
}

/// Cheapest 0/1/2 vector summing to `target`, by enumerating all `3^m` vectors.
pub fn brute_allocation(costs: &[CostTriple], target: usize) -> Result<Option<(Vec<u8>, u64)>, OracleError> {
    let m = costs.len();
    if m > MAX_SLOTS {
        return Err(OracleError::TooLarge { what: "slots", size: m, cap: MAX_SLOTS });
    }
    let mut best: Option<(Vec<u8>, u64)> = None;
    let mut v = vec![0u8; m];
    for code in 0..3usize.pow(m as u32) {
        let mut c = code;
        for x in v.iter_mut() {
            *x = (c % 3) as u8;
            c /= 3;
        }
        if v.iter().map(|&x| x as usize).sum::<usize>() != target {
            continue;
        }
        let cost: u64 = v.iter().zip(costs).map(|(&x, t)| [0, t.c1, t.c2][x as usize]).sum();
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((v.clone(), cost));
        }
    }
    Ok(best)
}

/// Minimum total weight of `tau + 1` pairwise disjoint grams, over all subsets.
pub fn brute_pivots(prefix: &[PositionalGram], weights: &[u64], tau: usize, q: usize) -> Result<Option<u64>, OracleError> {
    let n = prefix.len();
    if n > MAX_PREFIX {
        return Err(OracleError::TooLarge { what: "prefix grams", size: n, cap: MAX_PREFIX });
    }
    let mut best: Option<u64> = None;
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != tau + 1 {
            continue;
        }
        let chosen: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
        let apart = chosen
            .iter()
            .all(|&a| chosen.iter().all(|&b| a >= b || prefix[a].pos.abs_diff(prefix[b].pos) >= q));
        if apart {
            let w = chosen.iter().map(|&k| weights[k]).sum();
            best = Some(best.map_or(w, |b: u64| b.min(w)));
        }
    }
    Ok(best)
}

/// Minimum edit distance between `g` and any substring of `window`, the empty one included.
pub fn brute_sed(g: &[char], window: &[char]) -> usize {
    let mut best = g.len();
    for a in 0..=window.len() {
        for b in a..=window.len() {
            best = best.min(levenshtein(g, &window[a..b]));
        }
    }
    best
}

/// Distinct ids appearing in a pair list.
pub fn ids_in<T>(pairs: &[(usize, usize, T)]) -> BTreeSet<usize> {
    pairs.iter().flat_map(|p| [p.0, p.1]).collect()
}
