//! Partition-based set similarity joins with 1-deletion neighborhoods.
//!
//! Sets are grouped by size; within a group every set is split into
//! `m = H_l + 1` disjoint fragments by a homomorphic universe partition.
//! A probe picks an allocation vector over the slots (skip, fragment, or
//! fragment plus 1-deletions) and collects candidates from the matching lists.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::similarity::{ceil_g, floor_g, score_from_overlap, sorted_overlap, SimFn, SimValue, SimilaritySpec, EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Selection {
    AllOnes,
    Optimal,
    Greedy,
}

#[derive(Debug, Error, PartialEq)]
pub enum SetJoinError {
    #[error("alpha must lie in [0.5, 1], got {0}")]
    Alpha(f64),
    #[error("the all-ones allocation needs alpha = 1")]
    AllOnesNeedsUnitAlpha,
    #[error("{0} is not a set similarity")]
    NotSetSimilarity(SimFn),
    #[error("set {id} is empty")]
    EmptySet { id: usize },
    #[error("no allocation of {target} over {m} slots")]
    NoAllocation { target: usize, m: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimParams {
    /// `H_l`: fragment count minus one for sets of size `l`.
    pub h_l: usize,
    /// `H(l, s)`: largest symmetric difference of a similar pair with sizes `l` and `s`.
    pub h_ls: usize,
    /// Sizes that can be similar to a set of size `l`.
    pub lower: usize,
    pub upper: usize,
}

pub fn sim_params(func: SimFn, delta: f64, l: usize, s: usize) -> SimParams {
    let (lf, sf, d) = (l as f64, s as f64, delta);
    let (h_l, h_ls, lo, hi) = match func {
        SimFn::Jac => ((1.0 - d) * lf / d, (1.0 - d) * (sf + lf) / (1.0 + d), lf * d, lf / d),
        SimFn::Cos => ((1.0 - d * d) * lf / (d * d), sf + lf - 2.0 * d * (sf * lf).sqrt(), d * d * lf, lf / (d * d)),
        SimFn::Dice => (2.0 * (1.0 - d) * lf / d, (1.0 - d) * (sf + lf), d * lf / (2.0 - d), (2.0 - d) * lf / d),
        SimFn::Ed | SimFn::Eds => panic!("{func} is not a set similarity"),
    };
    SimParams {
        h_l: floor_g(h_l).max(0) as usize,
        h_ls: floor_g(h_ls).max(0) as usize,
        lower: ceil_g(lo).max(0) as usize,
        upper: floor_g(hi).max(0) as usize,
    }
}

/// Homomorphic assignment of elements to slots.
pub trait PartitionScheme: Sync {
    /// Per-element key, computed once.
    fn key(&self, token: &str) -> u64;
    /// 0-based slot for a key among `m` slots.
    fn slot(&self, key: u64, m: usize) -> usize;
}

/// 64-bit FNV-1a of the token's UTF-8 bytes, modulo `m`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FnvScheme;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl PartitionScheme for FnvScheme {
    fn key(&self, token: &str) -> u64 {
        fnv1a64(token.as_bytes())
    }

    fn slot(&self, key: u64, m: usize) -> usize {
        (key % m as u64) as usize
    }
}

/// Contiguous split of an ordered universe into `m` runs of `ceil(|U| / m)` elements.
#[derive(Clone, Debug)]
pub struct EvenSplit {
    index: HashMap<String, u64>,
}

impl EvenSplit {
    pub fn new<S: AsRef<str>>(universe: &[S]) -> Self {
        let index = universe.iter().enumerate().map(|(i, t)| (t.as_ref().to_string(), i as u64)).collect();
        EvenSplit { index }
    }
}

impl PartitionScheme for EvenSplit {
    fn key(&self, token: &str) -> u64 {
        self.index.get(token).copied().unwrap_or_else(|| fnv1a64(token.as_bytes()))
    }

    fn slot(&self, key: u64, m: usize) -> usize {
        let n = self.index.len().max(1);
        let chunk = n.div_ceil(m) as u64;
        ((key / chunk) as usize).min(m - 1)
    }
}

/// Fragments of `set` (sorted element ids) under `m` slots; `keys[e]` is element `e`'s scheme key.
pub fn partition_set(set: &[u32], keys: &[u64], scheme: &dyn PartitionScheme, m: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); m];
    for &e in set {
        out[scheme.slot(keys[e as usize], m)].push(e);
    }
    out
}

/// All fragments with exactly one element removed.
pub fn one_deletions(fragment: &[u32]) -> Vec<Vec<u32>> {
    (0..fragment.len())
        .map(|k| fragment.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect())
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostTriple {
    pub c1: u64,
    pub c2: u64,
}

impl CostTriple {
    pub fn cost(&self, v: u8) -> u64 {
        match v {
            0 => 0,
            1 => self.c1,
            _ => self.c2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub v: Vec<u8>,
    pub cost: u64,
}

pub fn optimal_allocation(costs: &[CostTriple], target: usize) -> Result<Allocation, SetJoinError> {
    let m = costs.len();
    if target > 2 * m {
        return Err(SetJoinError::NoAllocation { target, m });
    }
    const INF: u64 = u64::MAX;
    let mut cost = vec![vec![INF; target + 1]; m + 1];
    let mut pick = vec![vec![0u8; target + 1]; m + 1];
    cost[0][0] = 0;
    for i in 1..=m {
        cost[i][0] = 0;
        for j in 1..=target {
            // larger v wins ties
            for v in (0..=2u8).rev() {
                let Some(jj) = j.checked_sub(v as usize) else { continue };
                let prev = cost[i - 1][jj];
                if prev == INF {
                    continue;
                }
                let c = prev + costs[i - 1].cost(v);
                if c < cost[i][j] {
                    cost[i][j] = c;
                    pick[i][j] = v;
                }
            }
        }
    }
    let mut v = vec![0u8; m];
    let mut j = target;
    for i in (1..=m).rev() {
        v[i - 1] = pick[i][j];
        j -= pick[i][j] as usize;
    }
    Ok(Allocation { v, cost: cost[m][target] })
}

pub fn greedy_allocation(costs: &[CostTriple], target: usize) -> Result<Allocation, SetJoinError> {
    let m = costs.len();
    if target > 2 * m {
        return Err(SetJoinError::NoAllocation { target, m });
    }
    let mut v = vec![0u8; m];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = costs.iter().enumerate().map(|(i, c)| Reverse((c.c1, i))).collect();
    let mut cost = 0;
    for _ in 0..target {
        let Reverse((inc, i)) = heap.pop().expect("2m increments available");
        v[i] += 1;
        cost += inc;
        if v[i] == 1 {
            heap.push(Reverse((costs[i].c2 - costs[i].c1, i)));
        }
    }
    Ok(Allocation { v, cost })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Group {
    pub floor: usize,
    pub top: usize,
}

/// Size groups `[l_k, floor(l_k / alpha)]` covering `[l_min, l_max]`.
pub fn group_boundaries(l_min: usize, l_max: usize, alpha: f64) -> Result<Vec<Group>, SetJoinError> {
    if !(0.5 - EPS..=1.0 + EPS).contains(&alpha) {
        return Err(SetJoinError::Alpha(alpha));
    }
    let mut out = Vec::new();
    let mut l = l_min.max(1);
    while l <= l_max {
        let top = (floor_g(l as f64 / alpha).max(0) as usize).max(l);
        out.push(Group { floor: l, top });
        l = top + 1;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct SetJoinOptions {
    pub selection: Selection,
    pub alpha: f64,
}

impl Default for SetJoinOptions {
    fn default() -> Self {
        SetJoinOptions { selection: Selection::Greedy, alpha: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SetJoinCounters {
    /// Distinct pairs verified.
    pub candidates: usize,
    /// Sum of chosen allocation costs, i.e. inverted-list entries read.
    pub probed: u64,
    pub groups_probed: usize,
}

impl SetJoinCounters {
    fn add(mut self, o: SetJoinCounters) -> Self {
        self.candidates += o.candidates;
        self.probed += o.probed;
        self.groups_probed += o.groups_probed;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetPair {
    pub a: usize,
    pub b: usize,
    pub value: SimValue,
}

#[derive(Clone, Debug, Default)]
pub struct SetJoinOutput {
    pub pairs: Vec<SetPair>,
    pub counters: SetJoinCounters,
    /// Records whose repeated tokens were collapsed, 1-based.
    pub collapsed: Vec<usize>,
}

type Lists = HashMap<Vec<u32>, Vec<u32>>;

struct GroupIndex {
    group: Group,
    m: usize,
    frag: Vec<Lists>,
    del: Vec<Lists>,
}

impl GroupIndex {
    fn insert(&mut self, id: u32, fragments: Vec<Vec<u32>>) {
        for (i, f) in fragments.into_iter().enumerate() {
            for d in one_deletions(&f) {
                self.del[i].entry(d).or_default().push(id);
            }
            self.frag[i].entry(f).or_default().push(id);
        }
    }
}

fn list_len(l: &Lists, k: &[u32]) -> u64 {
    l.get(k).map_or(0, |v| v.len() as u64)
}

fn intern<S: AsRef<str>>(
    sides: &[&[Vec<S>]],
    scheme: &dyn PartitionScheme,
) -> Result<(Vec<Vec<Vec<u32>>>, Vec<u64>, Vec<Vec<usize>>), SetJoinError> {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for side in sides {
        for rec in side.iter() {
            let distinct: HashSet<&str> = rec.iter().map(AsRef::as_ref).collect();
            for t in distinct {
                *freq.entry(t).or_default() += 1;
            }
        }
    }
    let mut order: Vec<(&str, usize)> = freq.into_iter().collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let ids: HashMap<&str, u32> = order.iter().enumerate().map(|(i, &(t, _))| (t, i as u32)).collect();
    let keys = order.iter().map(|&(t, _)| scheme.key(t)).collect();
    let mut out = Vec::new();
    let mut collapsed = Vec::new();
    for side in sides {
        let mut sets = Vec::with_capacity(side.len());
        let mut dup = Vec::new();
        for (k, rec) in side.iter().enumerate() {
            let mut v: Vec<u32> = rec.iter().map(|t| ids[t.as_ref()]).collect();
            v.sort_unstable();
            let n = v.len();
            v.dedup();
            if v.len() != n {
                dup.push(k + 1);
            }
            if v.is_empty() {
                return Err(SetJoinError::EmptySet { id: k + 1 });
            }
            sets.push(v);
        }
        out.push(sets);
        collapsed.push(dup);
    }
    Ok((out, keys, collapsed))
}

fn check(spec: &SimilaritySpec, opts: &SetJoinOptions) -> Result<(), SetJoinError> {
    if spec.func.is_string_based() {
        return Err(SetJoinError::NotSetSimilarity(spec.func));
    }
    if !(0.5 - EPS..=1.0 + EPS).contains(&opts.alpha) {
        return Err(SetJoinError::Alpha(opts.alpha));
    }
    if opts.selection == Selection::AllOnes && opts.alpha < 1.0 - EPS {
        return Err(SetJoinError::AllOnesNeedsUnitAlpha);
    }
    Ok(())
}

struct Engine<'a> {
    spec: SimilaritySpec,
    opts: SetJoinOptions,
    scheme: &'a dyn PartitionScheme,
    keys: &'a [u64],
    groups: Vec<GroupIndex>,
}

impl<'a> Engine<'a> {
    fn new(spec: SimilaritySpec, opts: SetJoinOptions, scheme: &'a dyn PartitionScheme, keys: &'a [u64], sizes: (usize, usize)) -> Result<Self, SetJoinError> {
        let groups = group_boundaries(sizes.0, sizes.1, opts.alpha)?
            .into_iter()
            .map(|g| {
                let m = sim_params(spec.func, spec.delta, g.floor, g.floor).h_l + 1;
                GroupIndex { group: g, m, frag: vec![Lists::new(); m], del: vec![Lists::new(); m] }
            })
            .collect();
        Ok(Engine { spec, opts, scheme, keys, groups })
    }

    fn insert(&mut self, id: u32, set: &[u32]) {
        let n = set.len();
        let k = self.groups.partition_point(|g| g.group.top < n);
        let g = &mut self.groups[k];
        let fr = partition_set(set, self.keys, self.scheme, g.m);
        g.insert(id, fr);
    }

    /// Candidate ids for `x` among indexed sets of size in `[lo, hi]`.
    fn probe(&self, x: &[u32], lo: usize, hi: usize, c: &mut SetJoinCounters) -> Result<HashSet<u32>, SetJoinError> {
        let s = x.len();
        let mut cands = HashSet::new();
        for g in &self.groups {
            if g.group.top < lo || g.group.floor > hi {
                continue;
            }
            c.groups_probed += 1;
            let y_hi = g.group.top.min(hi);
            let target = sim_params(self.spec.func, self.spec.delta, y_hi, s).h_ls + 1;
            let fr = partition_set(x, self.keys, self.scheme, g.m);
            let dels: Vec<Vec<Vec<u32>>> = fr.iter().map(|f| one_deletions(f)).collect();
            let costs: Vec<CostTriple> = (0..g.m)
                .map(|i| {
                    let c1 = list_len(&g.frag[i], &fr[i]);
                    let c2 = c1 + list_len(&g.del[i], &fr[i]) + dels[i].iter().map(|d| list_len(&g.frag[i], d)).sum::<u64>();
                    CostTriple { c1, c2 }
                })
                .collect();
            let alloc = match self.opts.selection {
                Selection::AllOnes => Allocation { v: vec![1; g.m], cost: costs.iter().map(|t| t.c1).sum() },
                Selection::Optimal => optimal_allocation(&costs, target)?,
                Selection::Greedy => greedy_allocation(&costs, target)?,
            };
            if self.opts.selection == Selection::AllOnes {
                debug_assert!(g.m >= target);
            } else {
                assert_eq!(alloc.v.iter().map(|&v| v as usize).sum::<usize>(), target);
            }
            c.probed += alloc.cost;
            for (i, &v) in alloc.v.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                let mut take = |l: Option<&Vec<u32>>| {
                    if let Some(l) = l {
                        cands.extend(l.iter().copied());
                    }
                };
                take(g.frag[i].get(&fr[i]));
                if v == 2 {
                    take(g.del[i].get(&fr[i]));
                    for d in &dels[i] {
                        take(g.frag[i].get(d));
                    }
                }
            }
        }
        Ok(cands)
    }
}

fn verify(spec: &SimilaritySpec, x: &[u32], y: &[u32]) -> Option<f64> {
    let v = score_from_overlap(spec.func, sorted_overlap(x, y), x.len(), y.len());
    (v + EPS >= spec.delta).then_some(v)
}

fn size_range(sets: &[Vec<u32>]) -> (usize, usize) {
    let lo = sets.iter().map(Vec::len).min().unwrap_or(1);
    let hi = sets.iter().map(Vec::len).max().unwrap_or(0);
    (lo, hi)
}

/// Self join: unordered pairs `a < b` with similarity at least the spec's threshold.
pub fn join_set_self<S: AsRef<str>>(
    records: &[Vec<S>],
    spec: SimilaritySpec,
    opts: SetJoinOptions,
    scheme: &dyn PartitionScheme,
) -> Result<SetJoinOutput, SetJoinError> {
    check(&spec, &opts)?;
    let (mut sides, keys, mut collapsed) = intern(&[records], scheme)?;
    let sets = sides.remove(0);
    let mut engine = Engine::new(spec, opts, scheme, &keys, size_range(&sets))?;
    let mut order: Vec<u32> = (0..sets.len() as u32).collect();
    order.sort_by_key(|&i| (sets[i as usize].len(), i));
    let mut c = SetJoinCounters::default();
    let mut pairs = Vec::new();
    for xid in order {
        let x = &sets[xid as usize];
        let lo = sim_params(spec.func, spec.delta, x.len(), x.len()).lower;
        let cands = engine.probe(x, lo, x.len(), &mut c)?;
        for yid in cands {
            let y = &sets[yid as usize];
            if y.len() < lo {
                continue;
            }
            c.candidates += 1;
            if let Some(v) = verify(&spec, x, y) {
                let (a, b) = (xid.min(yid) as usize + 1, xid.max(yid) as usize + 1);
                pairs.push(SetPair { a, b, value: SimValue::Score(v) });
            }
        }
        engine.insert(xid, x);
    }
    pairs.sort_by_key(|p| (p.a, p.b));
    Ok(SetJoinOutput { pairs, counters: c, collapsed: collapsed.remove(0) })
}

/// R-S join: pairs `(r id, s id)`; `r_records` is indexed and `s_records` probes in parallel.
pub fn join_set_rs<S: AsRef<str>>(
    r_records: &[Vec<S>],
    s_records: &[Vec<S>],
    spec: SimilaritySpec,
    opts: SetJoinOptions,
    scheme: &dyn PartitionScheme,
) -> Result<SetJoinOutput, SetJoinError> {
    check(&spec, &opts)?;
    let (sides, keys, collapsed) = intern(&[r_records, s_records], scheme)?;
    let (rs, ss) = (&sides[0], &sides[1]);
    let mut engine = Engine::new(spec, opts, scheme, &keys, size_range(rs))?;
    for (id, r) in rs.iter().enumerate() {
        engine.insert(id as u32, r);
    }
    let engine = &engine;
    let parts: Vec<Result<(Vec<SetPair>, SetJoinCounters), SetJoinError>> = ss
        .par_iter()
        .enumerate()
        .map(|(sid, x)| {
            let mut c = SetJoinCounters::default();
            let p = sim_params(spec.func, spec.delta, x.len(), x.len());
            let cands = engine.probe(x, p.lower, p.upper, &mut c)?;
            let mut pairs = Vec::new();
            for rid in cands {
                let y = &rs[rid as usize];
                if y.len() < p.lower || y.len() > p.upper {
                    continue;
                }
                c.candidates += 1;
                if let Some(v) = verify(&spec, y, x) {
                    pairs.push(SetPair { a: rid as usize + 1, b: sid + 1, value: SimValue::Score(v) });
                }
            }
            Ok((pairs, c))
        })
        .collect();
    let mut pairs = Vec::new();
    let mut c = SetJoinCounters::default();
    for part in parts {
        let (p, d) = part?;
        pairs.extend(p);
        c = c.add(d);
    }
    pairs.sort_by_key(|p| (p.a, p.b));
    let mut all = collapsed[0].clone();
    all.extend(collapsed[1].iter().map(|&k| k + r_records.len()));
    Ok(SetJoinOutput { pairs, counters: c, collapsed: all })
}
