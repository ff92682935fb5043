//! Similarity functions, threshold arithmetic and bounded edit distance.

use std::fmt;

use thiserror::Error;

/// Slack applied before rounding fractional bounds.
pub const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SimFn {
    Jac,
    Cos,
    Dice,
    Ed,
    Eds,
}

impl SimFn {
    pub fn is_string_based(self) -> bool {
        matches!(self, SimFn::Ed | SimFn::Eds)
    }

    pub fn name(self) -> &'static str {
        match self {
            SimFn::Jac => "jac",
            SimFn::Cos => "cos",
            SimFn::Dice => "dice",
            SimFn::Ed => "ed",
            SimFn::Eds => "eds",
        }
    }
}

impl fmt::Display for SimFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("similarity threshold {0} must lie in (0, 1]")]
    Ratio(f64),
    #[error("edit-distance threshold must be a non-negative integer, got {0}")]
    Distance(f64),
    #[error("gram length must be at least 1")]
    GramLength,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{0} similarity is undefined for empty records")]
    EmptyRecord(SimFn),
}

/// Similarity function with its threshold and gram length.
///
/// `tau` is meaningful for `Ed`, `delta` for the others. `q` drives the
/// gram view of `Ed`/`Eds`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilaritySpec {
    pub func: SimFn,
    pub delta: f64,
    pub tau: usize,
    pub q: usize,
}

impl SimilaritySpec {
    pub fn new(func: SimFn, threshold: f64, q: usize) -> Result<Self, SpecError> {
        if q == 0 {
            return Err(SpecError::GramLength);
        }
        match func {
            SimFn::Ed => {
                if !(threshold >= 0.0) || threshold.fract() != 0.0 {
                    return Err(SpecError::Distance(threshold));
                }
                Ok(SimilaritySpec { func, delta: 1.0, tau: threshold as usize, q })
            }
            _ => {
                if !(threshold > 0.0 && threshold <= 1.0) {
                    return Err(SpecError::Ratio(threshold));
                }
                Ok(SimilaritySpec { func, delta: threshold, tau: 0, q })
            }
        }
    }

    pub fn ed(tau: usize, q: usize) -> Self {
        Self::new(SimFn::Ed, tau as f64, q).expect("valid ED spec")
    }

    pub fn eds(delta: f64, q: usize) -> Self {
        Self::new(SimFn::Eds, delta, q).expect("valid EDS spec")
    }

    pub fn jaccard(delta: f64) -> Self {
        Self::new(SimFn::Jac, delta, 1).expect("valid JAC spec")
    }

    pub fn cosine(delta: f64) -> Self {
        Self::new(SimFn::Cos, delta, 1).expect("valid COS spec")
    }

    pub fn dice(delta: f64) -> Self {
        Self::new(SimFn::Dice, delta, 1).expect("valid DICE spec")
    }

    /// Does a computed value satisfy the threshold?
    pub fn accepts(&self, value: SimValue) -> bool {
        match value {
            SimValue::Distance(d) => d <= self.tau,
            SimValue::Score(x) => x + EPS >= self.delta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimValue {
    Distance(usize),
    Score(f64),
}

impl SimValue {
    pub fn as_f64(self) -> f64 {
        match self {
            SimValue::Distance(d) => d as f64,
            SimValue::Score(x) => x,
        }
    }
}

impl fmt::Display for SimValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimValue::Distance(d) => write!(f, "{d}"),
            SimValue::Score(x) => write!(f, "{x:.6}"),
        }
    }
}

pub fn ceil_g(x: f64) -> i64 {
    (x - EPS).ceil() as i64
}

pub fn floor_g(x: f64) -> i64 {
    (x + EPS).floor() as i64
}

/// Minimum overlap T between an entity with `e` tokens and a substring with `s` tokens.
pub fn overlap_threshold(spec: &SimilaritySpec, e: usize, s: usize) -> i64 {
    let (ef, sf, d) = (e as f64, s as f64, spec.delta);
    let q = spec.q as i64;
    match spec.func {
        SimFn::Jac => ceil_g((ef + sf) * d / (1.0 + d)),
        SimFn::Cos => ceil_g((ef * sf).sqrt() * d),
        SimFn::Dice => ceil_g((ef + sf) * d / 2.0),
        SimFn::Ed => e.max(s) as i64 - spec.tau as i64 * q,
        SimFn::Eds => {
            let mx = ef.max(sf);
            ceil_g(mx - (mx + spec.q as f64 - 1.0) * (1.0 - d) * spec.q as f64)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeBounds {
    pub lower: usize,
    pub upper: usize,
}

impl SizeBounds {
    pub fn contains(&self, n: usize) -> bool {
        self.lower <= n && n <= self.upper
    }
}

/// Token-count window of substrings that may be similar to an entity with `e` tokens.
pub fn token_count_bounds(spec: &SimilaritySpec, e: usize) -> SizeBounds {
    let (ef, d) = (e as f64, spec.delta);
    let qm1 = spec.q as f64 - 1.0;
    let (lo, hi) = match spec.func {
        SimFn::Jac => (ceil_g(ef * d), floor_g(ef / d)),
        SimFn::Cos => (ceil_g(ef * d * d), floor_g(ef / (d * d))),
        SimFn::Dice => (ceil_g(ef * d / (2.0 - d)), floor_g(ef * (2.0 - d) / d)),
        SimFn::Ed => (e as i64 - spec.tau as i64, (e + spec.tau) as i64),
        SimFn::Eds => (ceil_g((ef + qm1) * d - qm1), floor_g((ef + qm1) / d - qm1)),
    };
    SizeBounds { lower: lo.max(1) as usize, upper: hi.max(1) as usize }
}

/// Overlap lower bound valid for every substring size in the entity's window.
pub fn lazy_threshold(spec: &SimilaritySpec, e: usize) -> i64 {
    let (ef, d) = (e as f64, spec.delta);
    let q = spec.q as f64;
    match spec.func {
        SimFn::Jac => ceil_g(ef * d),
        SimFn::Cos => ceil_g(ef * d * d),
        SimFn::Dice => ceil_g(ef * d / (2.0 - d)),
        SimFn::Ed => e as i64 - (spec.tau * spec.q) as i64,
        SimFn::Eds => ceil_g(ef - (ef + q - 1.0) * (1.0 - d) * q / d),
    }
}

/// Largest edit distance compatible with EDS >= delta for strings whose longer side has `len` chars.
pub fn eds_distance_bound(delta: f64, len: usize) -> usize {
    floor_g((1.0 - delta) * len as f64).max(0) as usize
}

fn floor_half(x: i64) -> i64 {
    x.div_euclid(2)
}

fn ceil_half(x: i64) -> i64 {
    -((-x).div_euclid(2))
}

/// Exact edit distance when it is at most `bound`, otherwise `None`.
///
/// Banded DP: only diagonals `j - i` in `[ceil((D-bound)/2), floor((D+bound)/2)]`
/// with `D = |b| - |a|` are filled, and a row whose every cell has expected
/// distance `M(i,j) + |(|b|-j) - (|a|-i)|` above the bound stops the scan.
pub fn bounded_edit_distance<T: PartialEq>(a: &[T], b: &[T], bound: usize) -> Option<usize> {
    let (n, m) = (a.len() as i64, b.len() as i64);
    let t = bound as i64;
    let delta = m - n;
    if delta.abs() > t {
        return None;
    }
    let (dlo, dhi) = (ceil_half(delta - t), floor_half(delta + t));
    let inf = bound + 1;
    let width = b.len() + 1;
    let mut prev = vec![inf; width];
    let mut cur = vec![inf; width];

    let (mut plo, mut phi) = (0i64, dhi.min(m));
    for j in plo..=phi {
        prev[j as usize] = (j as usize).min(inf);
    }
    for i in 1..=n {
        let lo = (i + dlo).max(0);
        let hi = (i + dhi).min(m);
        if lo > hi {
            return None;
        }
        let at_prev = |row: &Vec<usize>, j: i64| -> usize {
            if j >= plo && j <= phi {
                row[j as usize]
            } else {
                inf
            }
        };
        let mut alive = false;
        let ai = &a[(i - 1) as usize];
        for j in lo..=hi {
            let v = if j == 0 {
                (i as usize).min(inf)
            } else {
                let diag = at_prev(&prev, j - 1) + usize::from(*ai != b[(j - 1) as usize]);
                let up = at_prev(&prev, j) + 1;
                let left = if j > lo { cur[(j - 1) as usize] + 1 } else { inf };
                diag.min(up).min(left).min(inf)
            };
            cur[j as usize] = v;
            let rest = ((m - j) - (n - i)).unsigned_abs() as usize;
            if v + rest <= bound {
                alive = true;
            }
        }
        if !alive {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
        plo = lo;
        phi = hi;
    }
    let d = if m >= plo && m <= phi { prev[m as usize] } else { inf };
    (d <= bound).then_some(d)
}

/// Edit distance without a bound.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let bound = a.len().max(b.len());
    bounded_edit_distance(a, b, bound).expect("edit distance never exceeds the longer length")
}

/// Size of the multiset intersection of two token lists.
pub fn multiset_overlap<T: Ord + Clone>(a: &[T], b: &[T]) -> usize {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable();
    y.sort_unstable();
    sorted_overlap(&x, &y)
}

/// Intersection size of two ascending sequences, counting repeats.
pub fn sorted_overlap<T: Ord>(x: &[T], y: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Token similarity from the overlap and the two sizes.
pub fn score_from_overlap(func: SimFn, overlap: usize, a: usize, b: usize) -> f64 {
    let (o, a, b) = (overlap as f64, a as f64, b as f64);
    match func {
        SimFn::Jac => o / (a + b - o),
        SimFn::Cos => o / (a * b).sqrt(),
        SimFn::Dice => 2.0 * o / (a + b),
        SimFn::Ed | SimFn::Eds => panic!("{func} is not a token similarity"),
    }
}

/// EDS from a distance and the two lengths.
pub fn eds_from_distance(d: usize, a: usize, b: usize) -> f64 {
    1.0 - d as f64 / a.max(b) as f64
}

/// Similarity of two raw records.
///
/// ED and EDS compare Unicode scalar sequences; JAC, COS and DICE compare
/// whitespace-separated word multisets.
pub fn similarity(spec: &SimilaritySpec, a: &str, b: &str) -> Result<SimValue, SimError> {
    match spec.func {
        SimFn::Ed | SimFn::Eds => {
            let x: Vec<char> = a.chars().collect();
            let y: Vec<char> = b.chars().collect();
            let d = edit_distance(&x, &y);
            if spec.func == SimFn::Ed {
                return Ok(SimValue::Distance(d));
            }
            if x.is_empty() || y.is_empty() {
                return Err(SimError::EmptyRecord(spec.func));
            }
            Ok(SimValue::Score(eds_from_distance(d, x.len(), y.len())))
        }
        func => {
            let x: Vec<&str> = a.split_whitespace().collect();
            let y: Vec<&str> = b.split_whitespace().collect();
            if x.is_empty() || y.is_empty() {
                return Err(SimError::EmptyRecord(func));
            }
            let o = multiset_overlap(&x, &y);
            Ok(SimValue::Score(score_from_overlap(func, o, x.len(), y.len())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn full_dp(a: &[char], b: &[char]) -> usize {
        let mut row: Vec<usize> = (0..=b.len()).collect();
        for (i, x) in a.iter().enumerate() {
            let mut next = vec![i + 1; b.len() + 1];
            for (j, y) in b.iter().enumerate() {
                next[j + 1] = (row[j] + usize::from(x != y)).min(row[j + 1] + 1).min(next[j] + 1);
            }
            row = next;
        }
        row[b.len()]
    }

    #[test]
    fn paper_distances() {
        let spec = SimilaritySpec::ed(2, 1);
        assert_eq!(similarity(&spec, "surajit", "surauijt"), Ok(SimValue::Distance(2)));
        let spec = SimilaritySpec::eds(0.8, 1);
        assert_eq!(similarity(&spec, "surajit", "surauijt"), Ok(SimValue::Score(0.75)));
    }

    #[test]
    fn jaccard_of_table_sets() {
        let x1 = "1 2 5 6 7 10 11 13 14";
        let x2 = "2 4 5 6 9 11 13 14 15";
        let spec = SimilaritySpec::jaccard(0.5);
        assert_eq!(similarity(&spec, x1, x2), Ok(SimValue::Score(0.5)));
        assert_eq!(similarity(&spec, x1, x1), Ok(SimValue::Score(1.0)));
    }

    #[test]
    fn empty_records_are_rejected() {
        let spec = SimilaritySpec::jaccard(0.5);
        assert_eq!(similarity(&spec, "", "a"), Err(SimError::EmptyRecord(SimFn::Jac)));
        let spec = SimilaritySpec::eds(0.5, 2);
        assert_eq!(similarity(&spec, "a", ""), Err(SimError::EmptyRecord(SimFn::Eds)));
        let spec = SimilaritySpec::ed(1, 2);
        assert_eq!(similarity(&spec, "a", ""), Ok(SimValue::Distance(1)));
    }

    #[test]
    fn spec_validation() {
        assert_eq!(SimilaritySpec::new(SimFn::Jac, 0.0, 1), Err(SpecError::Ratio(0.0)));
        assert_eq!(SimilaritySpec::new(SimFn::Cos, 1.2, 1), Err(SpecError::Ratio(1.2)));
        assert_eq!(SimilaritySpec::new(SimFn::Ed, 1.5, 2), Err(SpecError::Distance(1.5)));
        assert_eq!(SimilaritySpec::new(SimFn::Ed, 1.0, 0), Err(SpecError::GramLength));
        assert!(SimilaritySpec::new(SimFn::Dice, 1.0, 1).is_ok());
    }

    #[test]
    fn overlap_thresholds() {
        assert_eq!(overlap_threshold(&SimilaritySpec::ed(2, 2), 9, 10), 6);
        for k in 1..20 {
            assert_eq!(overlap_threshold(&SimilaritySpec::jaccard(1.0), k, k), k as i64);
        }
        // 17 * 0.8 / 2 = 6.8
        assert_eq!(overlap_threshold(&SimilaritySpec::dice(0.8), 8, 9), 7);
        // sqrt(8 * 18) * 0.5 = 6 exactly; the guard must not round it up.
        assert_eq!(overlap_threshold(&SimilaritySpec::cosine(0.5), 8, 18), 6);
    }

    #[test]
    fn size_bounds() {
        assert_eq!(token_count_bounds(&SimilaritySpec::eds(0.8, 2), 9), SizeBounds { lower: 7, upper: 11 });
        assert_eq!(token_count_bounds(&SimilaritySpec::ed(2, 2), 8), SizeBounds { lower: 6, upper: 10 });
        for k in 1..20 {
            assert_eq!(token_count_bounds(&SimilaritySpec::jaccard(1.0), k), SizeBounds { lower: k, upper: k });
        }
        assert_eq!(token_count_bounds(&SimilaritySpec::ed(5, 2), 3).lower, 1);
    }

    #[test]
    fn lazy_thresholds() {
        assert_eq!(lazy_threshold(&SimilaritySpec::ed(2, 2), 8), 4);
        assert_eq!(lazy_threshold(&SimilaritySpec::ed(1, 2), 9), 7);
        for k in 1..20 {
            assert_eq!(lazy_threshold(&SimilaritySpec::jaccard(1.0), k), k as i64);
        }
    }

    #[test]
    fn bounded_examples() {
        let (a, b) = (chars("kaushuk chadhui"), chars("caushik chakrabar"));
        assert_eq!(bounded_edit_distance(&a, &b, 3), None);
        let x = chars("surajit");
        assert_eq!(bounded_edit_distance(&x, &x, 0), Some(0));
        assert_eq!(bounded_edit_distance(&x, &chars("surauijt"), 2), Some(2));
        assert_eq!(bounded_edit_distance(&x, &chars("surauijt"), 1), None);
        assert_eq!(bounded_edit_distance(&chars(""), &chars("ab"), 2), Some(2));
        assert_eq!(bounded_edit_distance(&chars("ab"), &chars(""), 1), None);
    }

    #[test]
    fn eds_bound_matches_score_test() {
        for len in 1..200usize {
            for delta in [0.7, 0.75, 0.8, 0.82, 0.85, 0.9, 0.95, 1.0] {
                let spec = SimilaritySpec::eds(delta, 1);
                let t = eds_distance_bound(delta, len);
                assert!(spec.accepts(SimValue::Score(eds_from_distance(t, len, len))));
                if t < len {
                    assert!(!spec.accepts(SimValue::Score(eds_from_distance(t + 1, len, len))));
                }
            }
        }
    }

    fn word() -> impl Strategy<Value = Vec<char>> {
        proptest::collection::vec(prop_oneof![Just('a'), Just('b'), Just('c'), Just('d')], 0..40)
    }

    fn spec_strategy() -> impl Strategy<Value = SimilaritySpec> {
        prop_oneof![
            (0usize..5, 1usize..4).prop_map(|(t, q)| SimilaritySpec::ed(t, q)),
            (50u32..=100, 1usize..4).prop_map(|(d, q)| SimilaritySpec::eds(d as f64 / 100.0, q)),
            (50u32..=100).prop_map(|d| SimilaritySpec::jaccard(d as f64 / 100.0)),
            (50u32..=100).prop_map(|d| SimilaritySpec::cosine(d as f64 / 100.0)),
            (50u32..=100).prop_map(|d| SimilaritySpec::dice(d as f64 / 100.0)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn bounded_matches_full_matrix(a in word(), b in word(), bound in 0usize..7) {
            let d = full_dp(&a, &b);
            let got = bounded_edit_distance(&a, &b, bound);
            prop_assert_eq!(got, (d <= bound).then_some(d));
        }

        #[test]
        fn distance_is_a_metric(a in word(), b in word(), c in word()) {
            let ab = edit_distance(&a, &b);
            prop_assert_eq!(ab, edit_distance(&b, &a));
            prop_assert!(edit_distance(&a, &c) <= ab + edit_distance(&b, &c));
            prop_assert_eq!(ab == 0, a == b);
        }

        #[test]
        fn lazy_threshold_is_below_overlap_threshold(spec in spec_strategy(), e in 1usize..60) {
            let b = token_count_bounds(&spec, e);
            let tl = lazy_threshold(&spec, e);
            for s in b.lower..=b.upper {
                prop_assert!(tl <= overlap_threshold(&spec, e, s), "e={} s={} tl={}", e, s, tl);
            }
        }

        #[test]
        fn window_widens_as_threshold_loosens(e in 1usize..60, d1 in 50u32..=100, d2 in 50u32..=100, t in 0usize..5, q in 1usize..4) {
            let (lo, hi) = (d1.min(d2) as f64 / 100.0, d1.max(d2) as f64 / 100.0);
            for (loose, tight) in [
                (SimilaritySpec::jaccard(lo), SimilaritySpec::jaccard(hi)),
                (SimilaritySpec::cosine(lo), SimilaritySpec::cosine(hi)),
                (SimilaritySpec::dice(lo), SimilaritySpec::dice(hi)),
                (SimilaritySpec::eds(lo, q), SimilaritySpec::eds(hi, q)),
                (SimilaritySpec::ed(t + 1, q), SimilaritySpec::ed(t, q)),
            ] {
                let (a, b) = (token_count_bounds(&loose, e), token_count_bounds(&tight, e));
                prop_assert!(a.lower <= b.lower && a.upper >= b.upper);
            }
        }
    }
}
