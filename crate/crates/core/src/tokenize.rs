//! Positional q-grams, word tokens and the frequency-based global order.

use std::cmp::Ordering;
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PositionalGram {
    pub text: String,
    /// 1-based start offset (character offset for grams, token index for words).
    pub pos: usize,
}

impl PositionalGram {
    pub fn new(text: impl Into<String>, pos: usize) -> Self {
        PositionalGram { text: text.into(), pos }
    }
}

pub fn qgrams(s: &[char], q: usize) -> Vec<PositionalGram> {
    assert!(q >= 1, "gram length must be positive");
    if s.len() < q {
        return Vec::new();
    }
    s.windows(q)
        .enumerate()
        .map(|(i, w)| PositionalGram { text: w.iter().collect(), pos: i + 1 })
        .collect()
}

pub fn qgrams_str(s: &str, q: usize) -> Vec<PositionalGram> {
    let chars: Vec<char> = s.chars().collect();
    qgrams(&chars, q)
}

pub fn word_tokens(s: &str) -> Vec<PositionalGram> {
    s.split_whitespace()
        .enumerate()
        .map(|(i, w)| PositionalGram { text: w.to_string(), pos: i + 1 })
        .collect()
}

/// Total order on token texts: ascending document frequency, then text.
///
/// Texts outside the order get rank 0 and sort before every known text,
/// which is where a frequency of zero belongs.
#[derive(Clone, Debug, Default)]
pub struct GlobalOrder {
    entries: HashMap<String, (usize, usize)>,
}

impl GlobalOrder {
    pub fn build<R: AsRef<[PositionalGram]>>(corpus: &[R]) -> Self {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for rec in corpus {
            let mut seen: Vec<&str> = rec.as_ref().iter().map(|g| g.text.as_str()).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *freq.entry(t).or_insert(0) += 1;
            }
        }
        let mut list: Vec<(&str, usize)> = freq.into_iter().collect();
        list.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        Self::from_ranking(list.into_iter().map(|(t, f)| (t.to_string(), f)))
    }

    /// Order given explicitly as `(text, frequency)` pairs, rarest first.
    pub fn from_ranking<I: IntoIterator<Item = (String, usize)>>(ranked: I) -> Self {
        let entries = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (t, f))| (t, (f, i + 1)))
            .collect();
        GlobalOrder { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank, or 0 for texts the order has never seen.
    pub fn rank(&self, text: &str) -> usize {
        self.entries.get(text).map_or(0, |e| e.1)
    }

    pub fn frequency(&self, text: &str) -> usize {
        self.entries.get(text).map_or(0, |e| e.0)
    }

    pub fn contains(&self, text: &str) -> bool {
        self.entries.contains_key(text)
    }

    pub fn compare_text(&self, a: &str, b: &str) -> Ordering {
        self.rank(a).cmp(&self.rank(b)).then_with(|| a.cmp(b))
    }

    pub fn compare(&self, a: &PositionalGram, b: &PositionalGram) -> Ordering {
        self.compare_text(&a.text, &b.text).then(a.pos.cmp(&b.pos))
    }
}

/// Grams sorted by global order, repeated texts by position.
pub fn ordered_grams(grams: &[PositionalGram], order: &GlobalOrder) -> Vec<PositionalGram> {
    let mut keyed: Vec<(usize, &PositionalGram)> = grams.iter().map(|g| (order.rank(&g.text), g)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.text.cmp(&b.1.text)).then(a.1.pos.cmp(&b.1.pos)));
    keyed.into_iter().map(|(_, g)| g.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const TABLE_5_1: [&str; 5] = ["imyouteca", "ubuntucom", "utubbecou", "youtbecom", "yoytubeca"];

    fn texts(g: &[PositionalGram]) -> Vec<&str> {
        g.iter().map(|x| x.text.as_str()).collect()
    }

    #[test]
    fn bigrams_of_name() {
        let g = qgrams_str("surajit ch", 2);
        assert_eq!(texts(&g), ["su", "ur", "ra", "aj", "ji", "it", "t ", " c", "ch"]);
        assert_eq!(g.iter().map(|x| x.pos).collect::<Vec<_>>(), (1..=9).collect::<Vec<_>>());
        assert_eq!(qgrams_str("abc", 3), vec![PositionalGram::new("abc", 1)]);
        assert!(qgrams_str("ab", 3).is_empty());
    }

    #[test]
    fn words() {
        assert_eq!(texts(&word_tokens("vldb journal 2013")), ["vldb", "journal", "2013"]);
        assert!(word_tokens("").is_empty());
        let w = word_tokens("  a  b ");
        assert_eq!(w, vec![PositionalGram::new("a", 1), PositionalGram::new("b", 2)]);
    }

    #[test]
    fn corpus_frequencies() {
        let corpus: Vec<_> = TABLE_5_1.iter().map(|s| qgrams_str(s, 2)).collect();
        let order = GlobalOrder::build(&corpus);
        assert_eq!(order.len(), 21);
        assert_eq!(order.frequency("im"), 1);
        assert_eq!(order.frequency("ca"), 2);
        assert_eq!(order.frequency("yo"), 3);
        assert_eq!(order.frequency("ec"), 4);
        assert_eq!(order.rank("ec"), 21);
        // equal frequencies fall back to text order
        assert_eq!(order.rank("bb"), 1);
        assert_eq!(order.rank("im"), 3);
        assert_eq!(order.rank("ot"), 0);
    }

    #[test]
    fn single_record_is_lexicographic() {
        let order = GlobalOrder::build(&[qgrams_str("dcba", 1)]);
        assert_eq!(["a", "b", "c", "d"].map(|t| order.rank(t)), [1, 2, 3, 4]);
        assert!(["a", "b", "c", "d"].iter().all(|t| order.frequency(t) == 1));
    }

    #[test]
    fn prefix_of_first_record() {
        let order = crate::pivotal::table_5_1_order();
        let r1 = ordered_grams(&qgrams_str("imyouteca", 2), &order);
        let first: Vec<_> = r1[..5].iter().map(|g| (g.text.as_str(), g.pos)).collect();
        assert_eq!(first, [("im", 1), ("my", 2), ("te", 6), ("ca", 8), ("yo", 3)]);
        assert!(ordered_grams(&[], &order).is_empty());
    }

    #[test]
    fn repeated_grams_follow_position() {
        let order = GlobalOrder::build(&[qgrams_str("abab", 2)]);
        let g = ordered_grams(&qgrams_str("abab", 2), &order);
        assert_eq!(g[0], PositionalGram::new("ab", 1));
        assert_eq!(g[1], PositionalGram::new("ab", 3));
    }

    proptest! {
        #[test]
        fn ordering_is_a_permutation_and_strict(s in "[abc]{0,30}", t in "[abc]{0,30}", q in 1usize..4) {
            let corpus = vec![qgrams_str(&s, q), qgrams_str(&t, q)];
            let order = GlobalOrder::build(&corpus);
            let grams = qgrams_str(&s, q);
            let sorted = ordered_grams(&grams, &order);
            let mut a = grams.clone();
            let mut b = sorted.clone();
            a.sort_by_key(|x| x.pos);
            b.sort_by_key(|x| x.pos);
            prop_assert_eq!(a, b);
            for w in sorted.windows(2) {
                prop_assert_eq!(order.compare(&w[0], &w[1]), Ordering::Less);
                prop_assert_eq!(order.compare(&w[1], &w[0]), Ordering::Greater);
            }
            for x in &sorted {
                for y in &sorted {
                    for z in &sorted {
                        if order.compare(x, y) == Ordering::Less && order.compare(y, z) == Ordering::Less {
                            prop_assert_eq!(order.compare(x, z), Ordering::Less);
                        }
                    }
                }
            }
        }
    }
}
