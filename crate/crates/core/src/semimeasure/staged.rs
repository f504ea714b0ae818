use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::cantor::{BitString, Rational};

/// Finite-support valuation given as a replay over stages `0..=s_max`.
///
/// Each string carries a sparse history of `(stage, value)` points sorted by
/// stage; the value at stage `s` is the last point with index `≤ s`, or 0
/// before the first point. Strings in the support may have an empty history.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Staged {
    histories: BTreeMap<BitString, Vec<(usize, Rational)>>,
    s_max: usize,
}

impl Staged {
    pub fn new(s_max: usize) -> Self {
        Self {
            histories: BTreeMap::new(),
            s_max,
        }
    }

    /// A single-stage valuation.
    pub fn from_snapshot<I: IntoIterator<Item = (BitString, Rational)>>(values: I) -> Self {
        let mut staged = Staged::new(0);
        for (x, v) in values {
            staged.set(x, 0, v);
        }
        staged
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    /// Records `value` at `stage`, replacing an existing point at that stage.
    pub fn set(&mut self, x: BitString, stage: usize, value: Rational) {
        self.s_max = self.s_max.max(stage);
        let history = self.histories.entry(x).or_default();
        match history.binary_search_by_key(&stage, |(s, _)| *s) {
            Ok(i) => history[i].1 = value,
            Err(i) => history.insert(i, (stage, value)),
        }
    }

    /// Adds `x` to the support without a value.
    pub fn touch(&mut self, x: BitString) {
        self.histories.entry(x).or_default();
    }

    /// Adds every prefix of every supported string to the support.
    pub fn prefix_close(&mut self) {
        let missing: Vec<BitString> = self
            .histories
            .keys()
            .flat_map(|x| x.prefixes().collect::<Vec<_>>())
            .filter(|p| !self.histories.contains_key(p))
            .collect();
        for p in missing {
            self.touch(p);
        }
    }

    pub fn value(&self, x: &BitString, s: usize) -> Rational {
        self.histories
            .get(x)
            .and_then(|h| {
                let idx = h.partition_point(|(stage, _)| *stage <= s);
                idx.checked_sub(1).map(|i| h[i].1.clone())
            })
            .unwrap_or_else(Rational::zero)
    }

    pub fn history(&self, x: &BitString) -> &[(usize, Rational)] {
        self.histories.get(x).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn histories(&self) -> impl Iterator<Item = (&BitString, &[(usize, Rational)])> {
        self.histories.iter().map(|(x, h)| (x, h.as_slice()))
    }

    /// Supported strings in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = &BitString> {
        self.histories.keys()
    }

    pub fn contains(&self, x: &BitString) -> bool {
        self.histories.contains_key(x)
    }

    pub fn support_len(&self) -> usize {
        self.histories.len()
    }

    /// Supported strings in length-then-lexicographic order.
    pub fn support_shortlex(&self) -> Vec<BitString> {
        let mut v: Vec<BitString> = self.histories.keys().cloned().collect();
        v.sort_by(BitString::shortlex_cmp);
        v
    }

    /// Longest supported string length (0 when the support is empty).
    pub fn max_len(&self) -> usize {
        self.histories.keys().map(BitString::len).max().unwrap_or(0)
    }

    /// Stages at which some value may change, always including 0.
    pub fn change_points(&self) -> BTreeSet<usize> {
        let mut points: BTreeSet<usize> = self
            .histories
            .values()
            .flat_map(|h| h.iter().map(|(s, _)| *s))
            .collect();
        points.insert(0);
        points
    }

    /// Supported strings that strictly extend `x`.
    pub fn strict_extensions<'a>(
        &'a self,
        x: &'a BitString,
    ) -> impl Iterator<Item = &'a BitString> + 'a {
        self.histories
            .range(x.clone()..)
            .map(|(y, _)| y)
            .take_while(move |y| x.is_prefix_of(y))
            .filter(move |y| y.len() > x.len())
    }

    pub fn snapshot(&self, s: usize) -> BTreeMap<BitString, Rational> {
        self.histories
            .keys()
            .map(|x| (x.clone(), self.value(x, s)))
            .collect()
    }

    /// Drops history points that repeat the preceding value.
    pub fn compact(&mut self) {
        for h in self.histories.values_mut() {
            let mut prev = Rational::zero();
            h.retain(|(_, v)| {
                let keep = prev != *v;
                prev = v.clone();
                keep
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::ratio::rational;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn sparse_lookup_takes_last_point() {
        let mut st = Staged::new(0);
        st.set(bs("0"), 2, rational(1, 4));
        st.set(bs("0"), 5, rational(1, 2));
        assert_eq!(st.value(&bs("0"), 0), Rational::zero());
        assert_eq!(st.value(&bs("0"), 3), rational(1, 4));
        assert_eq!(st.value(&bs("0"), 9), rational(1, 2));
        assert_eq!(st.value(&bs("1"), 9), Rational::zero());
        assert_eq!(st.s_max(), 5);
    }

    #[test]
    fn prefix_closure_and_extensions() {
        let mut st = Staged::new(0);
        st.set(bs("010"), 0, rational(1, 8));
        st.set(bs("1"), 0, rational(1, 8));
        st.prefix_close();
        let support: Vec<String> = st.support().map(|x| x.to_string()).collect();
        assert_eq!(support, ["", "0", "01", "010", "1"]);
        let ext: Vec<String> = st.strict_extensions(&bs("0")).map(|x| x.to_string()).collect();
        assert_eq!(ext, ["01", "010"]);
    }

    #[test]
    fn compact_drops_repeats() {
        let mut st = Staged::new(0);
        st.set(bs("0"), 0, rational(1, 4));
        st.set(bs("0"), 1, rational(1, 4));
        st.set(bs("0"), 3, rational(1, 2));
        st.set(bs("1"), 0, Rational::zero());
        st.set(bs("1"), 2, Rational::zero());
        st.compact();
        assert_eq!(st.history(&bs("0")).len(), 2);
        assert_eq!(st.history(&bs("1")).len(), 0);
        assert_eq!(st.value(&bs("0"), 2), rational(1, 4));
    }
}
