use std::fmt;

use smallvec::SmallVec;

/// A finite set of integers, stored as a bitset anchored at `base`.
///
/// The cached `min`, `max` and `len` are only meaningful while the domain is
/// non-empty. An empty domain signals failure.
#[derive(Clone)]
pub struct Domain {
    base: i32,
    words: SmallVec<[u64; 2]>,
    min: i32,
    max: i32,
    len: u32,
}

impl Domain {
    /// The interval `lo..=hi`. Empty when `lo > hi`.
    pub fn range(lo: i32, hi: i32) -> Self {
        if lo > hi {
            return Self::empty();
        }
        let span = (hi as i64 - lo as i64 + 1) as usize;
        let mut words: SmallVec<[u64; 2]> = SmallVec::from_elem(u64::MAX, span.div_ceil(64));
        let rem = span % 64;
        if rem != 0 {
            *words.last_mut().unwrap() = (1u64 << rem) - 1;
        }
        Domain {
            base: lo,
            words,
            min: lo,
            max: hi,
            len: span as u32,
        }
    }

    pub fn from_values<I: IntoIterator<Item = i32>>(values: I) -> Self {
        let mut vals: Vec<i32> = values.into_iter().collect();
        vals.sort_unstable();
        vals.dedup();
        let (Some(&lo), Some(&hi)) = (vals.first(), vals.last()) else {
            return Self::empty();
        };
        let span = (hi as i64 - lo as i64 + 1) as usize;
        let mut words: SmallVec<[u64; 2]> = SmallVec::from_elem(0, span.div_ceil(64));
        for v in &vals {
            let idx = (*v as i64 - lo as i64) as usize;
            words[idx / 64] |= 1 << (idx % 64);
        }
        Domain {
            base: lo,
            words,
            min: lo,
            max: hi,
            len: vals.len() as u32,
        }
    }

    pub fn singleton(value: i32) -> Self {
        Self::range(value, value)
    }

    pub fn empty() -> Self {
        Domain {
            base: 0,
            words: SmallVec::new(),
            min: 0,
            max: -1,
            len: 0,
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_singleton(&self) -> bool {
        self.len == 1
    }

    /// The value of a singleton domain.
    #[inline]
    pub fn value(&self) -> Option<i32> {
        self.is_singleton().then_some(self.min)
    }

    #[inline]
    pub fn min(&self) -> Option<i32> {
        (!self.is_empty()).then_some(self.min)
    }

    #[inline]
    pub fn max(&self) -> Option<i32> {
        (!self.is_empty()).then_some(self.max)
    }

    /// Lower bound; callers guarantee non-emptiness.
    #[inline]
    pub(crate) fn lb(&self) -> i32 {
        self.min
    }

    #[inline]
    pub(crate) fn ub(&self) -> i32 {
        self.max
    }

    #[inline]
    fn index(&self, value: i64) -> Option<usize> {
        if self.is_empty() || value < self.min as i64 || value > self.max as i64 {
            return None;
        }
        Some((value - self.base as i64) as usize)
    }

    #[inline]
    pub fn contains(&self, value: i32) -> bool {
        self.contains_wide(value as i64)
    }

    /// Membership test for values that may lie outside the `i32` range.
    #[inline]
    pub fn contains_wide(&self, value: i64) -> bool {
        match self.index(value) {
            Some(idx) => self.words[idx / 64] & (1 << (idx % 64)) != 0,
            None => false,
        }
    }

    /// Largest value strictly below the maximum, if any.
    pub fn second_max(&self) -> Option<i32> {
        if self.len < 2 {
            return None;
        }
        self.prev_below(self.max)
    }

    fn prev_below(&self, value: i32) -> Option<i32> {
        let top = (value as i64 - self.base as i64 - 1) as isize;
        if top < 0 {
            return None;
        }
        let mut w = top as usize / 64;
        let bit = top as usize % 64;
        let mut word = self.words[w] & (u64::MAX >> (63 - bit));
        loop {
            if word != 0 {
                let idx = w * 64 + 63 - word.leading_zeros() as usize;
                return Some((self.base as i64 + idx as i64) as i32);
            }
            if w == 0 {
                return None;
            }
            w -= 1;
            word = self.words[w];
        }
    }

    fn refresh(&mut self) {
        let mut len = 0u32;
        let mut first = None;
        let mut last = 0usize;
        for (w, word) in self.words.iter().enumerate() {
            if *word != 0 {
                len += word.count_ones();
                if first.is_none() {
                    first = Some(w * 64 + word.trailing_zeros() as usize);
                }
                last = w * 64 + 63 - word.leading_zeros() as usize;
            }
        }
        self.len = len;
        if let Some(first) = first {
            self.min = (self.base as i64 + first as i64) as i32;
            self.max = (self.base as i64 + last as i64) as i32;
        }
    }

    /// Removes `value`. Returns whether the domain changed.
    pub fn remove(&mut self, value: i32) -> bool {
        self.remove_wide(value as i64)
    }

    pub(crate) fn remove_wide(&mut self, value: i64) -> bool {
        let Some(idx) = self.index(value) else {
            return false;
        };
        let mask = 1u64 << (idx % 64);
        if self.words[idx / 64] & mask == 0 {
            return false;
        }
        self.words[idx / 64] &= !mask;
        self.len -= 1;
        if self.len > 0 && (value == self.min as i64 || value == self.max as i64) {
            self.refresh();
        }
        true
    }

    /// Removes every value below `lo`. Returns whether the domain changed.
    pub fn set_min(&mut self, lo: i64) -> bool {
        if self.is_empty() || lo <= self.min as i64 {
            return false;
        }
        if lo > self.max as i64 {
            self.clear();
            return true;
        }
        let cut = (lo - self.base as i64) as usize;
        for w in 0..cut / 64 {
            self.words[w] = 0;
        }
        self.words[cut / 64] &= u64::MAX << (cut % 64);
        self.refresh();
        true
    }

    /// Removes every value above `hi`. Returns whether the domain changed.
    pub fn set_max(&mut self, hi: i64) -> bool {
        if self.is_empty() || hi >= self.max as i64 {
            return false;
        }
        if hi < self.min as i64 {
            self.clear();
            return true;
        }
        let keep = (hi - self.base as i64) as usize;
        let nwords = self.words.len();
        for w in keep / 64 + 1..nwords {
            self.words[w] = 0;
        }
        let bit = keep % 64;
        self.words[keep / 64] &= u64::MAX >> (63 - bit);
        self.refresh();
        true
    }

    /// Restricts the domain to `{value}` (empty if absent). Returns whether it changed.
    pub fn assign(&mut self, value: i32) -> bool {
        if !self.contains(value) {
            let changed = !self.is_empty();
            self.clear();
            return changed;
        }
        if self.len == 1 {
            return false;
        }
        self.set_min(value as i64);
        self.set_max(value as i64);
        true
    }

    fn clear(&mut self) {
        for w in self.words.iter_mut() {
            *w = 0;
        }
        self.len = 0;
    }

    /// Values in ascending order.
    pub fn iter(&self) -> DomainIter<'_> {
        DomainIter {
            domain: self,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn values(&self) -> Vec<i32> {
        self.iter().collect()
    }

    /// Whether `self` is a subset of `other`.
    pub fn is_subset(&self, other: &Domain) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    /// Whether the values form one contiguous interval.
    pub fn is_interval(&self) -> bool {
        self.is_empty() || (self.max as i64 - self.min as i64 + 1) as usize == self.len()
    }
}

pub struct DomainIter<'a> {
    domain: &'a Domain,
    word_idx: usize,
    current: u64,
}

impl Iterator for DomainIter<'_> {
    type Item = i32;

    fn next(&mut self) -> Option<i32> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let idx = self.word_idx * 64 + bit;
                return Some((self.domain.base as i64 + idx as i64) as i32);
            }
            self.word_idx += 1;
            if self.word_idx >= self.domain.words.len() {
                return None;
            }
            self.current = self.domain.words[self.word_idx];
        }
    }
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.iter().eq(other.iter())
    }
}

impl Eq for Domain {}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_interval() && self.len > 2 {
            write!(f, "{{{}..{}}}", self.min, self.max)
        } else {
            f.debug_set().entries(self.iter()).finish()
        }
    }
}
