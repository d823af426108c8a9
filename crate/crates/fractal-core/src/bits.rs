//! Fixed-width bit set indexed by cell position, the backing store for
//! level covers. Range population counts are word-parallel so that
//! per-parent child counting costs O(range / 64).

use alloc::vec;
use alloc::vec::Vec;

/// A set over `{0, .., len-1}` stored one bit per element.
#[derive(Clone, PartialEq, Eq)]
pub struct BitSet {
    len: u64,
    words: Vec<u64>,
}

impl BitSet {
    /// Empty set over a domain of `len` positions.
    pub fn new(len: u64) -> Self {
        let nwords = len.div_ceil(64) as usize;
        BitSet { len, words: vec![0; nwords] }
    }

    /// Full set over a domain of `len` positions.
    pub fn full(len: u64) -> Self {
        let mut s = Self::new(len);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.trim_tail();
        s
    }

    /// Domain size (number of addressable positions, not of members).
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn insert(&mut self, i: u64) {
        debug_assert!(i < self.len);
        self.words[(i / 64) as usize] |= 1u64 << (i % 64);
    }

    pub fn remove(&mut self, i: u64) {
        debug_assert!(i < self.len);
        self.words[(i / 64) as usize] &= !(1u64 << (i % 64));
    }

    pub fn contains(&self, i: u64) -> bool {
        if i >= self.len {
            return false;
        }
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    /// Number of members.
    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of members in `[lo, hi)`.
    pub fn count_range(&self, lo: u64, hi: u64) -> u64 {
        if lo >= hi || lo >= self.len {
            return 0;
        }
        let hi = hi.min(self.len);
        let (wl, bl) = ((lo / 64) as usize, lo % 64);
        let (wh, bh) = ((hi / 64) as usize, hi % 64);
        if wl == wh {
            return (self.words[wl] & ones_mask(bl, bh)).count_ones() as u64;
        }
        let mut n = (self.words[wl] & (u64::MAX << bl)).count_ones() as u64;
        for w in &self.words[wl + 1..wh] {
            n += w.count_ones() as u64;
        }
        if bh > 0 {
            n += (self.words[wh] & (u64::MAX >> (64 - bh))).count_ones() as u64;
        }
        n
    }

    /// Set every position in `[lo, hi)`.
    pub fn insert_range(&mut self, lo: u64, hi: u64) {
        if lo >= hi || lo >= self.len {
            return;
        }
        let hi = hi.min(self.len);
        let (wl, bl) = ((lo / 64) as usize, lo % 64);
        let (wh, bh) = ((hi / 64) as usize, hi % 64);
        if wl == wh {
            self.words[wl] |= ones_mask(bl, bh);
            return;
        }
        self.words[wl] |= u64::MAX << bl;
        for w in &mut self.words[wl + 1..wh] {
            *w = u64::MAX;
        }
        if bh > 0 {
            self.words[wh] |= u64::MAX >> (64 - bh);
        }
    }

    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn is_subset_of(&self, other: &BitSet) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Members mapped by `k -> k >> shift`, i.e. the set of ancestors
    /// `shift` scales up.
    pub fn project_down(&self, shift: u32) -> BitSet {
        let mut out = BitSet::new(self.len >> shift);
        for k in self.iter() {
            out.insert(k >> shift);
        }
        out
    }

    /// Members expanded to all `2^shift` descendants `shift` scales down.
    pub fn expand_up(&self, shift: u32) -> BitSet {
        let mut out = BitSet::new(self.len << shift);
        for k in self.iter() {
            out.insert_range(k << shift, (k + 1) << shift);
        }
        out
    }

    /// Ascending iterator over members.
    pub fn iter(&self) -> Ones<'_> {
        Ones { words: &self.words, word_idx: 0, current: self.words.first().copied().unwrap_or(0) }
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub(crate) fn from_words(len: u64, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len() as u64, len.div_ceil(64));
        let mut s = BitSet { len, words };
        s.trim_tail();
        s
    }


    fn trim_tail(&mut self) {
        let extra = self.words.len() as u64 * 64 - self.len;
        if extra > 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= u64::MAX >> extra;
            }
        }
    }
}

fn ones_mask(lo: u64, hi: u64) -> u64 {
    debug_assert!(lo < hi && hi <= 64);
    let high = if hi == 64 { u64::MAX } else { (1u64 << hi) - 1 };
    high & (u64::MAX << lo)
}

impl core::fmt::Debug for BitSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "BitSet(len={}, count={})", self.len, self.count())
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        while self.current == 0 {
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
        let bit = self.current.trailing_zeros() as u64;
        self.current &= self.current - 1;
        Some(self.word_idx as u64 * 64 + bit)
    }
}
