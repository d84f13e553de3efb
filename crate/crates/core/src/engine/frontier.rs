use std::sync::atomic::{AtomicU64, Ordering};

/// Fixed-size bitset whose bits can be set concurrently.
#[derive(Debug)]
pub struct Bitset {
    words: Vec<AtomicU64>,
    len: usize,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset {
            words: (0..len.div_ceil(64)).map(|_| AtomicU64::new(0)).collect(),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn memory_bytes(&self) -> usize {
        self.words.len() * 8
    }

    /// Returns true if the bit was newly set.
    #[inline]
    pub fn set(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        let bit = 1u64 << (i % 64);
        self.words[i / 64].fetch_or(bit, Ordering::Relaxed) & bit == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64].load(Ordering::Relaxed) & (1u64 << (i % 64)) != 0
    }

    pub fn set_all(&self) {
        for (w, word) in self.words.iter().enumerate() {
            let valid = (self.len - w * 64).min(64);
            let mask = if valid == 64 { u64::MAX } else { (1u64 << valid) - 1 };
            word.store(mask, Ordering::Relaxed);
        }
    }

    pub fn clear(&self) {
        for w in &self.words {
            w.store(0, Ordering::Relaxed);
        }
    }

    pub fn count(&self) -> usize {
        self.words
            .iter()
            .map(|w| w.load(Ordering::Relaxed).count_ones() as usize)
            .sum()
    }

    pub fn none(&self) -> bool {
        self.words.iter().all(|w| w.load(Ordering::Relaxed) == 0)
    }

    /// Moves every set bit of `other` into `self`, clearing `other`.
    pub fn take_from(&self, other: &Bitset) {
        for (a, b) in self.words.iter().zip(&other.words) {
            a.store(b.swap(0, Ordering::Relaxed), Ordering::Relaxed);
        }
    }

    /// ORs every set bit of `other` into `self`, clearing `other`.
    pub fn union_take(&self, other: &Bitset) {
        for (a, b) in self.words.iter().zip(&other.words) {
            a.fetch_or(b.swap(0, Ordering::Relaxed), Ordering::Relaxed);
        }
    }

    /// Set bits in `lo..hi`, ascending, read live so bits set behind the
    /// cursor are skipped and bits set ahead of it are seen.
    pub fn iter_range(&self, lo: usize, hi: usize) -> RangeIter<'_> {
        RangeIter {
            set: self,
            next: lo,
            hi: hi.min(self.len),
        }
    }

    pub fn iter(&self) -> RangeIter<'_> {
        self.iter_range(0, self.len)
    }
}

pub struct RangeIter<'a> {
    set: &'a Bitset,
    next: usize,
    hi: usize,
}

impl Iterator for RangeIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.next < self.hi {
            let w = self.next / 64;
            let word = self.set.words[w].load(Ordering::Relaxed) >> (self.next % 64);
            if word == 0 {
                self.next = (w + 1) * 64;
                continue;
            }
            let i = self.next + word.trailing_zeros() as usize;
            if i >= self.hi {
                break;
            }
            self.next = i + 1;
            return Some(i);
        }
        self.next = self.hi;
        None
    }
}
