//! Clock (second-chance) page cache.
//!
//! Frames hold `Arc<PageBuf>`; a buffer is filled exactly once by an I/O
//! worker and may be waited on by any number of readers. Pinned frames are
//! skipped by the clock hand, so a page a caller is assembling is never
//! replaced underneath it.

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex, OnceLock};

pub(crate) type PageData = Result<Box<[u8]>, (std::io::ErrorKind, String)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct PageKey {
    /// 0 = out-adjacency, 1 = in-adjacency.
    pub file: u8,
    pub page: u64,
}

#[derive(Debug, Default)]
pub(crate) struct PageBuf {
    data: OnceLock<PageData>,
    lock: Mutex<()>,
    ready: Condvar,
}

impl PageBuf {
    pub fn fill(&self, data: PageData) {
        let _ = self.data.set(data);
        let _guard = self.lock.lock().unwrap();
        self.ready.notify_all();
    }

    pub fn try_get(&self) -> Option<&PageData> {
        self.data.get()
    }

    pub fn wait(&self) -> &PageData {
        if let Some(d) = self.data.get() {
            return d;
        }
        let mut guard = self.lock.lock().unwrap();
        loop {
            if let Some(d) = self.data.get() {
                return d;
            }
            guard = self.ready.wait(guard).unwrap();
        }
    }
}

/// Outcome of a lookup. Every variant carries one pin that the caller must
/// release with [`ClockCache::unpin`] (a no-op for bypass buffers).
pub(crate) enum Lookup {
    /// Resident or already being loaded.
    Hit(Arc<PageBuf>),
    /// A frame was claimed; the caller must schedule the load.
    Miss(Arc<PageBuf>),
    /// Every frame is pinned; the page is read without being cached.
    Bypass(Arc<PageBuf>),
}

struct Frame {
    key: PageKey,
    buf: Arc<PageBuf>,
    referenced: bool,
    pins: u32,
}

pub(crate) struct ClockCache {
    capacity: usize,
    page_size: usize,
    frames: Vec<Frame>,
    map: HashMap<PageKey, usize>,
    hand: usize,
    peak_resident: usize,
}

impl ClockCache {
    pub fn new(capacity: usize, page_size: usize) -> Self {
        assert!(capacity >= 1);
        ClockCache {
            capacity,
            page_size,
            frames: Vec::new(),
            map: HashMap::new(),
            hand: 0,
            peak_resident: 0,
        }
    }

    pub fn resident_bytes(&self) -> usize {
        self.frames.len() * self.page_size
    }

    pub fn peak_resident_bytes(&self) -> usize {
        self.peak_resident
    }

    pub fn lookup(&mut self, key: PageKey) -> Lookup {
        if let Some(&i) = self.map.get(&key) {
            let f = &mut self.frames[i];
            f.referenced = true;
            f.pins += 1;
            return Lookup::Hit(Arc::clone(&f.buf));
        }
        let buf = Arc::new(PageBuf::default());
        let frame = Frame {
            key,
            buf: Arc::clone(&buf),
            referenced: true,
            pins: 1,
        };
        if self.frames.len() < self.capacity {
            self.map.insert(key, self.frames.len());
            self.frames.push(frame);
            self.note_insertion();
            return Lookup::Miss(buf);
        }
        // Two full sweeps clear every reference bit, so failing to find a
        // victim means every frame is pinned.
        for _ in 0..2 * self.capacity {
            let i = self.hand;
            self.hand = (self.hand + 1) % self.capacity;
            let f = &mut self.frames[i];
            if f.pins > 0 {
                continue;
            }
            if f.referenced {
                f.referenced = false;
                continue;
            }
            self.map.remove(&f.key);
            *f = frame;
            self.map.insert(key, i);
            self.note_insertion();
            return Lookup::Miss(buf);
        }
        Lookup::Bypass(buf)
    }

    fn note_insertion(&mut self) {
        let resident = self.resident_bytes();
        assert!(
            self.map.len() <= self.capacity && resident <= self.capacity * self.page_size,
            "page cache over capacity"
        );
        self.peak_resident = self.peak_resident.max(resident);
    }

    pub fn unpin(&mut self, key: PageKey, buf: &Arc<PageBuf>) {
        if let Some(&i) = self.map.get(&key) {
            let f = &mut self.frames[i];
            if Arc::ptr_eq(&f.buf, buf) {
                debug_assert!(f.pins > 0);
                f.pins -= 1;
            }
        }
    }

    /// Drops a frame whose load failed so a later request retries the read.
    pub fn forget(&mut self, key: PageKey, buf: &Arc<PageBuf>) {
        if let Some(&i) = self.map.get(&key) {
            if Arc::ptr_eq(&self.frames[i].buf, buf) {
                self.map.remove(&key);
                let f = &mut self.frames[i];
                f.referenced = false;
                f.pins = 0;
                // An unmapped key with a dead buffer; reused on the next sweep.
                f.key = PageKey {
                    file: u8::MAX,
                    page: u64::MAX - i as u64,
                };
            }
        }
    }

    #[cfg(test)]
    fn is_resident(&self, key: PageKey) -> bool {
        self.map.contains_key(&key)
    }
}
