use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

macro_rules! counters {
    ($($name:ident),* $(,)?) => {
        /// Monotone I/O and messaging counters shared by the cache, the I/O
        /// workers and the BSP engine.
        #[derive(Debug, Default)]
        pub struct IoStats {
            $(pub(crate) $name: AtomicU64,)*
        }

        /// Plain copy of [`IoStats`], serialized as a flat JSON object.
        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
        pub struct IoStatsSnapshot {
            $(pub $name: u64,)*
        }

        impl IoStats {
            pub fn snapshot(&self) -> IoStatsSnapshot {
                IoStatsSnapshot { $($name: self.$name.load(Ordering::Acquire),)* }
            }

            /// Zeroes every counter and returns what they held.
            pub fn reset(&self) -> IoStatsSnapshot {
                IoStatsSnapshot { $($name: self.$name.swap(0, Ordering::AcqRel),)* }
            }
        }

        impl IoStatsSnapshot {
            pub const FIELDS: &'static [&'static str] = &[$(stringify!($name)),*];

            /// Counter-wise difference, for measuring a window.
            pub fn since(&self, earlier: &IoStatsSnapshot) -> IoStatsSnapshot {
                IoStatsSnapshot { $($name: self.$name - earlier.$name,)* }
            }

            pub fn plus(&self, other: &IoStatsSnapshot) -> IoStatsSnapshot {
                IoStatsSnapshot { $($name: self.$name + other.$name,)* }
            }

            pub fn is_zero(&self) -> bool {
                true $(&& self.$name == 0)*
            }
        }
    };
}

counters!(
    bytes_read_from_disk,
    read_requests_issued,
    cache_accesses,
    cache_hits,
    messages_point_to_point,
    messages_multicast,
    barrier_count,
);

impl IoStats {
    #[inline]
    pub(crate) fn add(counter: &AtomicU64, v: u64) {
        counter.fetch_add(v, Ordering::AcqRel);
    }
}

impl IoStatsSnapshot {
    /// `cache_hits / cache_accesses`, or 0 when nothing was accessed.
    pub fn cache_hit_ratio(&self) -> f64 {
        if self.cache_accesses == 0 {
            0.0
        } else {
            self.cache_hits as f64 / self.cache_accesses as f64
        }
    }
}

/// Current/peak byte gauge used for memory-contract accounting.
#[derive(Debug, Default)]
pub struct MemoryGauge {
    current: AtomicUsize,
    peak: AtomicUsize,
}

impl MemoryGauge {
    pub fn add(&self, bytes: usize) {
        let now = self.current.fetch_add(bytes, Ordering::AcqRel) + bytes;
        self.peak.fetch_max(now, Ordering::AcqRel);
    }

    pub fn sub(&self, bytes: usize) {
        self.current.fetch_sub(bytes, Ordering::AcqRel);
    }

    pub fn current(&self) -> usize {
        self.current.load(Ordering::Acquire)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::Acquire)
    }

    /// Restarts peak tracking from the current level.
    pub fn reset_peak(&self) {
        self.peak.store(self.current(), Ordering::Release);
    }
}
