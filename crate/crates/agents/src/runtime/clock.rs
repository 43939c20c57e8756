use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Platform time in epoch milliseconds. Virtual clocks only move when a
/// driver advances them; wall clocks follow the host.
#[derive(Debug, Clone)]
pub enum Clock {
    Virtual(Arc<AtomicI64>),
    Wall { origin_ms: i64, origin: Instant },
}

impl Clock {
    pub fn virtual_at(epoch_ms: i64) -> Self {
        Clock::Virtual(Arc::new(AtomicI64::new(epoch_ms)))
    }

    pub fn wall() -> Self {
        let origin_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0);
        Clock::Wall {
            origin_ms,
            origin: Instant::now(),
        }
    }

    pub fn now_ms(&self) -> i64 {
        match self {
            Clock::Virtual(t) => t.load(Ordering::SeqCst),
            Clock::Wall { origin_ms, origin } => origin_ms + origin.elapsed().as_millis() as i64,
        }
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self, Clock::Virtual(_))
    }

    /// Moves a virtual clock forward; ignored for wall clocks and for
    /// attempts to go backwards.
    pub fn advance_to(&self, epoch_ms: i64) {
        if let Clock::Virtual(t) = self {
            t.fetch_max(epoch_ms, Ordering::SeqCst);
        }
    }
}
