use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::material::{materialize, KeyMaterial, Segment};
use super::PoolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoolId(pub u32);

impl fmt::Display for PoolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What extracted bits were spent on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// One-time pads for control or measurement packets.
    Packet,
    /// Cipher key protecting a pool-to-pool transfer.
    TransferKey,
    /// Bits handed to another pool.
    TransferOut,
}

/// Lifetime bit counters, split by origin and use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolLedger {
    /// QKD bits accepted into the pool.
    pub generated: u64,
    /// QKD bits dropped at capacity.
    pub overflow: u64,
    pub transfer_in: u64,
    pub packet: u64,
    pub transfer_key: u64,
    pub transfer_out: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deposit {
    pub accepted: u64,
    pub overflow: u64,
}

/// FIFO reservoir of key bits.
///
/// Fresh QKD bits come from the pool's own seeded keystream, so the pool only
/// stores segment descriptors; bits are generated on extraction. Both
/// endpoints of a link derive the same material from the same seed.
#[derive(Debug, Clone)]
pub struct KeyPool {
    id: PoolId,
    stream: u64,
    next_offset: u64,
    segments: VecDeque<Segment>,
    level: u64,
    capacity: Option<u64>,
    threshold: u64,
    ledger: PoolLedger,
}

impl KeyPool {
    pub fn new(id: PoolId, stream_seed: u64) -> Self {
        Self {
            id,
            stream: stream_seed,
            next_offset: 0,
            segments: VecDeque::new(),
            level: 0,
            capacity: None,
            threshold: 0,
            ledger: PoolLedger::default(),
        }
    }

    pub fn with_threshold(mut self, threshold: u64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_capacity(mut self, capacity: u64) -> Self {
        self.capacity = Some(capacity);
        self
    }

    pub fn id(&self) -> PoolId {
        self.id
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn capacity(&self) -> Option<u64> {
        self.capacity
    }

    pub fn ledger(&self) -> &PoolLedger {
        &self.ledger
    }

    pub fn total_deposited(&self) -> u64 {
        self.ledger.generated + self.ledger.transfer_in
    }

    pub fn total_extracted(&self) -> u64 {
        self.ledger.packet + self.ledger.transfer_key + self.ledger.transfer_out
    }

    pub fn below_threshold(&self) -> bool {
        self.level < self.threshold
    }

    fn room(&self) -> u64 {
        self.capacity.map_or(u64::MAX, |c| c.saturating_sub(self.level))
    }

    /// Adds a freshly generated block of `bits` QKD key bits.
    pub fn deposit(&mut self, bits: u64) -> Deposit {
        let accepted = bits.min(self.room());
        let overflow = bits - accepted;
        if accepted > 0 {
            self.push_segment(Segment {
                stream: self.stream,
                start: self.next_offset,
                len: accepted,
            });
            self.next_offset += accepted;
            self.level += accepted;
        }
        // discarded bits are never used, but they still burn keystream
        self.next_offset += overflow;
        self.ledger.generated += accepted;
        self.ledger.overflow += overflow;
        Deposit { accepted, overflow }
    }

    pub(crate) fn deposit_segments(&mut self, segments: Vec<Segment>) {
        for s in segments {
            self.level += s.len;
            self.ledger.transfer_in += s.len;
            self.push_segment(s);
        }
    }

    fn push_segment(&mut self, s: Segment) {
        if let Some(last) = self.segments.back_mut() {
            if last.stream == s.stream && last.start + last.len == s.start {
                last.len += s.len;
                return;
            }
        }
        self.segments.push_back(s);
    }

    /// Removes `n` bits for packet encryption.
    pub fn extract(&mut self, n: u64) -> Result<KeyMaterial, PoolError> {
        self.extract_for(n, Purpose::Packet)
    }

    /// Removes exactly `n` bits FIFO, or nothing at all on shortage.
    pub fn extract_for(&mut self, n: u64, purpose: Purpose) -> Result<KeyMaterial, PoolError> {
        let segments = self.take_segments(n, purpose)?;
        Ok(materialize(&segments))
    }

    pub(crate) fn take_segments(
        &mut self,
        n: u64,
        purpose: Purpose,
    ) -> Result<Vec<Segment>, PoolError> {
        if n == 0 {
            return Err(PoolError::EmptyRequest);
        }
        if self.level < n {
            return Err(PoolError::Shortage {
                pool: self.id,
                requested: n,
                available: self.level,
            });
        }
        let mut out = Vec::new();
        let mut need = n;
        while need > 0 {
            let front = self.segments.pop_front().expect("level tracks segments");
            if front.len <= need {
                need -= front.len;
                out.push(front);
            } else {
                let (head, rest) = front.split_at(need);
                out.push(head);
                self.segments.push_front(rest);
                need = 0;
            }
        }
        self.level -= n;
        match purpose {
            Purpose::Packet => self.ledger.packet += n,
            Purpose::TransferKey => self.ledger.transfer_key += n,
            Purpose::TransferOut => self.ledger.transfer_out += n,
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool() -> KeyPool {
        KeyPool::new(PoolId(1), 42)
    }

    #[test]
    fn deposit_is_additive() {
        let mut p = pool();
        p.deposit(1000);
        assert_eq!(p.level(), 1000);
        p.deposit(0);
        assert_eq!(p.level(), 1000);
        p.deposit(13_000);
        assert_eq!(p.level(), 14_000);
    }

    #[test]
    fn exact_drain_and_shortage() {
        let mut p = pool();
        p.deposit(64);
        assert_eq!(p.extract(64).unwrap().len_bits(), 64);
        assert_eq!(p.level(), 0);

        let mut p = pool();
        p.deposit(63);
        let err = p.extract(64).unwrap_err();
        assert!(matches!(err, PoolError::Shortage { requested: 64, available: 63, .. }));
        assert_eq!(p.level(), 63);
        assert!(p.extract(0).is_err());
    }

    #[test]
    fn failed_extract_keeps_fifo_order() {
        let mut a = pool();
        let mut b = pool();
        a.deposit(100);
        b.deposit(100);
        assert!(a.extract(101).is_err());
        assert_eq!(a.extract(100).unwrap(), b.extract(100).unwrap());
    }

    #[test]
    fn extraction_is_fifo_and_disjoint() {
        let mut p = pool();
        p.deposit(100);
        p.deposit(100);
        let first = p.extract(128).unwrap();
        let second = p.extract(64).unwrap();
        let mut whole = pool();
        whole.deposit(192);
        let all = whole.extract(192).unwrap();
        for i in 0..128 {
            assert_eq!(first.bit(i), all.bit(i));
        }
        for i in 0..64 {
            assert_eq!(second.bit(i), all.bit(128 + i));
        }
    }

    #[test]
    fn capacity_truncates() {
        let mut p = pool().with_capacity(1000);
        let d = p.deposit(1500);
        assert_eq!(d, Deposit { accepted: 1000, overflow: 500 });
        assert_eq!(p.level(), 1000);
        assert_eq!(p.ledger().overflow, 500);
    }

    #[test]
    fn counters_balance() {
        let mut p = pool();
        p.deposit(5000);
        p.extract(64).unwrap();
        p.extract_for(128, Purpose::TransferKey).unwrap();
        assert_eq!(p.total_deposited() - p.total_extracted(), p.level());
    }
}
