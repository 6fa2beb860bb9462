//! Deterministic in-process datagram layer.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::link::EndpointId;

use super::{CommsError, SimTime};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub from: EndpointId,
    pub to: EndpointId,
    /// 1-based position of this datagram on its `(from, to)` link.
    pub link_seq: u64,
    pub sent_at: SimTime,
    pub due: SimTime,
    pub octets: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Receipt {
    pub link_seq: u64,
    pub due: SimTime,
    pub dropped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropRecord {
    pub from: EndpointId,
    pub to: EndpointId,
    pub link_seq: u64,
    pub at: SimTime,
}

/// A datagram network driven by the simulation clock.
pub trait Transport {
    fn register(&mut self, endpoint: EndpointId) -> Result<(), CommsError>;

    /// Drops the `link_seq`-th datagram sent from `from` to `to`.
    fn schedule_drop(&mut self, from: EndpointId, to: EndpointId, link_seq: u64);

    fn send(
        &mut self,
        from: EndpointId,
        to: EndpointId,
        octets: Vec<u8>,
        now: SimTime,
    ) -> Result<Receipt, CommsError>;

    /// Due time of the earliest undelivered datagram.
    fn next_due(&self) -> Option<SimTime>;

    /// All datagrams due at or before `at`, in due-then-send order.
    fn poll(&mut self, at: SimTime) -> Vec<Datagram>;

    fn dropped(&self) -> &[DropRecord];
}

#[derive(Debug, Default)]
pub(crate) struct LinkState {
    sent: u64,
    drops: BTreeSet<u64>,
}

impl LinkState {
    /// Numbers the next datagram; true when it is scheduled to be dropped.
    pub(crate) fn next(&mut self) -> (u64, bool) {
        self.sent += 1;
        (self.sent, self.drops.contains(&self.sent))
    }

    pub(crate) fn drop_at(&mut self, link_seq: u64) {
        self.drops.insert(link_seq);
    }
}

/// Queue ordered by due time, then by global send order.
#[derive(Debug, Eq, PartialEq, Ord, PartialOrd)]
struct Pending {
    due: SimTime,
    order: u64,
}

#[derive(Debug, Default)]
pub struct SimTransport {
    endpoints: BTreeSet<EndpointId>,
    latency: SimTime,
    links: BTreeMap<(EndpointId, EndpointId), LinkState>,
    heap: BinaryHeap<Reverse<(Pending, usize)>>,
    slots: Vec<Option<Datagram>>,
    sends: u64,
    dropped: Vec<DropRecord>,
}

impl SimTransport {
    pub fn new(latency: SimTime) -> Self {
        Self {
            latency,
            ..Self::default()
        }
    }

    pub fn latency(&self) -> SimTime {
        self.latency
    }
}

impl Transport for SimTransport {
    fn register(&mut self, endpoint: EndpointId) -> Result<(), CommsError> {
        self.endpoints.insert(endpoint);
        Ok(())
    }

    fn schedule_drop(&mut self, from: EndpointId, to: EndpointId, link_seq: u64) {
        self.links.entry((from, to)).or_default().drop_at(link_seq);
    }

    fn dropped(&self) -> &[DropRecord] {
        &self.dropped
    }

    fn send(
        &mut self,
        from: EndpointId,
        to: EndpointId,
        octets: Vec<u8>,
        now: SimTime,
    ) -> Result<Receipt, CommsError> {
        for ep in [from, to] {
            if !self.endpoints.contains(&ep) {
                return Err(CommsError::UnknownEndpoint(ep));
            }
        }
        let (link_seq, drop) = self.links.entry((from, to)).or_default().next();
        let due = now + self.latency;
        if drop {
            self.dropped.push(DropRecord { from, to, link_seq, at: now });
            return Ok(Receipt { link_seq, due, dropped: true });
        }
        self.sends += 1;
        let slot = self.slots.len();
        self.slots.push(Some(Datagram {
            from,
            to,
            link_seq,
            sent_at: now,
            due,
            octets,
        }));
        self.heap.push(Reverse((Pending { due, order: self.sends }, slot)));
        Ok(Receipt { link_seq, due, dropped: false })
    }

    fn next_due(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse((p, _))| p.due)
    }

    fn poll(&mut self, at: SimTime) -> Vec<Datagram> {
        let mut out = Vec::new();
        while let Some(Reverse((p, _))) = self.heap.peek() {
            if p.due > at {
                break;
            }
            let Reverse((_, slot)) = self.heap.pop().unwrap();
            out.push(self.slots[slot].take().expect("delivered once"));
        }
        if self.heap.is_empty() {
            self.slots.clear();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: EndpointId = EndpointId(1);
    const B: EndpointId = EndpointId(2);

    fn transport() -> SimTransport {
        let mut t = SimTransport::new(SimTime::from_secs(0.001));
        t.register(A).unwrap();
        t.register(B).unwrap();
        t
    }

    #[test]
    fn latency_contract() {
        let mut t = transport();
        t.send(A, B, vec![1], SimTime::ZERO).unwrap();
        assert!(t.poll(SimTime::from_secs(0.0009)).is_empty());
        let got = t.poll(SimTime::from_secs(0.001));
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].octets, vec![1]);
    }

    #[test]
    fn fifo_per_link() {
        let mut t = transport();
        t.send(A, B, vec![1], SimTime::ZERO).unwrap();
        t.send(A, B, vec![2], SimTime::ZERO).unwrap();
        t.send(B, A, vec![3], SimTime::ZERO).unwrap();
        let got: Vec<_> = t.poll(SimTime(u64::MAX)).into_iter().map(|d| d.octets[0]).collect();
        assert_eq!(got, vec![1, 2, 3]);
    }

    #[test]
    fn scheduled_drop_recorded_once() {
        let mut t = transport();
        t.schedule_drop(A, B, 5);
        let mut delivered = Vec::new();
        for i in 1..=8u8 {
            t.send(A, B, vec![i], SimTime(u64::from(i))).unwrap();
            delivered.extend(t.poll(SimTime(u64::MAX)).into_iter().map(|d| d.link_seq));
        }
        assert_eq!(delivered, vec![1, 2, 3, 4, 6, 7, 8]);
        assert_eq!(t.dropped().len(), 1);
        assert_eq!(t.dropped()[0].link_seq, 5);
    }

    #[test]
    fn unknown_endpoint() {
        let mut t = transport();
        assert_eq!(
            t.send(A, EndpointId(9), vec![], SimTime::ZERO),
            Err(CommsError::UnknownEndpoint(EndpointId(9)))
        );
    }
}
