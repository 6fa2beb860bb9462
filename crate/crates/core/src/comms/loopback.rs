//! Real UDP datagrams on 127.0.0.1, one socket per emulated endpoint.
//!
//! Each endpoint gets a receiver thread and a sender thread. They talk to the
//! owning event loop only through channels, so no state is shared between
//! threads. A zero-length datagram tells a receiver to stop; real frames are
//! never empty.
//!
//! Delivery is still stamped with the virtual clock: `poll` blocks until
//! every datagram due by then has come back through the kernel, and returns
//! them in send order. A datagram that has not arrived within the timeout is
//! recorded as dropped.

use std::collections::{BTreeMap, VecDeque};
use std::io;
use std::net::{Ipv4Addr, SocketAddr, UdpSocket};
use std::sync::mpsc::{self, Receiver, Sender};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::link::EndpointId;

use super::transport::{Datagram, DropRecord, LinkState, Receipt, Transport};
use super::{CommsError, SimTime};

const MAX_DATAGRAM: usize = 1500;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inbound {
    pub to: EndpointId,
    pub from_addr: SocketAddr,
    pub octets: Vec<u8>,
}

pub struct LoopbackTransport {
    latency: SimTime,
    timeout: Duration,
    ports: BTreeMap<EndpointId, u16>,
    addrs: BTreeMap<EndpointId, SocketAddr>,
    by_addr: BTreeMap<SocketAddr, EndpointId>,
    outboxes: BTreeMap<EndpointId, Sender<(SocketAddr, Vec<u8>)>>,
    inbox_tx: Sender<Inbound>,
    inbox: Receiver<Inbound>,
    senders: Vec<JoinHandle<()>>,
    receivers: Vec<JoinHandle<()>>,
    links: BTreeMap<(EndpointId, EndpointId), LinkState>,
    in_flight: VecDeque<Datagram>,
    arrived: BTreeMap<(EndpointId, EndpointId), VecDeque<Vec<u8>>>,
    dropped: Vec<DropRecord>,
}

impl LoopbackTransport {
    pub fn new(latency: SimTime) -> Self {
        let (inbox_tx, inbox) = mpsc::channel();
        Self {
            latency,
            timeout: Duration::from_secs(2),
            ports: BTreeMap::new(),
            addrs: BTreeMap::new(),
            by_addr: BTreeMap::new(),
            outboxes: BTreeMap::new(),
            inbox_tx,
            inbox,
            senders: Vec::new(),
            receivers: Vec::new(),
            links: BTreeMap::new(),
            in_flight: VecDeque::new(),
            arrived: BTreeMap::new(),
            dropped: Vec::new(),
        }
    }

    /// Fixed UDP ports per endpoint; unlisted endpoints get a free port.
    pub fn with_ports(mut self, ports: BTreeMap<EndpointId, u16>) -> Self {
        self.ports = ports;
        self
    }

    /// How long `poll` waits for a datagram before declaring it lost.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn addr(&self, ep: EndpointId) -> Option<SocketAddr> {
        self.addrs.get(&ep).copied()
    }

    fn file(&mut self, m: Inbound) {
        if let Some(&from) = self.by_addr.get(&m.from_addr) {
            self.arrived.entry((from, m.to)).or_default().push_back(m.octets);
        }
    }

    fn wait_for(&mut self, link: (EndpointId, EndpointId)) -> Option<Vec<u8>> {
        let deadline = Instant::now() + self.timeout;
        loop {
            if let Some(octets) = self.arrived.get_mut(&link).and_then(VecDeque::pop_front) {
                return Some(octets);
            }
            let left = deadline.saturating_duration_since(Instant::now());
            match self.inbox.recv_timeout(left) {
                Ok(m) => self.file(m),
                Err(_) => return None,
            }
        }
    }
}

impl Transport for LoopbackTransport {
    fn register(&mut self, ep: EndpointId) -> Result<(), CommsError> {
        if self.addrs.contains_key(&ep) {
            return Ok(());
        }
        let port = self.ports.get(&ep).copied().unwrap_or(0);
        let sock = UdpSocket::bind((Ipv4Addr::LOCALHOST, port))?;
        let addr = sock.local_addr()?;
        self.addrs.insert(ep, addr);
        self.by_addr.insert(addr, ep);

        let rx_sock = sock.try_clone()?;
        let in_tx = self.inbox_tx.clone();
        self.receivers.push(thread::spawn(move || receive_loop(ep, rx_sock, in_tx)));

        let (out_tx, out_rx) = mpsc::channel::<(SocketAddr, Vec<u8>)>();
        self.outboxes.insert(ep, out_tx);
        self.senders.push(thread::spawn(move || {
            for (to, octets) in out_rx {
                // a failed send is a lost datagram, as with any UDP socket
                let _ = sock.send_to(&octets, to);
            }
        }));
        Ok(())
    }

    fn schedule_drop(&mut self, from: EndpointId, to: EndpointId, link_seq: u64) {
        self.links.entry((from, to)).or_default().drop_at(link_seq);
    }

    fn send(
        &mut self,
        from: EndpointId,
        to: EndpointId,
        octets: Vec<u8>,
        now: SimTime,
    ) -> Result<Receipt, CommsError> {
        let outbox = self.outboxes.get(&from).ok_or(CommsError::UnknownEndpoint(from))?;
        let dest = self.addr(to).ok_or(CommsError::UnknownEndpoint(to))?;
        let (link_seq, drop) = self.links.entry((from, to)).or_default().next();
        let due = now + self.latency;
        if drop {
            self.dropped.push(DropRecord { from, to, link_seq, at: now });
            return Ok(Receipt { link_seq, due, dropped: true });
        }
        outbox
            .send((dest, octets))
            .map_err(|_| CommsError::Io(format!("sender for endpoint {from} has stopped")))?;
        self.in_flight.push_back(Datagram {
            from,
            to,
            link_seq,
            sent_at: now,
            due,
            octets: Vec::new(),
        });
        Ok(Receipt { link_seq, due, dropped: false })
    }

    fn next_due(&self) -> Option<SimTime> {
        self.in_flight.front().map(|d| d.due)
    }

    fn poll(&mut self, at: SimTime) -> Vec<Datagram> {
        let mut out = Vec::new();
        while self.in_flight.front().is_some_and(|d| d.due <= at) {
            let mut d = self.in_flight.pop_front().unwrap();
            match self.wait_for((d.from, d.to)) {
                Some(octets) => {
                    d.octets = octets;
                    out.push(d);
                }
                None => self.dropped.push(DropRecord {
                    from: d.from,
                    to: d.to,
                    link_seq: d.link_seq,
                    at: d.sent_at,
                }),
            }
        }
        out
    }

    fn dropped(&self) -> &[DropRecord] {
        &self.dropped
    }
}

fn receive_loop(ep: EndpointId, sock: UdpSocket, out: Sender<Inbound>) {
    let mut buf = [0u8; MAX_DATAGRAM];
    loop {
        match sock.recv_from(&mut buf) {
            Ok((0, _)) => return,
            Ok((n, from_addr)) => {
                let msg = Inbound {
                    to: ep,
                    from_addr,
                    octets: buf[..n].to_vec(),
                };
                if out.send(msg).is_err() {
                    return;
                }
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) => return,
        }
    }
}

impl Drop for LoopbackTransport {
    fn drop(&mut self) {
        self.outboxes.clear();
        for h in self.senders.drain(..) {
            let _ = h.join();
        }
        if let Ok(sock) = UdpSocket::bind((Ipv4Addr::LOCALHOST, 0)) {
            for addr in self.addrs.values() {
                let _ = sock.send_to(&[], addr);
            }
            for h in self.receivers.drain(..) {
                let _ = h.join();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: EndpointId = EndpointId(0);
    const B: EndpointId = EndpointId(1);

    #[test]
    fn datagrams_cross_loopback_in_send_order() {
        let mut t = LoopbackTransport::new(SimTime::ZERO);
        t.register(A).unwrap();
        t.register(B).unwrap();
        for i in 1..=5u8 {
            t.send(A, B, vec![i; 20], SimTime(u64::from(i))).unwrap();
        }
        t.send(B, A, vec![9; 20], SimTime(3)).unwrap();
        assert_eq!(t.next_due(), Some(SimTime(1)));
        let got = t.poll(SimTime(10));
        let order: Vec<_> = got.iter().map(|d| (d.to, d.octets[0])).collect();
        assert_eq!(order, vec![(B, 1), (B, 2), (B, 3), (B, 4), (B, 5), (A, 9)]);
        assert!(t.dropped().is_empty());
        assert_eq!(
            t.send(A, EndpointId(5), vec![1], SimTime::ZERO),
            Err(CommsError::UnknownEndpoint(EndpointId(5)))
        );
    }

    #[test]
    fn scheduled_drop_never_hits_the_wire() {
        let mut t = LoopbackTransport::new(SimTime::ZERO).with_timeout(Duration::from_millis(200));
        t.register(A).unwrap();
        t.register(B).unwrap();
        t.schedule_drop(A, B, 2);
        for i in 1..=3u8 {
            t.send(A, B, vec![i; 20], SimTime::ZERO).unwrap();
        }
        let got: Vec<_> = t.poll(SimTime::ZERO).into_iter().map(|d| d.link_seq).collect();
        assert_eq!(got, vec![1, 3]);
        assert_eq!(t.dropped().len(), 1);
    }
}
