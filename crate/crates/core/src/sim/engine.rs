//! The discrete-event loop.
//!
//! Recurring events are key-block completions per channel, packet cycles
//! and pool-level samples; attacks are one-shot. Events at the same instant
//! run in the order noise, block, forge, packet, sample, then by insertion.
//! Datagrams due at or before the next event are delivered first. Key pool
//! sharing runs after every pool change, except that deposits landing at the
//! same instant are all applied before the check.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::comms::{
    Controller, ControllerEvent, Datagram, KeyMirror, LoopbackTransport, MeasurementSource, MgccEvent,
    MgccState, PlantStub, ReferenceSource, SimTime, SimTransport, Transport,
};
use crate::keypool::{kps_check_and_transfer, KeyPool, KpsEvent, PoolError, PoolId};
use crate::link::{block_decrypt_transfer, block_encrypt_transfer, CipherMode, EndpointId, Frame, PowerPair};
use crate::qkd::{evaluate, sample_statistics, secret_key_length, ChannelModel, ProtocolParams};

use super::config::{Attack, Setpoint, SimConfig, StatisticsMode};
use super::trace::{
    BlockRecord, ChannelSummary, EventKind, EventRecord, Interval, PacketCounters, PacketKind, PacketRecord,
    PacketStatus, PlantRecord, PoolSample, Trace, TransferRecord,
};
use super::SimError;

/// Source endpoint of injected frames; they still claim to come from the MGCC.
pub const ATTACKER: EndpointId = EndpointId(255);

#[derive(Debug, Clone, Copy)]
enum Action {
    Noise { ch: usize, e_mis: f64 },
    Block { ch: usize },
    Forge { ch: usize, reference: PowerPair },
    Packet { k: u64 },
    Sample { k: u64 },
}

impl Action {
    fn priority(&self) -> u8 {
        match self {
            Action::Noise { .. } => 0,
            Action::Block { .. } => 1,
            Action::Forge { .. } => 2,
            Action::Packet { .. } => 3,
            Action::Sample { .. } => 4,
        }
    }
}

#[derive(Debug)]
struct Scheduled {
    time: SimTime,
    priority: u8,
    order: u64,
    action: Action,
}

impl Scheduled {
    fn key(&self) -> (SimTime, u8, u64) {
        (self.time, self.priority, self.order)
    }
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Default)]
struct Schedule {
    heap: BinaryHeap<Reverse<Scheduled>>,
    inserted: u64,
}

impl Schedule {
    fn push(&mut self, time: SimTime, action: Action) {
        self.inserted += 1;
        self.heap.push(Reverse(Scheduled {
            time,
            priority: action.priority(),
            order: self.inserted,
            action,
        }));
    }

    fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(s)| s.time)
    }

    fn pop(&mut self) -> Option<Scheduled> {
        self.heap.pop().map(|Reverse(s)| s)
    }
}

/// Piecewise-constant power trajectory, read with non-decreasing times.
struct Timeline {
    points: Vec<(SimTime, PowerPair)>,
    next: usize,
    current: PowerPair,
}

impl Timeline {
    fn new(setpoints: &[Setpoint]) -> Self {
        let mut points: Vec<_> = setpoints
            .iter()
            .map(|s| {
                let pair = PowerPair::from_mw(s.p_mw, s.q_mvar).expect("validated setpoint");
                (SimTime::from_secs(s.t), pair)
            })
            .collect();
        points.sort_by_key(|&(t, _)| t);
        Self {
            points,
            next: 0,
            current: PowerPair::ZERO,
        }
    }

    fn at(&mut self, t: SimTime) -> PowerPair {
        while let Some(&(when, pair)) = self.points.get(self.next) {
            if when > t {
                break;
            }
            self.current = pair;
            self.next += 1;
        }
        self.current
    }
}

struct Lane {
    pool_id: PoolId,
    endpoint: EndpointId,
    protocol: ProtocolParams,
    model: ChannelModel,
    n_pulses: u64,
    period_s: f64,
    blocks: u64,
    source: MeasurementSource,
    controller: Controller,
    plant: PlantStub,
    references: Timeline,
    measurements: Timeline,
    exhausted_since: Option<SimTime>,
    compromised_since: Option<SimTime>,
    kps_noted: bool,
    min_level: Option<u64>,
    counters: PacketCounters,
    forge_seq: u32,
}

struct Engine<'a, T: Transport> {
    cfg: &'a SimConfig,
    transport: &'a mut T,
    end: SimTime,
    pools: Vec<KeyPool>,
    mirrors: Vec<KeyMirror>,
    lanes: Vec<Lane>,
    mgcc: MgccState,
    schedule: Schedule,
    trace: Trace,
    ell_cache: BTreeMap<(usize, u64), u64>,
    wall_start: Option<Instant>,
    /// Time of a deposit whose sharing check waits for same-instant blocks.
    kps_deferred: Option<SimTime>,
}

/// Runs `cfg` over the deterministic in-process transport.
pub fn run_simulation(cfg: &SimConfig) -> Result<Trace, SimError> {
    let mut transport = SimTransport::new(SimTime::from_secs(cfg.latency));
    run_with_transport(cfg, &mut transport, false)
}

/// Runs `cfg` with every datagram carried over UDP on 127.0.0.1.
///
/// `ports` pins endpoint ports (MGCC is 0, controllers are numbered from 1,
/// the attacker is 255). With `throttle` the loop paces itself against the
/// wall clock instead of running as fast as possible.
pub fn run_loopback(
    cfg: &SimConfig,
    ports: BTreeMap<EndpointId, u16>,
    throttle: bool,
) -> Result<Trace, SimError> {
    let mut transport = LoopbackTransport::new(SimTime::from_secs(cfg.latency)).with_ports(ports);
    run_with_transport(cfg, &mut transport, throttle)
}

pub fn run_with_transport<T: Transport>(
    cfg: &SimConfig,
    transport: &mut T,
    throttle: bool,
) -> Result<Trace, SimError> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg, transport)?;
    if throttle {
        engine.wall_start = Some(Instant::now());
    }
    engine.run()?;
    Ok(engine.finish())
}

fn pool_index(id: PoolId) -> usize {
    id.0 as usize - 1
}

impl<'a, T: Transport> Engine<'a, T> {
    fn new(cfg: &'a SimConfig, transport: &'a mut T) -> Result<Self, SimError> {
        let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut mgcc = MgccState::new(cfg.security);
        transport.register(mgcc.id())?;
        transport.register(ATTACKER)?;
        let mut pools = Vec::new();
        let mut lanes = Vec::new();
        for (i, c) in cfg.channels.iter().enumerate() {
            let pool_id = PoolId(i as u32 + 1);
            let endpoint = EndpointId(i as u8 + 1);
            let mut pool = KeyPool::new(pool_id, seeds.next_u64()).with_threshold(cfg.threshold(i));
            if let Some(cap) = c.capacity {
                pool = pool.with_capacity(cap);
            }
            pools.push(pool);
            transport.register(endpoint)?;
            mgcc.bind(endpoint, i);
            let first = evaluate(&c.protocol, &c.model)?;
            lanes.push(Lane {
                pool_id,
                endpoint,
                protocol: c.protocol.clone(),
                model: c.model.clone(),
                n_pulses: first.n_pulses,
                period_s: first.block_period(c.model.pulse_rate),
                blocks: 0,
                source: MeasurementSource::new(endpoint, cfg.security),
                controller: Controller::new(endpoint, cfg.security.key_bits_per_frame()),
                plant: PlantStub::new(cfg.plant_rating_mw),
                references: Timeline::new(&c.references),
                measurements: Timeline::new(&c.measurements),
                exhausted_since: None,
                compromised_since: None,
                kps_noted: false,
                min_level: None,
                counters: PacketCounters::default(),
                forge_seq: 0,
            });
        }
        let mut engine = Self {
            cfg,
            transport,
            end: SimTime::from_secs(cfg.duration),
            mirrors: (0..pools.len()).map(|_| KeyMirror::new()).collect(),
            pools,
            lanes,
            mgcc,
            schedule: Schedule::default(),
            trace: Trace::default(),
            ell_cache: BTreeMap::new(),
            wall_start: None,
            kps_deferred: None,
        };
        engine.trace.duration = engine.end;
        for a in &cfg.attacks {
            let ch = a.channel() as usize - 1;
            let action = match *a {
                Attack::Noise { e_mis, .. } => Action::Noise { ch, e_mis },
                Attack::Forge { p_mw, q_mvar, .. } => Action::Forge {
                    ch,
                    reference: PowerPair::from_mw(p_mw, q_mvar).expect("validated attack"),
                },
            };
            engine.schedule_at(SimTime::from_secs(a.time()), action);
        }
        for ch in 0..engine.lanes.len() {
            let t = engine.block_time(ch, 0);
            engine.schedule_at(t, Action::Block { ch });
        }
        engine.schedule_at(SimTime::ZERO, Action::Packet { k: 0 });
        engine.schedule_at(SimTime::ZERO, Action::Sample { k: 0 });
        Ok(engine)
    }

    fn schedule_at(&mut self, t: SimTime, action: Action) {
        if t < self.end {
            self.schedule.push(t, action);
        }
    }

    fn block_time(&self, ch: usize, j: u64) -> SimTime {
        let index = if self.cfg.precharge { j } else { j + 1 };
        SimTime::from_secs(index as f64 * self.lanes[ch].period_s)
    }

    fn run(&mut self) -> Result<(), SimError> {
        loop {
            if let Some(t) = self.kps_deferred {
                if !self.block_pending_at(t) {
                    self.kps_deferred = None;
                    self.share_keys(t)?;
                }
            }
            let next_event = self.schedule.peek_time();
            let next_delivery = self.transport.next_due().filter(|&d| d < self.end);
            match (next_delivery, next_event) {
                (Some(d), e) if e.is_none_or(|e| d <= e) => {
                    self.pace(d);
                    for dg in self.transport.poll(d) {
                        self.deliver(dg)?;
                    }
                }
                (_, Some(_)) => {
                    let s = self.schedule.pop().expect("peeked");
                    self.pace(s.time);
                    self.handle(s.time, s.action)?;
                }
                (_, None) => return Ok(()),
            }
        }
    }

    fn block_pending_at(&self, t: SimTime) -> bool {
        self.schedule
            .heap
            .peek()
            .is_some_and(|Reverse(s)| s.time == t && matches!(s.action, Action::Block { .. }))
    }

    fn pace(&self, t: SimTime) {
        if let Some(start) = self.wall_start {
            let target = start + Duration::from_nanos(t.0);
            let now = Instant::now();
            if target > now {
                std::thread::sleep(target - now);
            }
        }
    }

    fn handle(&mut self, t: SimTime, action: Action) -> Result<(), SimError> {
        match action {
            Action::Noise { ch, e_mis } => {
                self.lanes[ch].model.e_mis = e_mis;
                self.event(t, ch, EventKind::NoiseAttack, 0, None);
            }
            Action::Block { ch } => self.key_block(t, ch)?,
            Action::Forge { ch, reference } => self.forge(t, ch, reference)?,
            Action::Packet { k } => {
                for ch in 0..self.lanes.len() {
                    self.send_measurement(t, ch)?;
                }
                let next = SimTime::from_secs((k + 1) as f64 / self.cfg.tx_rate);
                self.schedule_at(next, Action::Packet { k: k + 1 });
            }
            Action::Sample { k } => {
                self.sample(t);
                let next = SimTime::from_secs((k + 1) as f64 * self.cfg.sample_interval);
                self.schedule_at(next, Action::Sample { k: k + 1 });
            }
        }
        Ok(())
    }

    fn sample(&mut self, t: SimTime) {
        for p in &self.pools {
            self.trace.pools.push(PoolSample {
                time: t,
                pool: p.id(),
                level: p.level(),
            });
        }
    }

    fn event(&mut self, t: SimTime, ch: usize, kind: EventKind, delta: i64, peer: Option<PoolId>) {
        self.trace.events.push(EventRecord {
            time: t,
            pool: self.lanes[ch].pool_id,
            level: self.pools[ch].level(),
            kind,
            delta,
            peer,
        });
    }

    fn packet(&mut self, t: SimTime, ch: usize, kind: PacketKind, seq: u32, status: PacketStatus) {
        if self.cfg.record_packets {
            self.trace.packets.push(PacketRecord {
                time: t,
                pool: self.lanes[ch].pool_id,
                kind,
                seq,
                status,
                level: self.pools[ch].level(),
            });
        }
    }

    fn block_length(&mut self, ch: usize, j: u64) -> Result<u64, SimError> {
        let lane = &self.lanes[ch];
        match self.cfg.statistics {
            StatisticsMode::Expected => {
                let key = (ch, lane.model.e_mis.to_bits());
                if let Some(&ell) = self.ell_cache.get(&key) {
                    return Ok(ell);
                }
                let ell = evaluate(&lane.protocol, &lane.model)?.ell;
                self.ell_cache.insert(key, ell);
                Ok(ell)
            }
            StatisticsMode::Sampled => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
                rng.set_stream(ch as u64 + 1);
                rng.set_word_pos(u128::from(j) * 2);
                let stats = sample_statistics(&lane.protocol, &lane.model, rng.next_u64())?;
                Ok(secret_key_length(&stats, &lane.protocol)?.ell)
            }
        }
    }

    fn key_block(&mut self, t: SimTime, ch: usize) -> Result<(), SimError> {
        let j = self.lanes[ch].blocks;
        let ell = self.block_length(ch, j)?;
        let dep = self.pools[ch].deposit(ell);
        self.lanes[ch].blocks += 1;
        self.trace.blocks.push(BlockRecord {
            time: t,
            pool: self.lanes[ch].pool_id,
            ell,
            accepted: dep.accepted,
        });
        self.event(t, ch, EventKind::Deposit, dep.accepted as i64, None);
        let next = self.block_time(ch, j + 1);
        self.schedule_at(next, Action::Block { ch });
        self.pool_changed(ch);
        self.kps_deferred = Some(t);
        Ok(())
    }

    fn forge(&mut self, t: SimTime, ch: usize, reference: PowerPair) -> Result<(), SimError> {
        let lane = &mut self.lanes[ch];
        lane.forge_seq = lane.forge_seq.wrapping_add(1);
        lane.counters.forges_sent += 1;
        let frame = Frame {
            seq: lane.forge_seq,
            src: EndpointId::MGCC,
            dst: lane.endpoint,
            mode: CipherMode::Plain,
            payload: reference.to_payload(),
            tag: None,
        };
        let dst = lane.endpoint;
        let receipt = self.transport.send(ATTACKER, dst, frame.encode().to_vec(), t)?;
        self.event(t, ch, EventKind::ForgeAttack, 0, None);
        let status = if receipt.dropped {
            PacketStatus::Dropped
        } else {
            PacketStatus::Sent
        };
        self.packet(t, ch, PacketKind::Forge, frame.seq, status);
        Ok(())
    }

    fn send_measurement(&mut self, t: SimTime, ch: usize) -> Result<(), SimError> {
        let lane = &mut self.lanes[ch];
        let reference = lane.references.at(t);
        let value = lane.measurements.at(t);
        let endpoint = lane.endpoint;
        self.mgcc.set_reference(endpoint, reference)?;
        let result = lane
            .source
            .measurement_frame(value, &mut self.pools[ch], &mut self.mirrors[ch]);
        let encrypted = self.cfg.security.encrypt_measurements;
        match result {
            Ok(frame) => {
                self.lanes[ch].counters.measurements_sent += 1;
                let receipt = self
                    .transport
                    .send(endpoint, EndpointId::MGCC, frame.encode().to_vec(), t)?;
                let status = if receipt.dropped {
                    PacketStatus::Dropped
                } else {
                    PacketStatus::Sent
                };
                self.packet(t, ch, PacketKind::Measurement, frame.seq, status);
                if encrypted {
                    self.extraction_succeeded(t, ch);
                    self.pool_changed(ch);
                    self.share_keys(t)?;
                }
            }
            Err(PoolError::Shortage { .. }) => {
                self.lanes[ch].counters.measurements_suppressed += 1;
                self.packet(t, ch, PacketKind::Measurement, 0, PacketStatus::Suppressed);
                self.extraction_failed(t, ch);
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    }

    fn extraction_failed(&mut self, t: SimTime, ch: usize) {
        if self.lanes[ch].exhausted_since.is_none() {
            self.lanes[ch].exhausted_since = Some(t);
            self.event(t, ch, EventKind::ExhaustionStart, 0, None);
        }
    }

    fn extraction_succeeded(&mut self, t: SimTime, ch: usize) {
        if let Some(start) = self.lanes[ch].exhausted_since.take() {
            self.trace.exhaustion.push(Interval {
                pool: self.lanes[ch].pool_id,
                start,
                end: t,
                open_at_end: false,
            });
            self.event(t, ch, EventKind::ExhaustionEnd, 0, None);
        }
    }

    fn lane_of(&self, ep: EndpointId) -> Option<usize> {
        self.lanes.iter().position(|l| l.endpoint == ep)
    }

    fn deliver(&mut self, dg: Datagram) -> Result<(), SimError> {
        let t = dg.due;
        if dg.to == EndpointId::MGCC {
            return self.deliver_to_mgcc(t, dg);
        }
        let Some(ch) = self.lane_of(dg.to) else {
            return Ok(());
        };
        let kind = if dg.from == ATTACKER {
            PacketKind::Forge
        } else {
            PacketKind::Control
        };
        let lane = &mut self.lanes[ch];
        let events = lane.controller.on_control(
            &mut lane.plant,
            &dg.octets,
            &mut self.mirrors[ch],
            self.pools[ch].level(),
            t,
        );
        for ev in events {
            match ev {
                ControllerEvent::Applied { seq, reference, source } => {
                    let c = &mut self.lanes[ch].counters;
                    match source {
                        ReferenceSource::Authenticated => c.controls_applied += 1,
                        ReferenceSource::Unauthenticated => c.forges_accepted += 1,
                    }
                    self.trace.plant.push(PlantRecord {
                        time: t,
                        pool: self.lanes[ch].pool_id,
                        reference,
                        source,
                    });
                    self.packet(t, ch, kind, seq, PacketStatus::Accepted);
                }
                ControllerEvent::DecryptionMismatch { seq, .. } => {
                    if kind == PacketKind::Control {
                        self.lanes[ch].counters.controls_rejected += 1;
                    }
                    self.packet(t, ch, kind, seq, PacketStatus::Rejected);
                }
                ControllerEvent::Compromised => {
                    self.lanes[ch].compromised_since = Some(t);
                    self.event(t, ch, EventKind::Compromised, 0, None);
                }
                ControllerEvent::Restored => {
                    if let Some(start) = self.lanes[ch].compromised_since.take() {
                        self.trace.compromised.push(Interval {
                            pool: self.lanes[ch].pool_id,
                            start,
                            end: t,
                            open_at_end: false,
                        });
                    }
                    self.event(t, ch, EventKind::Restored, 0, None);
                }
                ControllerEvent::Malformed(_) | ControllerEvent::Misaddressed(_) => {}
            }
        }
        Ok(())
    }

    fn deliver_to_mgcc(&mut self, t: SimTime, dg: Datagram) -> Result<(), SimError> {
        let Some(ch) = self.lane_of(dg.from) else {
            return Ok(());
        };
        let out = self
            .mgcc
            .on_measurement(&dg.octets, &mut self.pools, &mut self.mirrors)?;
        let mut extracted = false;
        for ev in out.events {
            match ev {
                MgccEvent::ControlSent { seq, .. } => {
                    extracted = true;
                    self.lanes[ch].counters.controls_sent += 1;
                    self.extraction_succeeded(t, ch);
                    self.packet(t, ch, PacketKind::Control, seq, PacketStatus::Sent);
                }
                MgccEvent::KeyShortage { .. } => {
                    self.lanes[ch].counters.controls_suppressed += 1;
                    self.packet(t, ch, PacketKind::Control, 0, PacketStatus::Suppressed);
                    self.extraction_failed(t, ch);
                }
                MgccEvent::MeasurementRejected { seq, .. } => {
                    self.packet(t, ch, PacketKind::Measurement, seq, PacketStatus::Rejected);
                }
                MgccEvent::Measurement { .. } | MgccEvent::Malformed(_) | MgccEvent::Misaddressed(_) => {}
            }
        }
        if let Some(frame) = out.frame {
            let receipt = self
                .transport
                .send(EndpointId::MGCC, frame.dst, frame.encode().to_vec(), t)?;
            if receipt.dropped {
                self.packet(t, ch, PacketKind::Control, frame.seq, PacketStatus::Dropped);
            }
        }
        if extracted {
            self.pool_changed(ch);
            self.share_keys(t)?;
        }
        Ok(())
    }

    fn pool_changed(&mut self, ch: usize) {
        let pool = &self.pools[ch];
        let lane = &mut self.lanes[ch];
        if pool.total_deposited() > 0 {
            lane.min_level = Some(lane.min_level.map_or(pool.level(), |m| m.min(pool.level())));
        }
        if !pool.below_threshold() {
            lane.kps_noted = false;
        }
    }

    fn share_keys(&mut self, t: SimTime) -> Result<(), SimError> {
        if !self.cfg.kps.enabled || !self.pools.iter().any(KeyPool::below_threshold) {
            return Ok(());
        }
        let events = kps_check_and_transfer(&mut self.pools, &self.cfg.kps.policy)?;
        for ev in events {
            let (recipient, kind) = match ev {
                KpsEvent::Transfer(te) => {
                    // the MGCC seals the bits under the recipient's key and
                    // the recipient's controller opens them with its replica
                    let sealed = block_encrypt_transfer(&te.payload, &te.key)?;
                    let opened = block_decrypt_transfer(&sealed, &te.key)?;
                    if opened != te.payload {
                        return Err(SimError::Invariant("transfer payload changed in transit".into()));
                    }
                    let (d, r) = (pool_index(te.donor), pool_index(te.recipient));
                    self.event(t, d, EventKind::Transfer, te.donor_delta(), Some(te.recipient));
                    self.event(t, r, EventKind::Transfer, te.recipient_delta(), Some(te.donor));
                    self.trace.transfers.push(TransferRecord {
                        time: t,
                        donor: te.donor,
                        recipient: te.recipient,
                        moved_bits: te.moved_bits,
                        key_bits: te.key_bits,
                        donor_level_after: te.donor_level_after,
                        recipient_level_after: te.recipient_level_after,
                    });
                    self.pool_changed(d);
                    self.pool_changed(r);
                    continue;
                }
                KpsEvent::NoEligibleDonor { recipient, .. } => (recipient, EventKind::NoDonor),
                KpsEvent::RecipientKeyShortage { recipient, .. } => (recipient, EventKind::TransferKeyShortage),
                KpsEvent::RecipientFull { recipient, .. } => (recipient, EventKind::RecipientFull),
            };
            let r = pool_index(recipient);
            if !self.lanes[r].kps_noted {
                self.lanes[r].kps_noted = true;
                self.event(t, r, kind, 0, None);
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Trace {
        let end = self.end;
        for ch in 0..self.lanes.len() {
            let pool = self.lanes[ch].pool_id;
            if let Some(start) = self.lanes[ch].exhausted_since.take() {
                self.trace.exhaustion.push(Interval {
                    pool,
                    start,
                    end,
                    open_at_end: true,
                });
            }
            if let Some(start) = self.lanes[ch].compromised_since.take() {
                self.trace.compromised.push(Interval {
                    pool,
                    start,
                    end,
                    open_at_end: true,
                });
            }
        }
        self.sample(end);
        self.trace.drops = self.transport.dropped().to_vec();
        self.trace.channels = self
            .lanes
            .iter()
            .zip(&self.pools)
            .map(|(lane, pool)| ChannelSummary {
                pool: lane.pool_id,
                n_pulses: lane.n_pulses,
                block_period_s: lane.period_s,
                key_blocks: lane.blocks,
                ledger: *pool.ledger(),
                final_level: pool.level(),
                min_level: lane.min_level,
                packets: lane.counters,
                final_reference: lane.plant.reference(),
            })
            .collect();
        self.trace
    }
}
