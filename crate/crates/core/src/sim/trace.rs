//! Everything a simulation run records, in event-loop (time) order.

use crate::comms::{DropRecord, ReferenceSource, SimTime};
use crate::keypool::{PoolId, PoolLedger};
use crate::link::PowerPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSample {
    pub time: SimTime,
    pub pool: PoolId,
    pub level: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Deposit,
    Transfer,
    /// Below threshold with no pool able to donate; logged once per episode.
    NoDonor,
    /// Below threshold but unable to pay for the transfer key.
    TransferKeyShortage,
    RecipientFull,
    ExhaustionStart,
    ExhaustionEnd,
    NoiseAttack,
    ForgeAttack,
    Compromised,
    Restored,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Deposit => "deposit",
            EventKind::Transfer => "transfer",
            EventKind::NoDonor => "no_donor",
            EventKind::TransferKeyShortage => "transfer_key_shortage",
            EventKind::RecipientFull => "recipient_full",
            EventKind::ExhaustionStart => "exhaustion_start",
            EventKind::ExhaustionEnd => "exhaustion_end",
            EventKind::NoiseAttack => "noise_attack",
            EventKind::ForgeAttack => "forge_attack",
            EventKind::Compromised => "compromised",
            EventKind::Restored => "restored",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    pub time: SimTime,
    pub pool: PoolId,
    /// Pool level right after the event.
    pub level: u64,
    pub kind: EventKind,
    pub delta: i64,
    pub peer: Option<PoolId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Measurement,
    Control,
    Forge,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Measurement => "measurement",
            PacketKind::Control => "control",
            PacketKind::Forge => "forge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketStatus {
    Sent,
    /// Not sent for lack of key bits.
    Suppressed,
    Dropped,
    /// Accepted by the receiving endpoint.
    Accepted,
    /// Refused by the receiving endpoint.
    Rejected,
}

impl PacketStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketStatus::Sent => "sent",
            PacketStatus::Suppressed => "suppressed",
            PacketStatus::Dropped => "dropped",
            PacketStatus::Accepted => "accepted",
            PacketStatus::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub time: SimTime,
    pub pool: PoolId,
    pub kind: PacketKind,
    pub seq: u32,
    pub status: PacketStatus,
    /// Pool level right after the packet was handled.
    pub level: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRecord {
    pub time: SimTime,
    pub pool: PoolId,
    pub ell: u64,
    pub accepted: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferRecord {
    pub time: SimTime,
    pub donor: PoolId,
    pub recipient: PoolId,
    pub moved_bits: u64,
    pub key_bits: u64,
    pub donor_level_after: u64,
    pub recipient_level_after: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantRecord {
    pub time: SimTime,
    pub pool: PoolId,
    pub reference: PowerPair,
    pub source: ReferenceSource,
}

/// Half-open `[start, end)` span on one channel. Intervals still open when
/// the run stops end at the run's duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub pool: PoolId,
    pub start: SimTime,
    pub end: SimTime,
    pub open_at_end: bool,
}

impl Interval {
    pub fn len_secs(&self) -> f64 {
        (self.end - self.start).as_secs()
    }

    pub fn contains(&self, t: SimTime) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PacketCounters {
    pub measurements_sent: u64,
    pub measurements_suppressed: u64,
    pub controls_sent: u64,
    pub controls_suppressed: u64,
    pub controls_applied: u64,
    pub controls_rejected: u64,
    pub forges_sent: u64,
    pub forges_accepted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSummary {
    pub pool: PoolId,
    pub n_pulses: u64,
    pub block_period_s: f64,
    pub key_blocks: u64,
    pub ledger: PoolLedger,
    pub final_level: u64,
    /// Lowest level after the first deposit, if there was one.
    pub min_level: Option<u64>,
    pub packets: PacketCounters,
    pub final_reference: PowerPair,
}

impl ChannelSummary {
    /// Bits ever put into the pool minus bits ever taken out.
    pub fn balance(&self) -> i128 {
        i128::from(self.ledger.generated) + i128::from(self.ledger.transfer_in)
            - i128::from(self.ledger.packet)
            - i128::from(self.ledger.transfer_key)
            - i128::from(self.ledger.transfer_out)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub duration: SimTime,
    pub pools: Vec<PoolSample>,
    pub events: Vec<EventRecord>,
    pub packets: Vec<PacketRecord>,
    pub blocks: Vec<BlockRecord>,
    pub transfers: Vec<TransferRecord>,
    pub plant: Vec<PlantRecord>,
    pub exhaustion: Vec<Interval>,
    pub compromised: Vec<Interval>,
    pub drops: Vec<DropRecord>,
    pub channels: Vec<ChannelSummary>,
}

impl Trace {
    pub fn exhaustion_for(&self, pool: PoolId) -> impl Iterator<Item = &Interval> {
        self.exhaustion.iter().filter(move |i| i.pool == pool)
    }

    pub fn compromised_for(&self, pool: PoolId) -> impl Iterator<Item = &Interval> {
        self.compromised.iter().filter(move |i| i.pool == pool)
    }

    pub fn exhausted_secs(&self, pool: PoolId) -> f64 {
        self.exhaustion_for(pool).fold(0.0, |acc, i| acc + i.len_secs())
    }

    pub fn total_exhausted_secs(&self) -> f64 {
        self.exhaustion.iter().fold(0.0, |acc, i| acc + i.len_secs())
    }

    pub fn channel(&self, pool: PoolId) -> Option<&ChannelSummary> {
        self.channels.iter().find(|c| c.pool == pool)
    }
}
