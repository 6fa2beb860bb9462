//! Discrete-event driver: scenario configuration, the event loop, key-rate
//! sweeps and CSV output.

pub mod config;
pub mod csv_out;
pub mod engine;
pub mod sweep;
pub mod trace;

pub use config::{inject_attack, Attack, AttackKind, ChannelConfig, KpsConfig, Setpoint, SimConfig, StatisticsMode};
pub use csv_out::{emit_csv, emit_sweep_csv, write_sweep, write_table, Table, SWEEP_HEADER};
pub use engine::{run_loopback, run_simulation, run_with_transport, ATTACKER};
pub use sweep::{stepped, sweep_keyrate, SweepGrid, SweepRow};
pub use trace::{
    BlockRecord, ChannelSummary, EventKind, EventRecord, Interval, PacketCounters, PacketKind, PacketRecord,
    PacketStatus, PlantRecord, PoolSample, Trace, TransferRecord,
};

use thiserror::Error;

use crate::comms::CommsError;
use crate::keypool::PoolError;
use crate::link::LinkError;
use crate::qkd::QkdError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("attack time {t} s outside [0, {duration}] s")]
    AttackTime { t: f64, duration: f64 },
    #[error(transparent)]
    Qkd(#[from] QkdError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Comms(#[from] CommsError),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl SimError {
    /// True for errors caused by the inputs rather than the environment.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            SimError::Config(_) | SimError::AttackTime { .. } | SimError::Qkd(_) | SimError::Pool(_)
        )
    }
}
