//! Key pools fed by QKD blocks and drained by packet encryption and
//! pool-to-pool sharing.

pub mod kps;
pub mod material;
pub mod pool;

pub use kps::{kps_check_and_transfer, DonorSelection, KpsEvent, KpsPolicy, TransferEvent};
pub use material::{keystream_bits, KeyMaterial, Segment};
pub use pool::{Deposit, KeyPool, PoolId, PoolLedger, Purpose};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolError {
    #[error("pool {pool}: requested {requested} bits but only {available} available")]
    Shortage {
        pool: PoolId,
        requested: u64,
        available: u64,
    },
    #[error("extraction of zero bits requested")]
    EmptyRequest,
    #[error("key pool sharing needs at least two pools, got {0}")]
    TooFewPools(usize),
    #[error("invalid sharing policy: {0}")]
    InvalidPolicy(String),
}
