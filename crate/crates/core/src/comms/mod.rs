//! Emulated testbed network: the MGCC state machine, local controllers with
//! their plant stubs, measurement sources, and the datagram transports that
//! connect them.

pub mod controller;
pub mod loopback;
pub mod mgcc;
pub mod mirror;
pub mod rtds;
pub mod time;
pub mod transport;

pub use controller::{AppliedReference, Controller, ControllerEvent, MismatchReason, PlantStub, ReferenceSource};
pub use loopback::{Inbound, LoopbackTransport};
pub use mgcc::{MgccCounters, MgccEvent, MgccMode, MgccOutput, MgccState};
pub use mirror::{KeyMirror, PacketKeys};
pub use rtds::MeasurementSource;
pub use time::SimTime;
pub use transport::{Datagram, DropRecord, Receipt, SimTransport, Transport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keypool::{KeyMaterial, KeyPool, PoolError};
use crate::link::{EndpointId, PACKET_KEY_BITS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommsError {
    #[error("endpoint {0} is not registered")]
    UnknownEndpoint(EndpointId),
    #[error("no key pool bound for controller {0}")]
    UnboundController(EndpointId),
    #[error("MGCC received a measurement while not listening")]
    NotListening,
    #[error("socket error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CommsError {
    fn from(e: std::io::Error) -> Self {
        CommsError::Io(e.to_string())
    }
}

/// Which frames carry key material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSecurity {
    /// Encrypt measurement frames as well as control frames.
    pub encrypt_measurements: bool,
    /// Append a one-time authentication tag, costing another 64 bits.
    pub authenticate: bool,
}

impl LinkSecurity {
    /// Pool bits consumed by one encrypted frame.
    pub fn key_bits_per_frame(&self) -> u64 {
        if self.authenticate {
            2 * PACKET_KEY_BITS
        } else {
            PACKET_KEY_BITS
        }
    }

    /// Pulls the keys for one frame from `pool`, all or nothing.
    pub fn extract_packet_keys(&self, pool: &mut KeyPool) -> Result<PacketKeys, PoolError> {
        let bits = pool.extract(self.key_bits_per_frame())?;
        Ok(self.split(bits))
    }

    fn split(&self, bits: KeyMaterial) -> PacketKeys {
        let n = PACKET_KEY_BITS as usize;
        if self.authenticate {
            PacketKeys {
                otp: bits.range(0, n),
                mac: Some(bits.range(n, n)),
            }
        } else {
            PacketKeys { otp: bits, mac: None }
        }
    }
}
