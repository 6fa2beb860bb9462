//! Simulator for microgrid control links keyed by decoy-state QKD.
//!
//! The crate is layered bottom-up:
//!
//! * [`qkd`] turns a fiber channel description into finite-key secret key
//!   lengths and generation speeds.
//! * [`keypool`] stores generated key bits, hands them out FIFO and moves
//!   bits between pools under the key-pool-sharing policy.
//! * [`link`] frames 64-bit control payloads and encrypts them with
//!   one-time pads, plus the AES transport used for pool-to-pool transfers.
//! * [`comms`] models the MGCC listen/send loop, the local controller, the
//!   plant stub and the datagram transport between them.
//! * [`sim`] is the discrete-event driver, scenario configuration, sweeps
//!   and CSV output.

pub mod comms;
pub mod keypool;
pub mod link;
pub mod qkd;
pub mod sim;
