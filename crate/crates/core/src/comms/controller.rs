//! A battery's local controller and the plant it drives.

use crate::link::{open_otp, CipherMode, EndpointId, Frame, LinkError, PowerPair};

use super::{KeyMirror, SimTime};

/// Default plant rating; decrypted references beyond it are implausible.
pub const DEFAULT_RATING_MW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSource {
    /// Decrypted with the mirrored key (and tag-verified when enabled).
    Authenticated,
    /// Accepted in the clear while the link had no keys.
    Unauthenticated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedReference {
    pub at: SimTime,
    pub reference: PowerPair,
    pub source: ReferenceSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantStub {
    reference: PowerPair,
    compromised: bool,
    rating_mw: f64,
    history: Vec<AppliedReference>,
}

impl Default for PlantStub {
    fn default() -> Self {
        Self::new(DEFAULT_RATING_MW)
    }
}

impl PlantStub {
    pub fn new(rating_mw: f64) -> Self {
        Self {
            reference: PowerPair::ZERO,
            compromised: false,
            rating_mw,
            history: Vec::new(),
        }
    }

    pub fn reference(&self) -> PowerPair {
        self.reference
    }

    pub fn compromised(&self) -> bool {
        self.compromised
    }

    pub fn history(&self) -> &[AppliedReference] {
        &self.history
    }

    fn plausible(&self, r: PowerPair) -> bool {
        r.p_mw().abs() <= self.rating_mw && r.q_mvar().abs() <= self.rating_mw
    }

    fn apply(&mut self, at: SimTime, reference: PowerPair, source: ReferenceSource) {
        self.reference = reference;
        self.compromised = source == ReferenceSource::Unauthenticated;
        self.history.push(AppliedReference { at, reference, source });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MismatchReason {
    /// No unused mirrored key carries this sequence number.
    NoKey,
    Authentication,
    /// Decrypted to a value outside the plant rating.
    Implausible,
    /// Clear-text frame while the link still has keys.
    Unauthenticated,
    WrongMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerEvent {
    Applied {
        seq: u32,
        reference: PowerPair,
        source: ReferenceSource,
    },
    DecryptionMismatch { seq: u32, reason: MismatchReason },
    Malformed(LinkError),
    Misaddressed(EndpointId),
    /// The plant accepted an unauthenticated reference.
    Compromised,
    /// An authenticated reference replaced an unauthenticated one.
    Restored,
}

#[derive(Debug, Clone)]
pub struct Controller {
    id: EndpointId,
    key_bits_per_frame: u64,
}

impl Controller {
    pub fn new(id: EndpointId, key_bits_per_frame: u64) -> Self {
        Self { id, key_bits_per_frame }
    }

    pub fn id(&self) -> EndpointId {
        self.id
    }

    /// Handles one inbound control datagram.
    ///
    /// `replica_level` is the controller's view of its pool. A clear-text
    /// frame is accepted only while the link is exhausted and the replica
    /// cannot key a frame, which is the window an attacker can exploit.
    pub fn on_control(
        &self,
        plant: &mut PlantStub,
        octets: &[u8],
        mirror: &mut KeyMirror,
        replica_level: u64,
        now: SimTime,
    ) -> Vec<ControllerEvent> {
        let frame = match Frame::decode(octets) {
            Ok(f) => f,
            Err(e) => return vec![ControllerEvent::Malformed(e)],
        };
        if frame.dst != self.id {
            return vec![ControllerEvent::Misaddressed(frame.dst)];
        }
        let mismatch = |reason| vec![ControllerEvent::DecryptionMismatch { seq: frame.seq, reason }];
        match frame.mode {
            CipherMode::Otp => {
                let Some(keys) = mirror.take(frame.src, self.id, frame.seq) else {
                    return mismatch(MismatchReason::NoKey);
                };
                let Ok(plain) = open_otp(&frame, &keys.otp, keys.mac.as_ref()) else {
                    return mismatch(MismatchReason::Authentication);
                };
                let reference = PowerPair::from_payload(plain);
                if !plant.plausible(reference) {
                    return mismatch(MismatchReason::Implausible);
                }
                let was_compromised = plant.compromised();
                plant.apply(now, reference, ReferenceSource::Authenticated);
                let mut events = vec![ControllerEvent::Applied {
                    seq: frame.seq,
                    reference,
                    source: ReferenceSource::Authenticated,
                }];
                if was_compromised {
                    events.push(ControllerEvent::Restored);
                }
                events
            }
            CipherMode::Plain => {
                if !(mirror.exhausted() && replica_level < self.key_bits_per_frame) {
                    return mismatch(MismatchReason::Unauthenticated);
                }
                let reference = PowerPair::from_payload(frame.payload);
                let was_compromised = plant.compromised();
                plant.apply(now, reference, ReferenceSource::Unauthenticated);
                let mut events = vec![ControllerEvent::Applied {
                    seq: frame.seq,
                    reference,
                    source: ReferenceSource::Unauthenticated,
                }];
                if !was_compromised {
                    events.push(ControllerEvent::Compromised);
                }
                events
            }
            CipherMode::Block => mismatch(MismatchReason::WrongMode),
        }
    }
}
