//! The MGCC server: listens for a measurement, answers with one encrypted
//! control frame, and goes back to listening.

use std::collections::BTreeMap;

use crate::keypool::{KeyPool, PoolError};
use crate::link::{open_otp, seal_otp, CipherMode, EndpointId, Frame, LinkError, PowerPair};

use super::{CommsError, KeyMirror, LinkSecurity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MgccMode {
    #[default]
    Listening,
    Sending,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MgccCounters {
    pub packets_in: u64,
    pub packets_out: u64,
    pub shortages: u64,
    pub malformed: u64,
    pub rejected: u64,
    pub sending_transitions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MgccEvent {
    Measurement {
        from: EndpointId,
        seq: u32,
        value: PowerPair,
    },
    ControlSent {
        to: EndpointId,
        seq: u32,
        reference: PowerPair,
    },
    /// No control frame could be keyed; the packet is suppressed.
    KeyShortage {
        to: EndpointId,
        requested: u64,
        available: u64,
    },
    Malformed(LinkError),
    Misaddressed(EndpointId),
    /// An encrypted measurement that did not open with the mirrored key.
    MeasurementRejected { from: EndpointId, seq: u32 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MgccOutput {
    pub frame: Option<Frame>,
    pub events: Vec<MgccEvent>,
}

#[derive(Debug, Clone)]
struct Binding {
    pool: usize,
    next_seq: u32,
    reference: PowerPair,
}

#[derive(Debug, Clone)]
pub struct MgccState {
    id: EndpointId,
    mode: MgccMode,
    security: LinkSecurity,
    bindings: BTreeMap<EndpointId, Binding>,
    counters: MgccCounters,
}

impl MgccState {
    pub fn new(security: LinkSecurity) -> Self {
        Self {
            id: EndpointId::MGCC,
            mode: MgccMode::Listening,
            security,
            bindings: BTreeMap::new(),
            counters: MgccCounters::default(),
        }
    }

    /// Routes traffic for `controller` through `pools[pool]` / `mirrors[pool]`.
    pub fn bind(&mut self, controller: EndpointId, pool: usize) {
        self.bindings.insert(
            controller,
            Binding {
                pool,
                next_seq: 1,
                reference: PowerPair::ZERO,
            },
        );
    }

    pub fn id(&self) -> EndpointId {
        self.id
    }

    pub fn mode(&self) -> MgccMode {
        self.mode
    }

    pub fn counters(&self) -> &MgccCounters {
        &self.counters
    }

    pub fn security(&self) -> LinkSecurity {
        self.security
    }

    /// Sets the reference the next control frame to `controller` carries.
    pub fn set_reference(&mut self, controller: EndpointId, reference: PowerPair) -> Result<(), CommsError> {
        let b = self
            .bindings
            .get_mut(&controller)
            .ok_or(CommsError::UnboundController(controller))?;
        b.reference = reference;
        Ok(())
    }

    pub fn pending_reference(&self, controller: EndpointId) -> Option<PowerPair> {
        self.bindings.get(&controller).map(|b| b.reference)
    }

    /// Handles one inbound measurement datagram.
    ///
    /// A control frame is produced only after its key was extracted from the
    /// controller's pool. On shortage the mirror is marked exhausted and no
    /// frame leaves.
    pub fn on_measurement(
        &mut self,
        octets: &[u8],
        pools: &mut [KeyPool],
        mirrors: &mut [KeyMirror],
    ) -> Result<MgccOutput, CommsError> {
        if self.mode != MgccMode::Listening {
            return Err(CommsError::NotListening);
        }
        let mut out = MgccOutput::default();
        let frame = match Frame::decode(octets) {
            Ok(f) if f.dst == self.id => f,
            Ok(f) => {
                self.counters.malformed += 1;
                out.events.push(MgccEvent::Misaddressed(f.dst));
                return Ok(out);
            }
            Err(e) => {
                self.counters.malformed += 1;
                out.events.push(MgccEvent::Malformed(e));
                return Ok(out);
            }
        };
        let from = frame.src;
        let binding = self
            .bindings
            .get(&from)
            .cloned()
            .ok_or(CommsError::UnboundController(from))?;
        self.counters.packets_in += 1;

        let value = match self.read_measurement(&frame, &mut mirrors[binding.pool]) {
            Some(v) => v,
            None => {
                self.counters.rejected += 1;
                out.events.push(MgccEvent::MeasurementRejected { from, seq: frame.seq });
                return Ok(out);
            }
        };
        out.events.push(MgccEvent::Measurement {
            from,
            seq: frame.seq,
            value,
        });

        let keys = match self.security.extract_packet_keys(&mut pools[binding.pool]) {
            Ok(k) => k,
            Err(PoolError::Shortage {
                requested,
                available,
                ..
            }) => {
                self.counters.shortages += 1;
                mirrors[binding.pool].set_exhausted(true);
                out.events.push(MgccEvent::KeyShortage {
                    to: from,
                    requested,
                    available,
                });
                return Ok(out);
            }
            Err(e) => unreachable!("packet key request is never empty: {e}"),
        };
        mirrors[binding.pool].set_exhausted(false);

        self.mode = MgccMode::Sending;
        self.counters.sending_transitions += 1;
        let seq = binding.next_seq;
        let control = seal_otp(
            seq,
            self.id,
            from,
            binding.reference.to_payload(),
            &keys.otp,
            keys.mac.as_ref(),
        )
        .expect("packet keys are 64 bits");
        mirrors[binding.pool].issue(self.id, from, seq, keys);
        self.bindings.get_mut(&from).unwrap().next_seq = seq.wrapping_add(1);
        self.counters.packets_out += 1;
        out.events.push(MgccEvent::ControlSent {
            to: from,
            seq,
            reference: binding.reference,
        });
        out.frame = Some(control);
        self.mode = MgccMode::Listening;
        Ok(out)
    }

    fn read_measurement(&self, frame: &Frame, mirror: &mut KeyMirror) -> Option<PowerPair> {
        match (self.security.encrypt_measurements, frame.mode) {
            (false, CipherMode::Plain) => Some(PowerPair::from_payload(frame.payload)),
            (true, CipherMode::Otp) => {
                let keys = mirror.take(frame.src, self.id, frame.seq)?;
                open_otp(frame, &keys.otp, keys.mac.as_ref())
                    .ok()
                    .map(PowerPair::from_payload)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comms::MeasurementSource;
    use crate::keypool::PoolId;

    const CTRL: EndpointId = EndpointId(1);

    fn setup(level: u64, security: LinkSecurity) -> (MgccState, Vec<KeyPool>, Vec<KeyMirror>, MeasurementSource) {
        let mut pool = KeyPool::new(PoolId(1), 11);
        if level > 0 {
            pool.deposit(level);
        }
        let mut m = MgccState::new(security);
        m.bind(CTRL, 0);
        (m, vec![pool], vec![KeyMirror::new()], MeasurementSource::new(CTRL, security))
    }

    #[test]
    fn exact_budget_emits_one_frame() {
        let (mut m, mut pools, mut mirrors, mut src) = setup(64, LinkSecurity::default());
        let meas = src.measurement_frame(PowerPair::ZERO, &mut pools[0], &mut mirrors[0]).unwrap();
        let out = m.on_measurement(&meas.encode(), &mut pools, &mut mirrors).unwrap();
        let frame = out.frame.unwrap();
        assert_eq!(frame.mode, CipherMode::Otp);
        assert_eq!(frame.dst, CTRL);
        assert_eq!(pools[0].level(), 0);
        assert_eq!(m.mode(), MgccMode::Listening);
        assert_eq!(m.counters().sending_transitions, 1);
        assert_eq!(mirrors[0].outstanding(EndpointId::MGCC, CTRL), 1);
    }

    #[test]
    fn shortage_suppresses_frame() {
        let (mut m, mut pools, mut mirrors, mut src) = setup(0, LinkSecurity::default());
        let meas = src.measurement_frame(PowerPair::ZERO, &mut pools[0], &mut mirrors[0]).unwrap();
        let out = m.on_measurement(&meas.encode(), &mut pools, &mut mirrors).unwrap();
        assert!(out.frame.is_none());
        let shortages = out
            .events
            .iter()
            .filter(|e| matches!(e, MgccEvent::KeyShortage { .. }))
            .count();
        assert_eq!(shortages, 1);
        assert!(mirrors[0].exhausted());
        assert_eq!(m.counters().sending_transitions, 0);
    }

    #[test]
    fn encrypted_measurements_cost_a_second_key() {
        let sec = LinkSecurity {
            encrypt_measurements: true,
            authenticate: false,
        };
        let (mut m, mut pools, mut mirrors, mut src) = setup(128, sec);
        let value = PowerPair::from_mw(2.5, 0.4).unwrap();
        let meas = src.measurement_frame(value, &mut pools[0], &mut mirrors[0]).unwrap();
        assert_eq!(meas.mode, CipherMode::Otp);
        let out = m.on_measurement(&meas.encode(), &mut pools, &mut mirrors).unwrap();
        assert!(out.frame.is_some());
        assert!(out.events.contains(&MgccEvent::Measurement { from: CTRL, seq: 1, value }));
        assert_eq!(pools[0].level(), 0);
    }

    #[test]
    fn plain_measurement_rejected_when_encryption_required() {
        let sec = LinkSecurity {
            encrypt_measurements: true,
            authenticate: false,
        };
        let (mut m, mut pools, mut mirrors, _) = setup(128, sec);
        let forged = Frame {
            seq: 1,
            src: CTRL,
            dst: EndpointId::MGCC,
            mode: CipherMode::Plain,
            payload: 0,
            tag: None,
        };
        let out = m.on_measurement(&forged.encode(), &mut pools, &mut mirrors).unwrap();
        assert!(out.frame.is_none());
        assert_eq!(m.counters().rejected, 1);
        assert_eq!(pools[0].level(), 128);
    }

    #[test]
    fn malformed_and_unbound() {
        let (mut m, mut pools, mut mirrors, _) = setup(64, LinkSecurity::default());
        let out = m.on_measurement(&[0u8; 19], &mut pools, &mut mirrors).unwrap();
        assert_eq!(out.events, vec![MgccEvent::Malformed(LinkError::MalformedFrame(19))]);
        let stranger = Frame {
            seq: 1,
            src: EndpointId(9),
            dst: EndpointId::MGCC,
            mode: CipherMode::Plain,
            payload: 0,
            tag: None,
        };
        assert_eq!(
            m.on_measurement(&stranger.encode(), &mut pools, &mut mirrors),
            Err(CommsError::UnboundController(EndpointId(9)))
        );
    }
}
