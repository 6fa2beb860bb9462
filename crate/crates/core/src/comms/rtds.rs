//! The plant side's measurement sender, one per local controller.

use crate::keypool::{KeyPool, PoolError};
use crate::link::{seal_otp, CipherMode, EndpointId, Frame, PowerPair};

use super::{KeyMirror, LinkSecurity};

#[derive(Debug, Clone)]
pub struct MeasurementSource {
    id: EndpointId,
    next_seq: u32,
    security: LinkSecurity,
    sent: u64,
}

impl MeasurementSource {
    pub fn new(id: EndpointId, security: LinkSecurity) -> Self {
        Self {
            id,
            next_seq: 1,
            security,
            sent: 0,
        }
    }

    pub fn id(&self) -> EndpointId {
        self.id
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    /// Frames one load measurement for the MGCC.
    ///
    /// With measurement encryption on, the pad comes from the channel pool
    /// and a shortage suppresses the frame.
    pub fn measurement_frame(
        &mut self,
        value: PowerPair,
        pool: &mut KeyPool,
        mirror: &mut KeyMirror,
    ) -> Result<Frame, PoolError> {
        let seq = self.next_seq;
        let frame = if self.security.encrypt_measurements {
            let keys = match self.security.extract_packet_keys(pool) {
                Ok(k) => k,
                Err(e) => {
                    mirror.set_exhausted(true);
                    return Err(e);
                }
            };
            mirror.set_exhausted(false);
            let f = seal_otp(seq, self.id, EndpointId::MGCC, value.to_payload(), &keys.otp, keys.mac.as_ref())
                .expect("packet keys are 64 bits");
            mirror.issue(self.id, EndpointId::MGCC, seq, keys);
            f
        } else {
            Frame {
                seq,
                src: self.id,
                dst: EndpointId::MGCC,
                mode: CipherMode::Plain,
                payload: value.to_payload(),
                tag: None,
            }
        };
        self.next_seq = seq.wrapping_add(1);
        self.sent += 1;
        Ok(frame)
    }
}
