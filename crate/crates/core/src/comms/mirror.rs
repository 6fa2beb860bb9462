//! The controller-side replica of a channel's key pool.
//!
//! QKD leaves identical bits at both ends, so the replica is modelled as a
//! keyed view of the bits the MGCC side extracted: each packet key is filed
//! under its frame's stream and sequence number. Looking a key up consumes it
//! together with every older key of the same stream, which is how the two
//! sides resynchronize after a lost or forged frame.

use std::collections::BTreeMap;

use crate::keypool::KeyMaterial;
use crate::link::EndpointId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketKeys {
    pub otp: KeyMaterial,
    pub mac: Option<KeyMaterial>,
}

type StreamKey = (EndpointId, EndpointId);

#[derive(Debug, Default)]
pub struct KeyMirror {
    issued: BTreeMap<StreamKey, BTreeMap<u32, PacketKeys>>,
    exhausted: bool,
    discarded: u64,
}

impl KeyMirror {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn issue(&mut self, src: EndpointId, dst: EndpointId, seq: u32, keys: PacketKeys) {
        self.issued.entry((src, dst)).or_default().insert(seq, keys);
    }

    /// Consumes the key for `seq` and discards older, never-delivered keys.
    pub fn take(&mut self, src: EndpointId, dst: EndpointId, seq: u32) -> Option<PacketKeys> {
        let stream = self.issued.get_mut(&(src, dst))?;
        let found = stream.remove(&seq)?;
        let newer = stream.split_off(&seq);
        self.discarded += stream.len() as u64;
        *stream = newer;
        Some(found)
    }

    /// Keys issued but not yet consumed on one stream.
    pub fn outstanding(&self, src: EndpointId, dst: EndpointId) -> usize {
        self.issued.get(&(src, dst)).map_or(0, |s| s.len())
    }

    /// Keys skipped by resynchronization; they are never reused.
    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    /// Whether the MGCC side last failed to extract a packet key.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn set_exhausted(&mut self, exhausted: bool) {
        self.exhausted = exhausted;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: EndpointId = EndpointId::MGCC;
    const C: EndpointId = EndpointId(1);

    fn keys(v: u64) -> PacketKeys {
        let mut otp = KeyMaterial::default();
        otp.push_bits(v, 64);
        PacketKeys { otp, mac: None }
    }

    #[test]
    fn take_is_one_shot_and_resyncs() {
        let mut m = KeyMirror::new();
        for seq in 1..=4 {
            m.issue(M, C, seq, keys(u64::from(seq)));
        }
        assert_eq!(m.take(M, C, 3), Some(keys(3)));
        assert_eq!(m.take(M, C, 3), None);
        assert_eq!(m.take(M, C, 1), None);
        assert_eq!(m.discarded(), 2);
        assert_eq!(m.outstanding(M, C), 1);
        assert_eq!(m.take(M, C, 4), Some(keys(4)));
        assert_eq!(m.take(C, M, 4), None);
    }
}
