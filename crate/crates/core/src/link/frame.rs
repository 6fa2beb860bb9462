//! Fixed 20-octet datagram layout, big-endian:
//!
//! ```text
//! 0      4     5     6      7         8         16     20
//! | seq  | src | dst | mode | reserved| payload | tag  |
//! ```
//!
//! `tag` holds the low 32 bits of the authentication tag, or zero when the
//! frame is unauthenticated.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::LinkError;

pub const FRAME_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EndpointId(pub u8);

impl EndpointId {
    pub const MGCC: EndpointId = EndpointId(0);
}

impl fmt::Display for EndpointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CipherMode {
    Plain = 0,
    Otp = 1,
    Block = 2,
}

impl CipherMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CipherMode::Plain => "plain",
            CipherMode::Otp => "otp",
            CipherMode::Block => "block",
        }
    }
}

impl TryFrom<u8> for CipherMode {
    type Error = LinkError;

    fn try_from(v: u8) -> Result<Self, LinkError> {
        match v {
            0 => Ok(CipherMode::Plain),
            1 => Ok(CipherMode::Otp),
            2 => Ok(CipherMode::Block),
            other => Err(LinkError::UnknownMode(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub seq: u32,
    pub src: EndpointId,
    pub dst: EndpointId,
    pub mode: CipherMode,
    pub payload: u64,
    /// Truncated authentication tag. A zero tag encodes as "absent".
    pub tag: Option<u32>,
}

impl Frame {
    pub fn encode(&self) -> [u8; FRAME_LEN] {
        let mut out = [0u8; FRAME_LEN];
        out[0..4].copy_from_slice(&self.seq.to_be_bytes());
        out[4] = self.src.0;
        out[5] = self.dst.0;
        out[6] = self.mode as u8;
        out[8..16].copy_from_slice(&self.payload.to_be_bytes());
        out[16..20].copy_from_slice(&self.tag.unwrap_or(0).to_be_bytes());
        out
    }

    pub fn decode(octets: &[u8]) -> Result<Frame, LinkError> {
        if octets.len() != FRAME_LEN {
            return Err(LinkError::MalformedFrame(octets.len()));
        }
        let tag = u32::from_be_bytes(octets[16..20].try_into().unwrap());
        Ok(Frame {
            seq: u32::from_be_bytes(octets[0..4].try_into().unwrap()),
            src: EndpointId(octets[4]),
            dst: EndpointId(octets[5]),
            mode: CipherMode::try_from(octets[6])?,
            payload: u64::from_be_bytes(octets[8..16].try_into().unwrap()),
            tag: (tag != 0).then_some(tag),
        })
    }

    /// Header bytes covered by the authentication tag.
    pub(crate) fn header_bytes(&self) -> [u8; 8] {
        let mut h = [0u8; 8];
        h[0..4].copy_from_slice(&self.seq.to_be_bytes());
        h[4] = self.src.0;
        h[5] = self.dst.0;
        h[6] = self.mode as u8;
        h
    }
}

/// Resolution of the fixed-point power fields, in MW (or MVar).
pub const POWER_RESOLUTION: f64 = 0.001;

/// A real/reactive power pair carried in one 64-bit payload: two
/// two's-complement 32-bit fields in units of [`POWER_RESOLUTION`], real
/// power in the high half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PowerPair {
    /// Real power in kW.
    pub p_kw: i32,
    /// Reactive power in kVar.
    pub q_kvar: i32,
}

impl PowerPair {
    pub const ZERO: PowerPair = PowerPair { p_kw: 0, q_kvar: 0 };

    /// Rounds to the nearest representable value.
    pub fn from_mw(p_mw: f64, q_mvar: f64) -> Result<Self, LinkError> {
        let conv = |v: f64| -> Result<i32, LinkError> {
            let units = (v / POWER_RESOLUTION).round();
            if !units.is_finite() || units < i32::MIN as f64 || units > i32::MAX as f64 {
                return Err(LinkError::PowerOutOfRange(v));
            }
            Ok(units as i32)
        };
        Ok(Self {
            p_kw: conv(p_mw)?,
            q_kvar: conv(q_mvar)?,
        })
    }

    pub fn p_mw(&self) -> f64 {
        f64::from(self.p_kw) * POWER_RESOLUTION
    }

    pub fn q_mvar(&self) -> f64 {
        f64::from(self.q_kvar) * POWER_RESOLUTION
    }

    pub fn to_payload(self) -> u64 {
        (u64::from(self.p_kw as u32) << 32) | u64::from(self.q_kvar as u32)
    }

    pub fn from_payload(payload: u64) -> Self {
        Self {
            p_kw: (payload >> 32) as u32 as i32,
            q_kvar: payload as u32 as i32,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mode() -> impl Strategy<Value = CipherMode> {
        prop_oneof![
            Just(CipherMode::Plain),
            Just(CipherMode::Otp),
            Just(CipherMode::Block)
        ]
    }

    proptest! {
        #[test]
        fn encode_decode_identity(
            seq in any::<u32>(),
            src in any::<u8>(),
            dst in any::<u8>(),
            mode in mode(),
            payload in any::<u64>(),
            tag in proptest::option::of(1u32..),
        ) {
            let f = Frame { seq, src: EndpointId(src), dst: EndpointId(dst), mode, payload, tag };
            prop_assert_eq!(Frame::decode(&f.encode()).unwrap(), f);
        }

        #[test]
        fn power_pair_round_trip(p in any::<i32>(), q in any::<i32>()) {
            let pair = PowerPair { p_kw: p, q_kvar: q };
            prop_assert_eq!(PowerPair::from_payload(pair.to_payload()), pair);
        }
    }

    #[test]
    fn rejects_wrong_length_and_mode() {
        assert_eq!(Frame::decode(&[0u8; 19]), Err(LinkError::MalformedFrame(19)));
        assert_eq!(Frame::decode(&[0u8; 21]), Err(LinkError::MalformedFrame(21)));
        let mut bytes = [0u8; FRAME_LEN];
        bytes[6] = 7;
        assert_eq!(Frame::decode(&bytes), Err(LinkError::UnknownMode(7)));
    }

    #[test]
    fn zero_reference_frame_layout() {
        let f = Frame {
            seq: 1,
            src: EndpointId::MGCC,
            dst: EndpointId(1),
            mode: CipherMode::Otp,
            payload: PowerPair::from_mw(0.0, 0.0).unwrap().to_payload(),
            tag: None,
        };
        let bytes = f.encode();
        assert_eq!(bytes.len(), 20);
        assert_eq!(
            bytes,
            [0, 0, 0, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn attack_reference_is_exact() {
        let pair = PowerPair::from_mw(-6.0, 0.0).unwrap();
        assert_eq!(pair.p_kw, -6000);
        assert_eq!(pair.p_mw(), -6.0);
        assert_eq!(pair.to_payload(), 0xFFFF_E890_0000_0000);
        assert!(PowerPair::from_mw(1e7, 0.0).is_err());
    }
}
