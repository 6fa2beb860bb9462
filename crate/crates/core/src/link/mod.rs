//! Packet framing and encryption with pool-supplied key material.

pub mod block;
pub mod frame;
pub mod mac;
pub mod otp;

pub use block::{block_decrypt_transfer, block_encrypt_transfer, SealedTransfer, TRANSFER_KEY_BITS};
pub use frame::{CipherMode, EndpointId, Frame, PowerPair, FRAME_LEN};
pub use mac::frame_tag;
pub use otp::{otp_decrypt, otp_encrypt, PACKET_KEY_BITS};

use thiserror::Error;

use crate::keypool::KeyMaterial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("key length mismatch: expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed frame: {0} octets")]
    MalformedFrame(usize),
    #[error("unknown cipher mode tag {0}")]
    UnknownMode(u8),
    #[error("authentication failed")]
    AuthenticationFailure,
    #[error("power value {0} does not fit the fixed-point payload")]
    PowerOutOfRange(f64),
}

/// Builds an OTP frame, tagging it when a MAC key is supplied.
pub fn seal_otp(
    seq: u32,
    src: EndpointId,
    dst: EndpointId,
    plaintext: u64,
    key: &KeyMaterial,
    mac_key: Option<&KeyMaterial>,
) -> Result<Frame, LinkError> {
    let mut frame = Frame {
        seq,
        src,
        dst,
        mode: CipherMode::Otp,
        payload: otp_encrypt(plaintext, key)?,
        tag: None,
    };
    if let Some(mk) = mac_key {
        frame.tag = Some(frame_tag(&frame, mk)?).filter(|&t| t != 0);
    }
    Ok(frame)
}

/// Verifies (when a MAC key is supplied) and decrypts an OTP frame.
pub fn open_otp(frame: &Frame, key: &KeyMaterial, mac_key: Option<&KeyMaterial>) -> Result<u64, LinkError> {
    if frame.mode != CipherMode::Otp {
        return Err(LinkError::AuthenticationFailure);
    }
    if let Some(mk) = mac_key {
        if frame_tag(frame, mk)? != frame.tag.unwrap_or(0) {
            return Err(LinkError::AuthenticationFailure);
        }
    }
    otp_decrypt(frame.payload, key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypool::{KeyPool, PoolId};

    #[test]
    fn sealed_frame_opens_at_peer() {
        let mut mgcc = KeyPool::new(PoolId(1), 5);
        let mut ctrl = KeyPool::new(PoolId(1), 5);
        mgcc.deposit(1_000);
        ctrl.deposit(1_000);
        let plain = PowerPair::from_mw(1.25, -0.5).unwrap().to_payload();
        let (k, mk) = (mgcc.extract(64).unwrap(), mgcc.extract(64).unwrap());
        let f = seal_otp(3, EndpointId::MGCC, EndpointId(1), plain, &k, Some(&mk)).unwrap();
        let wire = Frame::decode(&f.encode()).unwrap();
        let (k2, mk2) = (ctrl.extract(64).unwrap(), ctrl.extract(64).unwrap());
        assert_eq!(open_otp(&wire, &k2, Some(&mk2)).unwrap(), plain);

        let mut forged = wire;
        forged.payload ^= 1 << 40;
        assert_eq!(open_otp(&forged, &k2, Some(&mk2)), Err(LinkError::AuthenticationFailure));
    }
}
