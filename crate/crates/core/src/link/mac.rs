//! One-time polynomial-evaluation MAC over GF(2^61 - 1).
//!
//! A 64-bit key splits into an evaluation point `r` (high half) and a mask
//! `s` (low half). The message is cut into 32-bit big-endian blocks
//! `m_1..m_n` and the tag is `m_1 r^n + ... + m_n r + s mod p`. A key must
//! authenticate a single message.

use crate::keypool::KeyMaterial;

use super::frame::Frame;
use super::otp::PACKET_KEY_BITS;
use super::LinkError;

const P: u128 = (1 << 61) - 1;

pub fn poly_tag(key: u64, message: &[u8]) -> u64 {
    let r = u128::from(key >> 32);
    let s = u128::from(key & 0xFFFF_FFFF);
    let mut acc: u128 = 0;
    for chunk in message.chunks(4) {
        let mut block = [0u8; 4];
        block[..chunk.len()].copy_from_slice(chunk);
        acc = ((acc + u128::from(u32::from_be_bytes(block))) * r) % P;
    }
    ((acc + s) % P) as u64
}

/// Truncated tag over a frame's header and (encrypted) payload.
pub fn frame_tag(frame: &Frame, key: &KeyMaterial) -> Result<u32, LinkError> {
    let key = key.to_u64().ok_or(LinkError::LengthMismatch {
        expected: PACKET_KEY_BITS as usize,
        got: key.len_bits(),
    })?;
    let mut msg = [0u8; 16];
    msg[..8].copy_from_slice(&frame.header_bytes());
    msg[8..].copy_from_slice(&frame.payload.to_be_bytes());
    Ok(poly_tag(key, &msg) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tag_depends_on_every_block() {
        let key = 0x0123_4567_89AB_CDEF;
        let base = poly_tag(key, b"abcdefgh");
        assert_ne!(base, poly_tag(key, b"abcdefgi"));
        assert_ne!(base, poly_tag(key, b"bbcdefgh"));
        assert_ne!(base, poly_tag(key ^ 1, b"abcdefgh"));
    }

    #[test]
    fn zero_point_reduces_to_mask() {
        assert_eq!(poly_tag(0x0000_0000_0000_0042, b"anything"), 0x42);
    }
}
