//! AES-128-GCM protection for key-pool transfers.
//!
//! The body is encrypted in place and the 16-byte tag travels detached, so
//! the ciphertext is exactly as long as the payload. Every transfer uses a
//! fresh 128-bit key drawn from the recipient's pool, so a fixed nonce is
//! never reused under the same key.

use aes_gcm::aead::{AeadInPlace, KeyInit};
use aes_gcm::{Aes128Gcm, Nonce, Tag};

use crate::keypool::KeyMaterial;

use super::LinkError;

pub const TRANSFER_KEY_BITS: u64 = 128;

const NONCE: [u8; 12] = [0u8; 12];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedTransfer {
    pub ciphertext: Vec<u8>,
    pub tag: [u8; 16],
    /// Payload length in bits; bound into the tag as associated data.
    pub bits: usize,
}

fn cipher(key: &KeyMaterial) -> Result<Aes128Gcm, LinkError> {
    let key = key.to_key128().ok_or(LinkError::LengthMismatch {
        expected: TRANSFER_KEY_BITS as usize,
        got: key.len_bits(),
    })?;
    Ok(Aes128Gcm::new(&key.into()))
}

pub fn block_encrypt_transfer(
    payload: &KeyMaterial,
    key: &KeyMaterial,
) -> Result<SealedTransfer, LinkError> {
    let cipher = cipher(key)?;
    let bits = payload.len_bits();
    let mut buf = payload.as_bytes().to_vec();
    let tag = cipher
        .encrypt_in_place_detached(Nonce::from_slice(&NONCE), &(bits as u64).to_be_bytes(), &mut buf)
        .map_err(|_| LinkError::AuthenticationFailure)?;
    Ok(SealedTransfer {
        ciphertext: buf,
        tag: tag.into(),
        bits,
    })
}

pub fn block_decrypt_transfer(
    sealed: &SealedTransfer,
    key: &KeyMaterial,
) -> Result<KeyMaterial, LinkError> {
    let cipher = cipher(key)?;
    if sealed.ciphertext.len() != sealed.bits.div_ceil(8) {
        return Err(LinkError::AuthenticationFailure);
    }
    let mut buf = sealed.ciphertext.clone();
    cipher
        .decrypt_in_place_detached(
            Nonce::from_slice(&NONCE),
            &(sealed.bits as u64).to_be_bytes(),
            &mut buf,
            Tag::from_slice(&sealed.tag),
        )
        .map_err(|_| LinkError::AuthenticationFailure)?;
    Ok(KeyMaterial::from_bytes(buf, sealed.bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypool::{KeyPool, PoolId};

    fn material(seed: u64, bits: u64) -> KeyMaterial {
        let mut p = KeyPool::new(PoolId(0), seed);
        p.deposit(bits);
        p.extract(bits).unwrap()
    }

    #[test]
    fn round_trip_20000_bits() {
        let m = material(1, 20_000);
        let k = material(2, 128);
        let sealed = block_encrypt_transfer(&m, &k).unwrap();
        assert_eq!(sealed.ciphertext.len(), 2_500);
        assert_ne!(sealed.ciphertext, m.as_bytes());
        assert_eq!(block_decrypt_transfer(&sealed, &k).unwrap(), m);
    }

    #[test]
    fn wrong_key_fails() {
        let m = material(1, 20_000);
        let sealed = block_encrypt_transfer(&m, &material(2, 128)).unwrap();
        assert_eq!(
            block_decrypt_transfer(&sealed, &material(3, 128)),
            Err(LinkError::AuthenticationFailure)
        );
    }

    #[test]
    fn tampering_fails() {
        let m = material(1, 1_001);
        let k = material(2, 128);
        let mut sealed = block_encrypt_transfer(&m, &k).unwrap();
        sealed.ciphertext[10] ^= 1;
        assert!(block_decrypt_transfer(&sealed, &k).is_err());
        let mut sealed = block_encrypt_transfer(&m, &k).unwrap();
        sealed.bits = 1_000;
        assert!(block_decrypt_transfer(&sealed, &k).is_err());
    }

    #[test]
    fn key_must_be_128_bits() {
        let m = material(1, 64);
        assert!(matches!(
            block_encrypt_transfer(&m, &material(2, 64)),
            Err(LinkError::LengthMismatch { expected: 128, got: 64 })
        ));
    }
}
