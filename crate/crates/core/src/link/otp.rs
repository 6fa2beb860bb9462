use crate::keypool::KeyMaterial;

use super::LinkError;

/// Bits of key consumed per packet.
pub const PACKET_KEY_BITS: u64 = 64;

fn pad(key: &KeyMaterial) -> Result<u64, LinkError> {
    key.to_u64().ok_or(LinkError::LengthMismatch {
        expected: PACKET_KEY_BITS as usize,
        got: key.len_bits(),
    })
}

/// XORs a 64-bit payload with a 64-bit one-time key.
pub fn otp_encrypt(payload: u64, key: &KeyMaterial) -> Result<u64, LinkError> {
    Ok(payload ^ pad(key)?)
}

pub fn otp_decrypt(ciphertext: u64, key: &KeyMaterial) -> Result<u64, LinkError> {
    otp_encrypt(ciphertext, key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(v: u64) -> KeyMaterial {
        KeyMaterial::from_bytes(v.to_be_bytes().to_vec(), 64)
    }

    #[test]
    fn zero_key_is_identity() {
        assert_eq!(otp_encrypt(0x1234_5678_9ABC_DEF0, &key(0)).unwrap(), 0x1234_5678_9ABC_DEF0);
    }

    #[test]
    fn xor_arithmetic() {
        assert_eq!(
            otp_encrypt(0xFFFF_FFFF_FFFF_FFFF, &key(0xAAAA_AAAA_AAAA_AAAA)).unwrap(),
            0x5555_5555_5555_5555
        );
        assert_eq!(
            otp_decrypt(0x5555_5555_5555_5555, &key(0xAAAA_AAAA_AAAA_AAAA)).unwrap(),
            0xFFFF_FFFF_FFFF_FFFF
        );
    }

    #[test]
    fn wrong_key_length() {
        let short = KeyMaterial::from_bytes(vec![0; 8], 63);
        assert_eq!(
            otp_encrypt(1, &short),
            Err(LinkError::LengthMismatch { expected: 64, got: 63 })
        );
    }

    proptest! {
        #[test]
        fn decrypt_inverts_encrypt(p in any::<u64>(), k in any::<u64>()) {
            let c = otp_encrypt(p, &key(k)).unwrap();
            prop_assert_eq!(otp_decrypt(c, &key(k)).unwrap(), p);
        }
    }
}
