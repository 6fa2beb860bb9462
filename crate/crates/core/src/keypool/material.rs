use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A run of key bits drawn from one deterministic keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub stream: u64,
    pub start: u64,
    pub len: u64,
}

impl Segment {
    pub fn split_at(self, n: u64) -> (Segment, Segment) {
        debug_assert!(n <= self.len);
        (
            Segment { len: n, ..self },
            Segment {
                start: self.start + n,
                len: self.len - n,
                ..self
            },
        )
    }
}

/// Concrete key bits, packed most-significant bit first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct KeyMaterial {
    bytes: Vec<u8>,
    len: usize,
}

impl std::fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KeyMaterial({} bits)", self.len)
    }
}

impl KeyMaterial {
    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Wraps `bytes` as `len` bits. Padding bits past `len` are cleared.
    pub fn from_bytes(mut bytes: Vec<u8>, len: usize) -> Self {
        assert!(len <= bytes.len() * 8, "length exceeds buffer");
        bytes.truncate(len.div_ceil(8));
        if len % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= 0xFFu8 << (8 - len % 8);
        }
        Self { bytes, len }
    }

    pub fn len_bits(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Appends the low `n` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        for i in (0..n).rev() {
            let bit = (value >> i) & 1;
            if self.len % 8 == 0 {
                self.bytes.push(0);
            }
            if bit == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    /// The material as a big-endian integer, when it is exactly 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        (self.len == 64).then(|| u64::from_be_bytes(self.bytes[..8].try_into().unwrap()))
    }

    /// Copies bits `start..start + len`.
    pub fn range(&self, start: usize, len: usize) -> KeyMaterial {
        assert!(start + len <= self.len);
        let mut out = KeyMaterial::with_capacity(len);
        for i in start..start + len {
            out.push_bits(u64::from(self.bit(i)), 1);
        }
        out
    }

    pub fn to_key128(&self) -> Option<[u8; 16]> {
        (self.len == 128).then(|| self.bytes[..16].try_into().unwrap())
    }
}

/// Reads `len` bits starting at bit `offset` of the keystream `stream`.
pub fn keystream_bits(stream: u64, offset: u64, len: u64, out: &mut KeyMaterial) {
    if len == 0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let first_word = offset / 32;
    rng.set_word_pos(u128::from(first_word));
    let mut skip = (offset % 32) as u32;
    let mut remaining = len;
    while remaining > 0 {
        let word = u64::from(rng.next_u32());
        let avail = 32 - skip;
        let take = avail.min(remaining.min(32) as u32);
        let bits = (word >> (avail - take)) & ((1u64 << take) - 1);
        out.push_bits(bits, take);
        remaining -= u64::from(take);
        skip = 0;
    }
}

pub fn materialize(segments: &[Segment]) -> KeyMaterial {
    let total: u64 = segments.iter().map(|s| s.len).sum();
    let mut out = KeyMaterial::with_capacity(total as usize);
    for s in segments {
        keystream_bits(s.stream, s.start, s.len, &mut out);
    }
    out
}
