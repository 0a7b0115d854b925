use crate::error::{Error, Result};

/// Packed bits, most significant bit first within each byte. Pad bits in
/// the final byte are zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bitstream {
    bytes: Vec<u8>,
    bit_length: u64,
}

impl Bitstream {
    pub fn from_parts(bytes: Vec<u8>, bit_length: u64) -> Result<Self> {
        let needed = bit_length.div_ceil(8);
        if bytes.len() as u64 != needed {
            return Err(Error::StreamLengthMismatch {
                expected: needed * 8,
                actual: bytes.len() as u64 * 8,
            });
        }
        let pad = (needed * 8 - bit_length) as u32;
        if pad > 0 {
            let mask = (1u8 << pad) - 1;
            if bytes[bytes.len() - 1] & mask != 0 {
                return Err(Error::MalformedContainer("nonzero pad bits".into()));
            }
        }
        Ok(Self { bytes, bit_length })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit_length(&self) -> u64 {
        self.bit_length
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader {
            stream: self,
            pos: 0,
        }
    }
}

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_length: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(
            width == 64 || value >> width == 0,
            "{value} does not fit {width} bits"
        );
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            let off = (self.bit_length % 8) as u32;
            if off == 0 {
                self.bytes.push(0);
            }
            if bit == 1 {
                *self.bytes.last_mut().expect("pushed above") |= 0x80 >> off;
            }
            self.bit_length += 1;
        }
    }

    pub fn bit_length(&self) -> u64 {
        self.bit_length
    }

    pub fn finish(self) -> Bitstream {
        Bitstream {
            bytes: self.bytes,
            bit_length: self.bit_length,
        }
    }
}

pub struct BitReader<'a> {
    stream: &'a Bitstream,
    pos: u64,
}

impl BitReader<'_> {
    pub fn read(&mut self, width: u32) -> Result<u64> {
        if self.pos + width as u64 > self.stream.bit_length {
            return Err(Error::StreamExhausted {
                offset: self.pos,
                wanted: width,
            });
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.stream.bytes[(self.pos / 8) as usize];
            let bit = (byte >> (7 - (self.pos % 8) as u32)) & 1;
            v = (v << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.stream.bit_length - self.pos
    }
}

/// `ceil(log2 v)` for `v >= 1`.
pub fn ceil_log2(v: u64) -> u32 {
    if v <= 1 {
        0
    } else {
        64 - (v - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_layout() {
        let mut w = BitWriter::new();
        w.write(0b101, 3);
        w.write(0b1, 1);
        w.write(0xFF, 8);
        let s = w.finish();
        assert_eq!(s.bit_length(), 12);
        assert_eq!(s.bytes(), &[0b1011_1111, 0b1111_0000]);
        let mut r = s.reader();
        assert_eq!(r.read(3).unwrap(), 0b101);
        assert_eq!(r.read(9).unwrap(), 0x1FF);
        assert!(matches!(r.read(1), Err(Error::StreamExhausted { .. })));
    }

    #[test]
    fn rejects_dirty_padding() {
        assert!(Bitstream::from_parts(vec![0b1000_0001], 1).is_err());
        assert!(Bitstream::from_parts(vec![0b1000_0000], 1).is_ok());
        assert!(Bitstream::from_parts(vec![0, 0], 3).is_err());
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(6_610_234), 23);
        assert_eq!(ceil_log2(1 << 23), 23);
        assert_eq!(ceil_log2((1 << 23) + 1), 24);
    }

    proptest! {
        #[test]
        fn fields_roundtrip(fields in proptest::collection::vec((any::<u64>(), 0u32..=64), 0..40)) {
            let mut w = BitWriter::new();
            let fields: Vec<(u64, u32)> = fields
                .into_iter()
                .map(|(v, b)| (if b == 64 { v } else { v & ((1u64 << b) - 1) }, b))
                .collect();
            for &(v, b) in &fields {
                w.write(v, b);
            }
            let s = w.finish();
            prop_assert_eq!(s.bit_length(), fields.iter().map(|f| f.1 as u64).sum::<u64>());
            let again = Bitstream::from_parts(s.bytes().to_vec(), s.bit_length()).unwrap();
            let mut r = again.reader();
            for &(v, b) in &fields {
                prop_assert_eq!(r.read(b).unwrap(), v);
            }
            prop_assert_eq!(r.remaining(), 0);
        }
    }
}
