//! Conversions between bit vectors (one `u8` per bit, value 0 or 1) and
//! packed big-endian words.

use crate::{Error, Result};

/// Packs `bits` into an integer, most significant bit first.
pub fn bits_to_u64(bits: &[u8]) -> Result<u64> {
    if bits.len() > 64 {
        return Err(Error::InvalidParams(format!(
            "{} bits do not fit a 64-bit word",
            bits.len()
        )));
    }
    bits.iter().try_fold(0u64, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as u64),
        _ => Err(Error::InvalidParams(format!("bit value {b} is not 0 or 1"))),
    })
}

/// Unpacks the low `len` bits of `value`, most significant bit first.
pub fn u64_to_bits(value: u64, len: u32) -> Vec<u8> {
    (0..len).rev().map(|i| ((value >> i) & 1) as u8).collect()
}

/// Mask with the low `len` bits set.
pub fn low_mask(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

pub fn gray_encode(v: usize) -> usize {
    v ^ (v >> 1)
}

pub fn gray_decode(mut g: usize) -> usize {
    let mut v = g;
    while g > 1 {
        g >>= 1;
        v ^= g;
    }
    v
}

/// Number of bit positions in which two equal-length bit vectors differ.
pub fn bit_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
