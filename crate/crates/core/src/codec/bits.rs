//! MSB-first bit I/O and the adaptive Golomb-Rice code shared by the
//! reference coders.
//!
//! A value `v` with parameter `k` is written as `q = v >> k` one-bits, a
//! terminating zero, then the low `k` bits of `v`. Quotients of
//! [`ESCAPE_QUOTIENT`] or more are replaced by that many one-bits followed by
//! `v` in a fixed number of raw bits.

use crate::error::{Error, Result};

pub const ESCAPE_QUOTIENT: u32 = 24;
pub const MAX_K: u32 = 15;

#[derive(Debug, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append the low `n` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u32, n: u32) {
        debug_assert!(n <= 32);
        if n == 0 {
            return;
        }
        let v = value as u64 & ((1u64 << n) - 1);
        self.acc = (self.acc << n) | v;
        self.nbits += n;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.buf.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    pub fn write_bit(&mut self, bit: bool) {
        self.write_bits(bit as u32, 1);
    }

    fn write_ones(&mut self, mut n: u32) {
        while n > 0 {
            let chunk = n.min(32);
            self.write_bits(u32::MAX, chunk);
            n -= chunk;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.buf.len() * 8 + self.nbits as usize
    }

    /// Flush, zero-padding the final byte.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.buf.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.buf
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = *self
            .data
            .get(self.pos / 8)
            .ok_or(Error::CorruptPayload("bitstream exhausted"))?;
        let bit = (byte >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u32> {
        debug_assert!(n <= 32);
        let mut v = 0u32;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()? as u32;
        }
        Ok(v)
    }

    pub fn bit_pos(&self) -> usize {
        self.pos
    }

    /// Require that the stream was consumed up to its zero padding.
    pub fn finish(self) -> Result<()> {
        if self.pos.div_ceil(8) != self.data.len() {
            return Err(Error::CorruptPayload("trailing bytes after bitstream"));
        }
        if !self.pos.is_multiple_of(8) {
            let last = self.data[self.data.len() - 1];
            if last & (0xff >> (self.pos % 8)) != 0 {
                return Err(Error::CorruptPayload("nonzero padding bits"));
            }
        }
        Ok(())
    }
}

pub fn write_rice(w: &mut BitWriter, value: u32, k: u32, esc_bits: u32) {
    debug_assert!(
        esc_bits == 32 || value >> esc_bits == 0,
        "value {value} exceeds escape width"
    );
    let q = value >> k;
    if q < ESCAPE_QUOTIENT {
        w.write_ones(q);
        w.write_bit(false);
        w.write_bits(value, k);
    } else {
        w.write_ones(ESCAPE_QUOTIENT);
        w.write_bits(value, esc_bits);
    }
}

pub fn read_rice(r: &mut BitReader<'_>, k: u32, esc_bits: u32) -> Result<u32> {
    let mut q = 0;
    while q < ESCAPE_QUOTIENT && r.read_bit()? {
        q += 1;
    }
    if q == ESCAPE_QUOTIENT {
        let v = r.read_bits(esc_bits)?;
        if v >> k < ESCAPE_QUOTIENT {
            return Err(Error::MalformedEscape);
        }
        return Ok(v);
    }
    Ok((q << k) | r.read_bits(k)?)
}

/// Running-mean state that picks `k` for one coding context.
#[derive(Debug, Clone, Copy)]
pub struct RiceContext {
    sum: u64,
    count: u64,
}

impl Default for RiceContext {
    fn default() -> Self {
        Self { sum: 2, count: 1 }
    }
}

impl RiceContext {
    const RESET: u64 = 64;

    /// Smallest `k` with `count << k >= sum`, capped at [`MAX_K`].
    pub fn k(&self) -> u32 {
        let mut k = 0;
        while k < MAX_K && (self.count << k) < self.sum {
            k += 1;
        }
        k
    }

    pub fn update(&mut self, value: u32) {
        self.sum += value as u64;
        self.count += 1;
        if self.count >= Self::RESET {
            self.sum >>= 1;
            self.count >>= 1;
        }
    }

    pub fn encode(&mut self, w: &mut BitWriter, value: u32, esc_bits: u32) {
        write_rice(w, value, self.k(), esc_bits);
        self.update(value);
    }

    pub fn decode(&mut self, r: &mut BitReader<'_>, esc_bits: u32) -> Result<u32> {
        let v = read_rice(r, self.k(), esc_bits)?;
        self.update(v);
        Ok(v)
    }
}

/// Signed-to-unsigned interleave: 0, -1, 1, -2, ... -> 0, 1, 2, 3, ...
#[inline]
pub fn zigzag(r: i32) -> u32 {
    if r >= 0 {
        (r as u32) << 1
    } else {
        ((-(r as i64)) as u32) * 2 - 1
    }
}

#[inline]
pub fn unzigzag(v: u32) -> i32 {
    if v & 1 == 0 {
        (v >> 1) as i32
    } else {
        -(((v >> 1) + 1) as i64) as i32
    }
}
