//! Raw 256-bit transfer blocks and the binary stream format.
//!
//! Every word crossing the streaming interface is a 32-byte little-endian
//! record. Bit `i` of a block lives in byte `i / 8` at position `i % 8`,
//! so multi-bit fields are little-endian both at the bit and byte level.

use std::fmt;
use std::io::{self, Read, Write};
use std::path::Path;

/// Number of bytes in one transfer block.
pub const WORD_BYTES: usize = 32;
/// Number of bits in one transfer block.
pub const WORD_BITS: usize = 256;

/// One 256-bit block on the streaming interface.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Word256(pub [u8; WORD_BYTES]);

impl Word256 {
    pub const ZERO: Word256 = Word256([0; WORD_BYTES]);

    pub fn as_bytes(&self) -> &[u8; WORD_BYTES] {
        &self.0
    }

    pub fn from_bytes(bytes: [u8; WORD_BYTES]) -> Self {
        Word256(bytes)
    }

    /// Extract `width` bits starting at `offset` as an unsigned value.
    pub fn bits(&self, offset: usize, width: usize) -> u64 {
        debug_assert!(width <= 64 && offset + width <= WORD_BITS);
        let mut value = 0u64;
        let mut got = 0;
        let mut byte = offset / 8;
        let mut bit = offset % 8;
        while got < width {
            let take = (8 - bit).min(width - got);
            let chunk = ((self.0[byte] >> bit) as u64) & ((1u64 << take) - 1);
            value |= chunk << got;
            got += take;
            byte += 1;
            bit = 0;
        }
        value
    }

    /// Store the low `width` bits of `value` at `offset`.
    pub fn set_bits(&mut self, offset: usize, width: usize, value: u64) {
        debug_assert!(width <= 64 && offset + width <= WORD_BITS);
        debug_assert!(width == 64 || value < (1u64 << width));
        let mut put = 0;
        let mut byte = offset / 8;
        let mut bit = offset % 8;
        while put < width {
            let take = (8 - bit).min(width - put);
            let mask = ((1u16 << take) - 1) as u8;
            let chunk = ((value >> put) as u8) & mask;
            self.0[byte] = (self.0[byte] & !(mask << bit)) | (chunk << bit);
            put += take;
            byte += 1;
            bit = 0;
        }
    }

    pub fn flip_bit(&mut self, offset: usize) {
        self.0[offset / 8] ^= 1 << (offset % 8);
    }
}

impl fmt::Debug for Word256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word256(")?;
        // most-significant byte first for readability
        for b in self.0.iter().rev() {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// Errors raised by stream file I/O.
#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error("stream length {0} is not a multiple of {WORD_BYTES} bytes")]
    Truncated(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Read a word stream from raw bytes.
pub fn stream_from_bytes(bytes: &[u8]) -> Result<Vec<Word256>, StreamError> {
    if bytes.len() % WORD_BYTES != 0 {
        return Err(StreamError::Truncated(bytes.len()));
    }
    Ok(bytes
        .chunks_exact(WORD_BYTES)
        .map(|c| {
            let mut buf = [0u8; WORD_BYTES];
            buf.copy_from_slice(c);
            Word256(buf)
        })
        .collect())
}

/// Serialize a word stream to raw bytes.
pub fn stream_to_bytes(words: &[Word256]) -> Vec<u8> {
    let mut out = Vec::with_capacity(words.len() * WORD_BYTES);
    for w in words {
        out.extend_from_slice(&w.0);
    }
    out
}

pub fn read_stream(path: &Path) -> Result<Vec<Word256>, StreamError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    stream_from_bytes(&bytes)
}

pub fn write_stream(path: &Path, words: &[Word256]) -> Result<(), StreamError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&stream_to_bytes(words))?;
    Ok(())
}
