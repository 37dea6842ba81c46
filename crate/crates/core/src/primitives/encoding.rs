//! Canonical binary encoding.
//!
//! Field table: integers are 8-byte big-endian, digests are 32 raw bytes,
//! lists are a 4-byte big-endian count followed by the elements, and enums
//! are a 1-byte discriminant followed by the variant payload. Every domain
//! type writes its fields in declaration order, so two structurally equal
//! values always produce identical bytes.

use thiserror::Error;

use super::digest::{digest, Digest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("unexpected end of input: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("unknown discriminant {value} for {kind}")]
    BadDiscriminant { kind: &'static str, value: u8 },
    #[error("{0} trailing bytes after value")]
    Trailing(usize),
    #[error("list of {0} elements exceeds the 4-byte count field")]
    ListTooLong(usize),
    #[error("unsupported value: {0}")]
    Unsupported(&'static str),
}

pub trait Encode {
    fn encode_to(&self, out: &mut Vec<u8>);

    /// Exact length of `encode_to` output, computed without serialising.
    fn encoded_len(&self) -> usize;

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_to(&mut out);
        out
    }

    fn canonical_digest(&self) -> Digest {
        digest(&self.encode())
    }
}

pub trait Decode: Sized {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError>;
}

/// Decodes a complete value; trailing bytes are an error.
pub fn decode<T: Decode>(bytes: &[u8]) -> Result<T, EncodingError> {
    let mut reader = Reader::new(bytes);
    let value = T::decode_from(&mut reader)?;
    if reader.remaining() != 0 {
        return Err(EncodingError::Trailing(reader.remaining()));
    }
    Ok(value)
}

/// Encodes a list, rejecting lengths the count field cannot hold.
pub fn try_encode<T: Encode>(items: &[T]) -> Result<Vec<u8>, EncodingError> {
    if items.len() > u32::MAX as usize {
        return Err(EncodingError::ListTooLong(items.len()));
    }
    let mut out = Vec::new();
    encode_list(items, &mut out);
    Ok(out)
}

pub struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, offset: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.offset
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], EncodingError> {
        if self.remaining() < n {
            return Err(EncodingError::Truncated {
                offset: self.offset,
                needed: n,
            });
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    pub fn u8(&mut self) -> Result<u8, EncodingError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, EncodingError> {
        let mut buf = [0u8; 4];
        buf.copy_from_slice(self.take(4)?);
        Ok(u32::from_be_bytes(buf))
    }

    pub fn u64(&mut self) -> Result<u64, EncodingError> {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(self.take(8)?);
        Ok(u64::from_be_bytes(buf))
    }
}

pub const U64_WIDTH: usize = 8;
pub const DIGEST_WIDTH: usize = 32;
pub const COUNT_WIDTH: usize = 4;
pub const DISCRIMINANT_WIDTH: usize = 1;

impl Encode for u64 {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_be_bytes());
    }
    fn encoded_len(&self) -> usize {
        U64_WIDTH
    }
}

impl Decode for u64 {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        reader.u64()
    }
}

impl Encode for Digest {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.0);
    }
    fn encoded_len(&self) -> usize {
        DIGEST_WIDTH
    }
}

impl Decode for Digest {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        let mut buf = [0u8; 32];
        buf.copy_from_slice(reader.take(32)?);
        Ok(Digest(buf))
    }
}

impl<T: Encode> Encode for Vec<T> {
    fn encode_to(&self, out: &mut Vec<u8>) {
        encode_list(self, out);
    }
    fn encoded_len(&self) -> usize {
        COUNT_WIDTH + self.iter().map(Encode::encoded_len).sum::<usize>()
    }
}

impl<T: Decode> Decode for Vec<T> {
    fn decode_from(reader: &mut Reader<'_>) -> Result<Self, EncodingError> {
        let count = reader.u32()? as usize;
        // Cap the preallocation so a hostile count cannot exhaust memory.
        let mut items = Vec::with_capacity(count.min(reader.remaining()));
        for _ in 0..count {
            items.push(T::decode_from(reader)?);
        }
        Ok(items)
    }
}

pub fn encode_list<T: Encode>(items: &[T], out: &mut Vec<u8>) {
    let count = u32::try_from(items.len()).expect("list length exceeds u32 count field");
    out.extend_from_slice(&count.to_be_bytes());
    for item in items {
        item.encode_to(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_is_big_endian() {
        assert_eq!(258u64.encode(), vec![0, 0, 0, 0, 0, 0, 1, 2]);
    }

    #[test]
    fn list_has_count_prefix() {
        let bytes = vec![1u64, 2].encode();
        assert_eq!(&bytes[..4], &[0, 0, 0, 2]);
        assert_eq!(bytes.len(), 4 + 16);
        assert_eq!(decode::<Vec<u64>>(&bytes).unwrap(), vec![1, 2]);
    }

    #[test]
    fn truncated_and_trailing_input() {
        assert!(matches!(
            decode::<u64>(&[0, 1]),
            Err(EncodingError::Truncated { .. })
        ));
        assert_eq!(decode::<u64>(&[0; 9]), Err(EncodingError::Trailing(1)));
    }

    #[test]
    fn hostile_count_does_not_allocate() {
        let bytes = [0xFF, 0xFF, 0xFF, 0xFF];
        assert!(decode::<Vec<Digest>>(&bytes).is_err());
    }
}
