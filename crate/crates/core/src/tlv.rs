//! Minimal TLV framing shared by every wire format in the crate.
//!
//! A record is a 2-byte big-endian type, a variable-width length and the
//! value bytes. Lengths below 253 occupy one byte; 253 introduces a 2-byte
//! big-endian length and 254 a 4-byte one. Decoding is strict: lengths must
//! use the minimal form, so any byte string has at most one parse.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TlvError {
    #[error("truncated TLV record")]
    Truncated,
    #[error("non-minimal length encoding")]
    NonMinimalLength,
    #[error("reserved length marker")]
    ReservedLength,
    #[error("expected type {expected:#06x}, found {found:#06x}")]
    UnexpectedType { expected: u16, found: u16 },
    #[error("trailing bytes after record")]
    TrailingBytes,
}

pub fn write_tlv(out: &mut Vec<u8>, ty: u16, value: &[u8]) {
    out.extend_from_slice(&ty.to_be_bytes());
    write_len(out, value.len());
    out.extend_from_slice(value);
}

fn write_len(out: &mut Vec<u8>, len: usize) {
    if len < 253 {
        out.push(len as u8);
    } else if len <= u16::MAX as usize {
        out.push(253);
        out.extend_from_slice(&(len as u16).to_be_bytes());
    } else {
        out.push(254);
        out.extend_from_slice(&(len as u32).to_be_bytes());
    }
}

/// Cursor over a byte slice that pops TLV records off the front.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    /// Bytes not yet consumed, without advancing.
    pub fn remaining(&self) -> &'a [u8] {
        &self.buf[self.pos..]
    }

    pub fn peek_type(&self) -> Option<u16> {
        let rest = &self.buf[self.pos..];
        if rest.len() < 2 {
            return None;
        }
        Some(u16::from_be_bytes([rest[0], rest[1]]))
    }

    /// Pops the next record regardless of type.
    pub fn read_any(&mut self) -> Result<(u16, &'a [u8]), TlvError> {
        let rest = &self.buf[self.pos..];
        if rest.len() < 2 {
            return Err(TlvError::Truncated);
        }
        let ty = u16::from_be_bytes([rest[0], rest[1]]);
        let (len, header) = read_len(&rest[2..])?;
        let start = 2 + header;
        if rest.len() < start + len {
            return Err(TlvError::Truncated);
        }
        let value = &rest[start..start + len];
        self.pos += start + len;
        Ok((ty, value))
    }

    /// Pops the next record, requiring an exact type.
    pub fn read_expected(&mut self, expected: u16) -> Result<&'a [u8], TlvError> {
        let save = self.pos;
        let (ty, value) = self.read_any()?;
        if ty != expected {
            self.pos = save;
            return Err(TlvError::UnexpectedType { expected, found: ty });
        }
        Ok(value)
    }

    /// Pops the next record if it carries the given type.
    pub fn read_optional(&mut self, ty: u16) -> Result<Option<&'a [u8]>, TlvError> {
        if self.peek_type() == Some(ty) {
            Ok(Some(self.read_expected(ty)?))
        } else {
            Ok(None)
        }
    }

    pub fn finish(&self) -> Result<(), TlvError> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(TlvError::TrailingBytes)
        }
    }
}

fn read_len(buf: &[u8]) -> Result<(usize, usize), TlvError> {
    let first = *buf.first().ok_or(TlvError::Truncated)?;
    match first {
        0..=252 => Ok((first as usize, 1)),
        253 => {
            if buf.len() < 3 {
                return Err(TlvError::Truncated);
            }
            let len = u16::from_be_bytes([buf[1], buf[2]]) as usize;
            if len < 253 {
                return Err(TlvError::NonMinimalLength);
            }
            Ok((len, 3))
        }
        254 => {
            if buf.len() < 5 {
                return Err(TlvError::Truncated);
            }
            let len = u32::from_be_bytes([buf[1], buf[2], buf[3], buf[4]]) as usize;
            if len <= u16::MAX as usize {
                return Err(TlvError::NonMinimalLength);
            }
            Ok((len, 5))
        }
        255 => Err(TlvError::ReservedLength),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_length_round_trip() {
        let mut buf = Vec::new();
        write_tlv(&mut buf, 0x0001, b"abc");
        assert_eq!(buf, vec![0x00, 0x01, 0x03, b'a', b'b', b'c']);
        let mut r = Reader::new(&buf);
        assert_eq!(r.read_expected(0x0001).unwrap(), b"abc");
        r.finish().unwrap();
    }

    #[test]
    fn two_byte_length_at_boundary() {
        let value = vec![0u8; 253];
        let mut buf = Vec::new();
        write_tlv(&mut buf, 0x0002, &value);
        assert_eq!(&buf[..5], &[0x00, 0x02, 253, 0x00, 0xFD]);
        let mut r = Reader::new(&buf);
        assert_eq!(r.read_expected(0x0002).unwrap().len(), 253);
    }

    #[test]
    fn four_byte_length() {
        let value = vec![7u8; 70_000];
        let mut buf = Vec::new();
        write_tlv(&mut buf, 0x0010, &value);
        let mut r = Reader::new(&buf);
        assert_eq!(r.read_expected(0x0010).unwrap(), &value[..]);
    }

    #[test]
    fn rejects_non_minimal_length() {
        // 253-marker carrying a value that fits in one byte.
        let buf = vec![0x00, 0x01, 253, 0x00, 0x05, 1, 2, 3, 4, 5];
        let mut r = Reader::new(&buf);
        assert_eq!(r.read_any(), Err(TlvError::NonMinimalLength));
    }

    #[test]
    fn rejects_truncated_value() {
        let buf = vec![0x00, 0x01, 0x05, 1, 2];
        let mut r = Reader::new(&buf);
        assert_eq!(r.read_any(), Err(TlvError::Truncated));
    }

    #[test]
    fn rejects_length_past_input() {
        // Claims 4 GiB; must error out instead of allocating.
        let buf = vec![0x00, 0x01, 254, 0xFF, 0xFF, 0xFF, 0xFF];
        let mut r = Reader::new(&buf);
        assert_eq!(r.read_any(), Err(TlvError::Truncated));
    }
}
