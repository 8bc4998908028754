//! Fixed-layout binary encoding helpers shared by every wire type.

use thiserror::Error;

use crate::group::{Group, ELEMENT_BYTES, SCALAR_BYTES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("invalid group element encoding at offset {0}")]
    InvalidElement(usize),
    #[error("invalid scalar encoding at offset {0}")]
    InvalidScalar(usize),
    #[error("{0} trailing bytes after message")]
    Trailing(usize),
    #[error("invalid field: {0}")]
    Invalid(String),
}

/// Cursor over a borrowed byte slice.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.remaining() < n {
            return Err(DecodeError::Truncated {
                offset: self.pos,
                needed: n - self.remaining(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn element<G: Group>(&mut self) -> Result<G::Element, DecodeError> {
        let at = self.pos;
        let bytes: [u8; ELEMENT_BYTES] = self.array()?;
        G::element_from_bytes(&bytes).ok_or(DecodeError::InvalidElement(at))
    }

    pub fn scalar<G: Group>(&mut self) -> Result<G::Scalar, DecodeError> {
        let at = self.pos;
        let bytes: [u8; SCALAR_BYTES] = self.array()?;
        G::scalar_from_bytes(&bytes).ok_or(DecodeError::InvalidScalar(at))
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }
}

pub fn put_element<G: Group>(out: &mut Vec<u8>, e: &G::Element) {
    out.extend_from_slice(&G::element_to_bytes(e));
}

pub fn put_scalar<G: Group>(out: &mut Vec<u8>, s: &G::Scalar) {
    out.extend_from_slice(&G::scalar_to_bytes(s));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Ristretto;

    #[test]
    fn truncation_reports_offset() {
        let mut r = Reader::new(&[1, 2, 3]);
        assert_eq!(r.u16().unwrap(), 0x0102);
        assert_eq!(
            r.u32(),
            Err(DecodeError::Truncated {
                offset: 2,
                needed: 3
            })
        );
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut r = Reader::new(&[0, 0]);
        r.u8().unwrap();
        assert_eq!(r.finish(), Err(DecodeError::Trailing(1)));
    }

    #[test]
    fn invalid_element_rejected() {
        let mut r = Reader::new(&[0xff; 32]);
        assert_eq!(
            r.element::<Ristretto>(),
            Err(DecodeError::InvalidElement(0))
        );
    }
}
