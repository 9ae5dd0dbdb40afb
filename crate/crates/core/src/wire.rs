//! Little-endian byte encoding helpers shared by the dataset container
//! and the model checkpoint formats. The reader tracks its offset so
//! decode errors can name the exact byte where the input went wrong.

use crate::error::{Error, Result};

pub(crate) fn put_u8(buf: &mut Vec<u8>, v: u8) {
    buf.push(v);
}

pub(crate) fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.pos,
                format!(
                    "truncated input: needed {n} bytes for {what}, {} left",
                    self.buf.len() - self.pos
                ),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }

    /// Read a u64 and check it fits in usize and does not exceed `cap`;
    /// `cap` guards length fields against absurd allocations from
    /// corrupted input.
    pub fn len(&mut self, cap: usize, what: &str) -> Result<usize> {
        let at = self.pos;
        let v = self.u64(what)?;
        let v = usize::try_from(v)
            .map_err(|_| Error::format(at, format!("{what} length {v} out of range")))?;
        if v > cap {
            return Err(Error::format(
                at,
                format!("{what} length {v} exceeds limit {cap}"),
            ));
        }
        Ok(v)
    }

    pub fn expect_magic(&mut self, magic: &[u8; 8], what: &str) -> Result<()> {
        let at = self.pos;
        let got = self.take(8, what)?;
        if got != magic {
            return Err(Error::format(at, format!("bad magic for {what}")));
        }
        Ok(())
    }

    pub fn expect_eof(&mut self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.pos,
                format!(
                    "{} trailing bytes after end of data",
                    self.buf.len() - self.pos
                ),
            ));
        }
        Ok(())
    }
}
