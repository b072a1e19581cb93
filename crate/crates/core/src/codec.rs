//! Little-endian byte packing shared by the binary file formats.

use crate::error::CheckpointError;

#[derive(Default)]
pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn i32(&mut self, v: i32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.u32(v.to_bits());
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    /// Appends the CRC-32 of everything written so far and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        if self.buf.len() - self.pos < n {
            return Err(CheckpointError::Malformed(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self, what: &str) -> Result<u8, CheckpointError> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u16(&mut self, what: &str) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub fn u32(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn i32(&mut self, what: &str) -> Result<i32, CheckpointError> {
        Ok(i32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub fn f32(&mut self, what: &str) -> Result<f32, CheckpointError> {
        Ok(f32::from_bits(self.u32(what)?))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64, CheckpointError> {
        Ok(f64::from_bits(self.u64(what)?))
    }

    /// Reads a `u32` length and checks that `len * elem_size` bytes remain.
    pub fn len(&mut self, elem_size: usize, what: &str) -> Result<usize, CheckpointError> {
        let n = self.u32(what)? as usize;
        if n.saturating_mul(elem_size) > self.remaining() {
            return Err(CheckpointError::Malformed(format!("{what} length {n} exceeds file")));
        }
        Ok(n)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    /// Checks that exactly the 4-byte CRC trailer remains and that it
    /// matches the bytes before it.
    pub fn finish(mut self) -> Result<(), CheckpointError> {
        let body_len = self.pos;
        let stored = self.u32("checksum")?;
        if self.remaining() != 0 {
            return Err(CheckpointError::Malformed(format!(
                "{} trailing bytes after checksum",
                self.remaining()
            )));
        }
        let computed = crc32fast::hash(&self.buf[..body_len]);
        if stored != computed {
            return Err(CheckpointError::Checksum { stored, computed });
        }
        Ok(())
    }
}

/// Validates magic and version of a container.
pub(crate) fn check_header(
    r: &mut Reader<'_>,
    magic: &[u8; 8],
    version: u16,
) -> Result<(), CheckpointError> {
    let m = r.take(8, "magic")?;
    if m != magic {
        return Err(CheckpointError::Malformed(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(m)
        )));
    }
    let v = r.u16("version")?;
    if v != version {
        return Err(CheckpointError::Version {
            found: v,
            expected: version,
        });
    }
    Ok(())
}
