//! Tiny framing layer shared by the dataset and checkpoint containers:
//! little-endian primitives with a running SHA-256 that is appended on write
//! and verified on read. Truncation surfaces as a checksum error.

use sha2::{Digest, Sha256};
use std::io::{Read, Write};

use crate::error::{Error, Result};

pub struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, hasher: Sha256::new() }
    }

    pub fn put_bytes(&mut self, bytes: &[u8]) -> Result<()> {
        self.hasher.update(bytes);
        self.inner.write_all(bytes)?;
        Ok(())
    }

    pub fn put_u8(&mut self, v: u8) -> Result<()> {
        self.put_bytes(&[v])
    }

    pub fn put_u32(&mut self, v: u32) -> Result<()> {
        self.put_bytes(&v.to_le_bytes())
    }

    pub fn put_u64(&mut self, v: u64) -> Result<()> {
        self.put_bytes(&v.to_le_bytes())
    }

    pub fn put_f64(&mut self, v: f64) -> Result<()> {
        self.put_bytes(&v.to_le_bytes())
    }

    pub fn put_f32(&mut self, v: f32) -> Result<()> {
        self.put_bytes(&v.to_le_bytes())
    }

    pub fn put_str(&mut self, s: &str) -> Result<()> {
        self.put_u32(s.len() as u32)?;
        self.put_bytes(s.as_bytes())
    }

    /// Append the digest of everything written so far and flush.
    pub fn finish(mut self) -> Result<()> {
        let digest = self.hasher.finalize();
        self.inner.write_all(&digest)?;
        self.inner.flush()?;
        Ok(())
    }
}

pub struct HashingReader<R: Read> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> HashingReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, hasher: Sha256::new() }
    }

    pub fn get_bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Checksum("file truncated".into())
            } else {
                Error::Io(e)
            }
        })?;
        self.hasher.update(&*buf);
        Ok(())
    }

    pub fn get_u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.get_bytes(&mut b)?;
        Ok(b[0])
    }

    pub fn get_u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.get_bytes(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn get_u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.get_bytes(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn get_f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.get_bytes(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn get_f32(&mut self) -> Result<f32> {
        let mut b = [0u8; 4];
        self.get_bytes(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }

    pub fn get_str(&mut self, max_len: usize) -> Result<String> {
        let len = self.get_u32()? as usize;
        if len > max_len {
            return Err(Error::Checksum(format!("implausible string length {len}")));
        }
        let mut buf = vec![0u8; len];
        self.get_bytes(&mut buf)?;
        String::from_utf8(buf).map_err(|_| Error::Checksum("invalid utf-8 in container".into()))
    }

    /// Compare the trailing digest against everything read so far.
    pub fn verify(mut self) -> Result<()> {
        let expected = self.hasher.finalize();
        let mut stored = [0u8; 32];
        self.inner.read_exact(&mut stored).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Checksum("file truncated before checksum".into())
            } else {
                Error::Io(e)
            }
        })?;
        if stored != expected.as_slice() {
            return Err(Error::Checksum("stored digest does not match contents".into()));
        }
        Ok(())
    }
}
