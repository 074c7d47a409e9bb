//! Binary record formats for keys, public messages and stored shares.
//!
//! ```text
//! key:     "PFS1" 'K' ver:u8 m:u8 user:u16 server:u16 n:u32 payload[n]
//! message: "PFS1" 'M' ver:u8 m:u8 user:u16 server:u16 t:u8 z:u8 L:u8
//!          n:u32 plaintext_bits:u64 pad_count:u16 payload[n]
//! share:   same as message with type byte 'S'
//! ```
//!
//! Integers are big-endian, one byte per symbol. Only the canonical
//! reduction polynomial of each width is representable.

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::protocol::{PublicMessage, ShareHeader, StoredShare};

pub const MAGIC: &[u8; 4] = b"PFS1";
pub const VERSION: u8 = 1;

pub const KEY_HEADER_LEN: usize = 15;
pub const SHARE_HEADER_LEN: usize = 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum RecordType {
    Key = b'K',
    Message = b'M',
    Share = b'S',
}

impl RecordType {
    fn from_byte(b: u8, offset: usize) -> Result<Self> {
        match b {
            b'K' => Ok(RecordType::Key),
            b'M' => Ok(RecordType::Message),
            b'S' => Ok(RecordType::Share),
            other => Err(Error::format(offset, format!("unknown record type {other:#04x}"))),
        }
    }
}

/// One key as written to disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyRecord {
    pub field: FieldSpec,
    pub user: u16,
    pub server: u16,
    pub material: Vec<u8>,
}

fn canonical_m(field: FieldSpec) -> Result<u8> {
    let canonical = FieldSpec::with_width(field.m())?;
    if canonical != field {
        return Err(Error::Usage(format!(
            "{field} is not the canonical field of width {}; only {canonical} can be serialized",
            field.m()
        )));
    }
    Ok(field.m())
}

/// Bounds-checked big-endian reader that reports absolute offsets.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::format(
                self.pos,
                format!("truncated: need {n} bytes, {} left", self.buf.len() - self.pos),
            )
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn preamble(&mut self) -> Result<(RecordType, FieldSpec)> {
        let start = self.pos;
        if self.take(4)? != MAGIC {
            return Err(Error::format(start, "bad magic, not a PFS1 record"));
        }
        let kind = RecordType::from_byte(self.u8()?, start + 4)?;
        let version = self.u8()?;
        if version != VERSION {
            return Err(Error::format(start + 5, format!("unsupported version {version}")));
        }
        let m = self.u8()?;
        let field = FieldSpec::with_width(m).map_err(|_| Error::format(start + 6, format!("bad field width {m}")))?;
        Ok((kind, field))
    }

    fn payload(&mut self, n: usize, field: FieldSpec) -> Result<Vec<u8>> {
        let start = self.pos;
        let bytes = self.take(n)?;
        if let Some(i) = bytes.iter().position(|&s| !field.contains(s)) {
            return Err(Error::format(
                start + i,
                format!("symbol {:#04x} outside {field}", bytes[i]),
            ));
        }
        Ok(bytes.to_vec())
    }
}

impl KeyRecord {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let m = canonical_m(self.field)?;
        let n = u32::try_from(self.material.len()).map_err(|_| Error::Usage("key too long".into()))?;
        let mut out = Vec::with_capacity(KEY_HEADER_LEN + self.material.len());
        out.extend_from_slice(MAGIC);
        out.push(RecordType::Key as u8);
        out.push(VERSION);
        out.push(m);
        out.extend_from_slice(&self.user.to_be_bytes());
        out.extend_from_slice(&self.server.to_be_bytes());
        out.extend_from_slice(&n.to_be_bytes());
        out.extend_from_slice(&self.material);
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let mut all = decode_keys(buf)?;
        if all.len() != 1 {
            return Err(Error::format(0, format!("expected one key record, found {}", all.len())));
        }
        Ok(all.remove(0))
    }
}

fn read_key(r: &mut Reader<'_>) -> Result<KeyRecord> {
    let start = r.pos;
    let (kind, field) = r.preamble()?;
    if kind != RecordType::Key {
        return Err(Error::format(start + 4, format!("expected a key record, found {kind:?}")));
    }
    let user = r.u16()?;
    let server = r.u16()?;
    let n = r.u32()? as usize;
    let material = r.payload(n, field)?;
    Ok(KeyRecord {
        field,
        user,
        server,
        material,
    })
}

/// Parses a concatenation of key records.
pub fn decode_keys(buf: &[u8]) -> Result<Vec<KeyRecord>> {
    let mut r = Reader { buf, pos: 0 };
    let mut out = Vec::new();
    while r.pos < buf.len() {
        out.push(read_key(&mut r)?);
    }
    Ok(out)
}

fn encode_share(kind: RecordType, h: &ShareHeader, payload: &[u8]) -> Result<Vec<u8>> {
    let m = canonical_m(h.field)?;
    if payload.len() != h.n_symbols as usize {
        return Err(Error::Usage(format!(
            "payload of {} symbols, header says {}",
            payload.len(),
            h.n_symbols
        )));
    }
    let mut out = Vec::with_capacity(SHARE_HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.push(kind as u8);
    out.push(VERSION);
    out.push(m);
    out.extend_from_slice(&h.user.to_be_bytes());
    out.extend_from_slice(&h.server.to_be_bytes());
    out.push(h.t);
    out.push(h.z);
    out.push(h.servers);
    out.extend_from_slice(&h.n_symbols.to_be_bytes());
    out.extend_from_slice(&h.plaintext_bits.to_be_bytes());
    out.extend_from_slice(&h.pad_count.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

fn read_share(r: &mut Reader<'_>, expect: RecordType) -> Result<(ShareHeader, Vec<u8>)> {
    let start = r.pos;
    let (kind, field) = r.preamble()?;
    if kind != expect {
        return Err(Error::format(
            start + 4,
            format!("expected a {expect:?} record, found {kind:?}"),
        ));
    }
    let header = ShareHeader {
        field,
        user: r.u16()?,
        server: r.u16()?,
        t: r.u8()?,
        z: r.u8()?,
        servers: r.u8()?,
        n_symbols: r.u32()?,
        plaintext_bits: r.u64()?,
        pad_count: r.u16()?,
    };
    let payload = r.payload(header.n_symbols as usize, field)?;
    Ok((header, payload))
}

impl PublicMessage {
    pub fn encode(&self) -> Result<Vec<u8>> {
        encode_share(RecordType::Message, &self.header, &self.payload)
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        let (header, payload) = read_share(&mut r, RecordType::Message)?;
        expect_end(&r)?;
        Ok(PublicMessage { header, payload })
    }
}

impl StoredShare {
    pub fn encode(&self) -> Result<Vec<u8>> {
        encode_share(RecordType::Share, &self.header, &self.payload)
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        let (header, payload) = read_share(&mut r, RecordType::Share)?;
        expect_end(&r)?;
        Ok(StoredShare { header, payload })
    }
}

/// Parses a concatenation of share records.
pub fn decode_shares(buf: &[u8]) -> Result<Vec<StoredShare>> {
    let mut r = Reader { buf, pos: 0 };
    let mut out = Vec::new();
    while r.pos < buf.len() {
        let (header, payload) = read_share(&mut r, RecordType::Share)?;
        out.push(StoredShare { header, payload });
    }
    Ok(out)
}

fn expect_end(r: &Reader<'_>) -> Result<()> {
    if r.pos != r.buf.len() {
        return Err(Error::format(r.pos, format!("{} trailing bytes", r.buf.len() - r.pos)));
    }
    Ok(())
}
