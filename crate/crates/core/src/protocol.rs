//! The private storage strategy: ramp-share the file, one-time-pad each
//! share onto the public channel, servers strip the pad and keep the share.
//!
//! Several users compose as a product: each runs the single-user pipeline
//! with its own keys and randomness, and every server keeps one share per
//! user.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::keys::{otp_apply, KeyRing};
use crate::ramp::{ramp_decode, ramp_encode, RampParams, RandomTape};

/// ChaCha20 stream used for a user's encoder randomness; keys use stream
/// `user`, so the two never overlap under one seed.
pub fn tape_stream(user: u16) -> u64 {
    (1 << 32) | user as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserParams {
    pub user: u16,
    pub t: usize,
    pub z: usize,
    /// Key length `n_d` in symbols.
    pub key_len: usize,
}

/// Server pool, field and per-user thresholds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageParams {
    servers: usize,
    field: FieldSpec,
    users: Vec<UserParams>,
}

impl StorageParams {
    pub fn new(servers: usize, field: FieldSpec, users: Vec<UserParams>) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::Parameter("at least one user is required".into()));
        }
        if servers > u8::MAX as usize {
            return Err(Error::Parameter(format!("{servers} servers exceed the limit of 255")));
        }
        let mut seen = BTreeSet::new();
        for u in &users {
            if !seen.insert(u.user) {
                return Err(Error::Parameter(format!("user {} listed twice", u.user)));
            }
            if u.key_len == 0 || u.key_len > u32::MAX as usize {
                return Err(Error::Parameter(format!(
                    "user {}: key length {} symbols out of range",
                    u.user, u.key_len
                )));
            }
            RampParams::new(servers, u.t, u.z, field)
                .map_err(|e| Error::Parameter(format!("user {}: {e}", u.user)))?;
        }
        Ok(StorageParams {
            servers,
            field,
            users,
        })
    }

    /// One user with id 1.
    pub fn single(servers: usize, t: usize, z: usize, key_len: usize, field: FieldSpec) -> Result<Self> {
        StorageParams::new(
            servers,
            field,
            vec![UserParams {
                user: 1,
                t,
                z,
                key_len,
            }],
        )
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn users(&self) -> &[UserParams] {
        &self.users
    }

    pub fn user(&self, user: u16) -> Result<&UserParams> {
        self.users
            .iter()
            .find(|u| u.user == user)
            .ok_or_else(|| Error::Usage(format!("unknown user {user}")))
    }

    pub fn ramp(&self, user: u16) -> Result<RampParams> {
        let u = self.user(user)?;
        RampParams::new(self.servers, u.t, u.z, self.field)
    }

    /// File capacity `n_d (t_d - z_d)` in symbols.
    pub fn capacity(&self, user: u16) -> Result<usize> {
        let u = self.user(user)?;
        Ok(u.key_len * (u.t - u.z))
    }

    pub fn server_ids(&self) -> impl Iterator<Item = u16> {
        1..=self.servers as u16
    }
}

/// A user's file, padded to the full capacity `n_d (t_d - z_d)` symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileRecord {
    user: u16,
    plaintext_bits: u64,
    pad_count: u16,
    symbols: Vec<u8>,
    field: FieldSpec,
}

impl FileRecord {
    pub fn from_bytes(user: u16, bytes: &[u8], params: &StorageParams) -> Result<Self> {
        FileRecord::from_bits(user, bytes, bytes.len() as u64 * 8, params)
    }

    /// The first `bit_len` bits of `data`, most significant bit first.
    pub fn from_bits(user: u16, data: &[u8], bit_len: u64, params: &StorageParams) -> Result<Self> {
        if bit_len > data.len() as u64 * 8 {
            return Err(Error::Usage(format!(
                "{bit_len} bits requested from {} bytes",
                data.len()
            )));
        }
        let u = params.user(user)?;
        let m = params.field.m() as u64;
        let capacity = params.capacity(user)?;
        let limit = capacity as u64 * m;
        if bit_len > limit {
            return Err(Error::Capacity {
                bits: bit_len,
                limit,
                key_bits: u.key_len as u64 * m,
                t: u.t,
                z: u.z,
            });
        }
        let mut symbols = pack_symbols(data, bit_len, params.field.m());
        let pad = capacity - symbols.len();
        let pad_count = u16::try_from(pad).map_err(|_| {
            Error::Parameter(format!(
                "file leaves {pad} padding symbols, more than the header can record (65535)"
            ))
        })?;
        symbols.resize(capacity, pad_fill(pad_count, params.field));
        Ok(FileRecord {
            user,
            plaintext_bits: bit_len,
            pad_count,
            symbols,
            field: params.field,
        })
    }

    /// A file given directly as capacity-length symbols (no padding).
    pub fn from_symbols(user: u16, symbols: Vec<u8>, params: &StorageParams) -> Result<Self> {
        let capacity = params.capacity(user)?;
        if symbols.len() != capacity {
            return Err(Error::Usage(format!(
                "file of {} symbols, capacity is {capacity}",
                symbols.len()
            )));
        }
        if let Some(bad) = symbols.iter().find(|&&s| !params.field.contains(s)) {
            return Err(Error::Usage(format!("symbol {bad:#x} not in {}", params.field)));
        }
        Ok(FileRecord {
            user,
            plaintext_bits: symbols.len() as u64 * params.field.m() as u64,
            pad_count: 0,
            symbols,
            field: params.field,
        })
    }

    pub fn user(&self) -> u16 {
        self.user
    }

    pub fn plaintext_bits(&self) -> u64 {
        self.plaintext_bits
    }

    pub fn pad_count(&self) -> u16 {
        self.pad_count
    }

    /// Padded symbol content, length `n_s`.
    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Plaintext bits packed MSB-first; a trailing partial byte is
    /// zero-filled.
    pub fn to_bytes(&self) -> Vec<u8> {
        unpack_symbols(&self.symbols, self.plaintext_bits, self.field.m())
    }

    /// Size of the stored secret in bits (`n_s · m`).
    pub fn stored_bits(&self) -> u64 {
        self.symbols.len() as u64 * self.field.m() as u64
    }
}

fn pad_fill(pad_count: u16, field: FieldSpec) -> u8 {
    (pad_count % field.order()) as u8
}

fn pack_symbols(data: &[u8], bit_len: u64, m: u8) -> Vec<u8> {
    let m = m as u64;
    let count = bit_len.div_ceil(m);
    (0..count)
        .map(|i| {
            (0..m).fold(0u8, |acc, j| {
                let bit = i * m + j;
                let v = if bit < bit_len {
                    (data[(bit / 8) as usize] >> (7 - bit % 8)) & 1
                } else {
                    0
                };
                (acc << 1) | v
            })
        })
        .collect()
}

fn unpack_symbols(symbols: &[u8], bit_len: u64, m: u8) -> Vec<u8> {
    let m64 = m as u64;
    let mut out = vec![0u8; bit_len.div_ceil(8) as usize];
    for bit in 0..bit_len {
        let sym = symbols[(bit / m64) as usize];
        let v = (sym >> (m64 - 1 - bit % m64)) & 1;
        out[(bit / 8) as usize] |= v << (7 - bit % 8);
    }
    out
}

/// Metadata shared byte-for-byte by a message and the share it becomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShareHeader {
    pub field: FieldSpec,
    pub user: u16,
    pub server: u16,
    pub t: u8,
    pub z: u8,
    pub servers: u8,
    pub n_symbols: u32,
    pub plaintext_bits: u64,
    pub pad_count: u16,
}

impl ShareHeader {
    /// True when both headers describe the same stored file.
    pub fn same_file(&self, other: &ShareHeader) -> bool {
        ShareHeader {
            server: other.server,
            ..*self
        } == *other
    }
}

/// `M_{d,l}`: what user `d` broadcasts for server `l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicMessage {
    pub header: ShareHeader,
    pub payload: Vec<u8>,
}

/// `S_{l,d}`: what server `l` keeps for user `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredShare {
    pub header: ShareHeader,
    pub payload: Vec<u8>,
}

impl PublicMessage {
    pub fn user(&self) -> u16 {
        self.header.user
    }

    pub fn server(&self) -> u16 {
        self.header.server
    }
}

impl StoredShare {
    pub fn user(&self) -> u16 {
        self.header.user
    }

    pub fn server(&self) -> u16 {
        self.header.server
    }
}

/// Measured sizes for one user, in bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserResources {
    pub user: u16,
    /// `r^(F)`: stored secret length after padding.
    pub file_bits: u64,
    /// Plaintext actually supplied; below `file_bits` when padded.
    pub plaintext_bits: u64,
    /// `r^(R)`.
    pub randomness_bits: u64,
    /// `r^(M)_{d,l}` per server.
    pub message_bits: BTreeMap<u16, u64>,
    pub message_sum_bits: u64,
}

/// Exact sizes read off the objects a store produced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub field_m: u8,
    pub users: Vec<UserResources>,
    /// `r^(S)_l` per server.
    pub storage_bits: BTreeMap<u16, u64>,
}

impl ResourceReport {
    pub fn user(&self, user: u16) -> Option<&UserResources> {
        self.users.iter().find(|u| u.user == user)
    }

    fn merge(&mut self, other: ResourceReport) {
        self.field_m = other.field_m;
        self.users.extend(other.users);
        for (server, bits) in other.storage_bits {
            *self.storage_bits.entry(server).or_default() += bits;
        }
    }
}

/// A validated, encoded store that has not touched the key ring yet.
struct PreparedStore {
    user: u16,
    header: ShareHeader,
    shares: Vec<Vec<u8>>,
    report: ResourceReport,
}

fn prepare(file: &FileRecord, ring: &KeyRing, params: &StorageParams, tape: &RandomTape) -> Result<PreparedStore> {
    let u = params.user(file.user)?;
    if ring.user() != u.user {
        return Err(Error::Usage(format!(
            "key ring of user {} used for user {}",
            ring.user(),
            u.user
        )));
    }
    if ring.field() != params.field || file.field != params.field {
        return Err(Error::Usage("file, keys and parameters use different fields".into()));
    }
    if ring.key_len() != u.key_len {
        return Err(Error::Usage(format!(
            "keys of {} symbols, parameters say n = {}",
            ring.key_len(),
            u.key_len
        )));
    }
    if file.symbols.len() != params.capacity(u.user)? {
        return Err(Error::Usage("file record was built for different parameters".into()));
    }
    ring.check_fresh(params.server_ids())?;
    let ramp = params.ramp(u.user)?;
    let bundle = ramp_encode(&file.symbols, tape, &ramp)?;
    let m = params.field.m() as u64;

    let header = ShareHeader {
        field: params.field,
        user: u.user,
        server: 0,
        t: u.t as u8,
        z: u.z as u8,
        servers: params.servers as u8,
        n_symbols: u.key_len as u32,
        plaintext_bits: file.plaintext_bits,
        pad_count: file.pad_count,
    };
    let shares = bundle.into_shares();
    let message_bits: BTreeMap<u16, u64> = params
        .server_ids()
        .zip(&shares)
        .map(|(l, h)| (l, h.len() as u64 * m))
        .collect();
    let report = ResourceReport {
        field_m: params.field.m(),
        users: vec![UserResources {
            user: u.user,
            file_bits: file.stored_bits(),
            plaintext_bits: file.plaintext_bits,
            randomness_bits: tape.len() as u64 * m,
            message_sum_bits: message_bits.values().sum(),
            message_bits,
        }],
        // the server keeps exactly H_l once the pad is stripped
        storage_bits: params
            .server_ids()
            .zip(&shares)
            .map(|(l, h)| (l, h.len() as u64 * m))
            .collect(),
    };
    Ok(PreparedStore {
        user: u.user,
        header,
        shares,
        report,
    })
}

fn commit(prepared: PreparedStore, ring: &mut KeyRing) -> Result<(Vec<PublicMessage>, ResourceReport)> {
    let mut messages = Vec::with_capacity(prepared.shares.len());
    for (i, share) in prepared.shares.iter().enumerate() {
        let server = i as u16 + 1;
        let key = ring.consume(server)?;
        messages.push(PublicMessage {
            header: ShareHeader {
                server,
                ..prepared.header
            },
            payload: otp_apply(share, &key)?,
        });
    }
    Ok((messages, prepared.report))
}

/// Stores one user's file: `M_l = H_l ⊕ K_l` for every server.
///
/// Keys are consumed only once everything else has been validated.
pub fn store(
    file: &FileRecord,
    ring: &mut KeyRing,
    params: &StorageParams,
    tape: &RandomTape,
) -> Result<(Vec<PublicMessage>, ResourceReport)> {
    let prepared = prepare(file, ring, params, tape)?;
    commit(prepared, ring)
}

/// `S_l = M_l ⊕ K_l`.
pub fn server_ingest(msg: &PublicMessage, server_key: &[u8]) -> Result<StoredShare> {
    if msg.payload.len() != server_key.len() || msg.payload.len() != msg.header.n_symbols as usize {
        return Err(Error::Protocol(format!(
            "message for server {} has {} symbols, key has {}, header says {}",
            msg.header.server,
            msg.payload.len(),
            server_key.len(),
            msg.header.n_symbols
        )));
    }
    Ok(StoredShare {
        header: msg.header,
        payload: otp_apply(&msg.payload, server_key)?,
    })
}

/// Recovers a user's file from at least `t` shares.
///
/// Only the `t` lowest server ids are decoded; any others are ignored.
pub fn reconstruct(shares: &[StoredShare], params: &StorageParams) -> Result<FileRecord> {
    let first = shares
        .first()
        .ok_or(Error::InsufficientShares { have: 0, need: 1 })?;
    let user = first.header.user;
    let u = params.user(user)?;
    if let Some(odd) = shares.iter().find(|s| !s.header.same_file(&first.header)) {
        return Err(Error::Protocol(format!(
            "share from server {} (user {}) does not match share from server {} (user {})",
            odd.header.server, odd.header.user, first.header.server, user
        )));
    }
    let h = first.header;
    if h.field != params.field
        || h.t as usize != u.t
        || h.z as usize != u.z
        || h.servers as usize != params.servers
        || h.n_symbols as usize != u.key_len
    {
        return Err(Error::Protocol(format!(
            "share headers disagree with the parameters of user {user}"
        )));
    }
    let mut sorted: Vec<&StoredShare> = shares.iter().collect();
    sorted.sort_by_key(|s| s.header.server);
    if sorted.windows(2).any(|w| w[0].header.server == w[1].header.server) {
        return Err(Error::Protocol("two shares from the same server".into()));
    }
    if sorted.len() < u.t {
        return Err(Error::InsufficientShares {
            have: sorted.len(),
            need: u.t,
        });
    }
    if let Some(s) = sorted.iter().find(|s| s.payload.len() != u.key_len) {
        return Err(Error::Protocol(format!(
            "share from server {} has {} symbols, expected {}",
            s.header.server,
            s.payload.len(),
            u.key_len
        )));
    }
    let ramp = params.ramp(user)?;
    let picked: Vec<(usize, &[u8])> = sorted[..u.t]
        .iter()
        .map(|s| (s.header.server as usize, s.payload.as_slice()))
        .collect();
    let symbols = ramp_decode(&picked, &ramp)?;

    let content = symbols.len() - h.pad_count as usize;
    let fill = pad_fill(h.pad_count, params.field);
    if symbols[content..].iter().any(|&s| s != fill) {
        return Err(Error::Corruption("padding does not match the header".into()));
    }
    let m = params.field.m() as u64;
    if h.plaintext_bits.div_ceil(m) != content as u64 {
        return Err(Error::Corruption("plaintext length does not match the header".into()));
    }
    Ok(FileRecord {
        user,
        plaintext_bits: h.plaintext_bits,
        pad_count: h.pad_count,
        symbols,
        field: params.field,
    })
}

/// Messages grouped by destination server, one per user.
pub type ServerBatches = BTreeMap<u16, Vec<PublicMessage>>;

/// Runs [`store`] for every user, all-or-nothing.
///
/// Every user is validated and encoded before any key is consumed, so one
/// bad input leaves all rings untouched.
pub fn multi_user_store(
    files: &[FileRecord],
    rings: &mut BTreeMap<u16, KeyRing>,
    params: &StorageParams,
    tapes: &BTreeMap<u16, RandomTape>,
) -> Result<(ServerBatches, ResourceReport)> {
    let mut owners = BTreeSet::new();
    for f in files {
        if !owners.insert(f.user) {
            return Err(Error::Usage(format!("two files for user {}", f.user)));
        }
    }
    let mut prepared = Vec::with_capacity(files.len());
    for file in files {
        let ring = rings.get(&file.user).ok_or(Error::KeyNotFound {
            user: file.user,
            server: 1,
        })?;
        let tape = tapes
            .get(&file.user)
            .ok_or_else(|| Error::Usage(format!("no randomness for user {}", file.user)))?;
        prepared.push(prepare(file, ring, params, tape)?);
    }

    let mut batches: ServerBatches = params.server_ids().map(|l| (l, Vec::new())).collect();
    let mut report = ResourceReport::default();
    for p in prepared {
        let ring = rings.get_mut(&p.user).expect("validated above");
        let (messages, r) = commit(p, ring)?;
        for msg in messages {
            batches.entry(msg.server()).or_default().push(msg);
        }
        report.merge(r);
    }
    Ok((batches, report))
}
