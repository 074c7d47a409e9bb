//! Private distributed file storage over a public channel.
//!
//! A user shares an `n`-symbol one-time pad key with each of `L` servers.
//! The file is split with a `(t, z, L)` ramp scheme, each share is padded
//! with the matching server's key and broadcast, and each server strips its
//! pad and keeps the share. Any `t` servers recover the file; any `z`
//! colluding servers, even holding the whole broadcast, learn nothing.
//!
//! Besides the protocol, the crate carries an exhaustive auditor that
//! computes the relevant entropies exactly at small field sizes, the
//! closed-form resource optima, and an in-memory multi-server simulation.

pub mod audit;
pub mod bounds;
pub mod error;
pub mod field;
pub mod keys;
pub mod protocol;
pub mod ramp;
pub mod simnet;
pub mod wire;

pub use error::{Error, ErrorKind, Result};
pub use field::{FieldElement, FieldSpec};
pub use keys::{keygen, otp_apply, KeyRing};
pub use protocol::{
    multi_user_store, reconstruct, server_ingest, store, FileRecord, PublicMessage, ResourceReport,
    ShareHeader, StorageParams, StoredShare, UserParams,
};
pub use ramp::{ramp_decode, ramp_encode, RampParams, RandomTape, ShareBundle};
