//! Shared fixtures for the benchmarks.

use pfs::protocol::tape_stream;
use pfs::{keygen, FieldSpec, FileRecord, KeyRing, RandomTape, StorageParams};

/// A GF(256) configuration with `n` key symbols and a full-capacity file.
pub fn fixture(servers: usize, t: usize, z: usize, n: usize) -> (StorageParams, FileRecord, KeyRing, RandomTape) {
    let params = StorageParams::single(servers, t, z, n, FieldSpec::GF256).unwrap();
    let data: Vec<u8> = (0..n * (t - z)).map(|i| (i * 31 + 7) as u8).collect();
    let file = FileRecord::from_bytes(1, &data, &params).unwrap();
    let ring = keygen(1, servers, n, FieldSpec::GF256, Some(1)).unwrap();
    let tape = RandomTape::seeded(1, tape_stream(1), n * z, FieldSpec::GF256);
    (params, file, ring, tape)
}
