use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use pfs::audit::{audit, Scheme};
use pfs::field::clmul_reduce;
use pfs::{ramp_decode, ramp_encode, reconstruct, server_ingest, store, FieldSpec, StorageParams};
use pfs_bench::fixture;

fn field(c: &mut Criterion) {
    let f = FieldSpec::GF256;
    let mut g = c.benchmark_group("gf256_mul");
    g.throughput(Throughput::Elements(256 * 256));
    g.bench_function("table", |b| {
        b.iter(|| {
            let mut acc = 0u8;
            for x in 0..=255u8 {
                for y in 0..=255u8 {
                    acc ^= f.mul(black_box(x), y);
                }
            }
            acc
        })
    });
    g.bench_function("reduce", |b| {
        b.iter(|| {
            let mut acc = 0u8;
            for x in 0..=255u8 {
                for y in 0..=255u8 {
                    acc ^= clmul_reduce(black_box(x), y, 0x11B);
                }
            }
            acc
        })
    });
    g.finish();
}

fn codec(c: &mut Criterion) {
    let mut g = c.benchmark_group("ramp");
    for n in [256usize, 4096] {
        let (params, file, _, tape) = fixture(5, 3, 1, n);
        let ramp = params.ramp(1).unwrap();
        g.throughput(Throughput::Bytes(file.symbols().len() as u64));
        g.bench_with_input(BenchmarkId::new("encode", n), &n, |b, _| {
            b.iter(|| ramp_encode(black_box(file.symbols()), &tape, &ramp).unwrap())
        });
        let bundle = ramp_encode(file.symbols(), &tape, &ramp).unwrap();
        let picked = bundle.select(&[2, 4, 5]);
        g.bench_with_input(BenchmarkId::new("decode", n), &n, |b, _| {
            b.iter(|| ramp_decode(black_box(&picked), &ramp).unwrap())
        });
    }
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("store");
    let (params, file, ring, tape) = fixture(5, 3, 1, 1024);
    g.throughput(Throughput::Bytes(2048));
    g.bench_function("store_ingest_reconstruct", |b| {
        b.iter(|| {
            let mut r = ring.clone();
            let (msgs, _) = store(&file, &mut r, &params, &tape).unwrap();
            let shares: Vec<_> = msgs
                .iter()
                .map(|m| server_ingest(m, ring.server_copy(m.server()).unwrap()).unwrap())
                .collect();
            reconstruct(&shares[..3], &params).unwrap()
        })
    });
    g.finish();
}

fn auditor(c: &mut Criterion) {
    let params = StorageParams::single(3, 2, 1, 1, FieldSpec::with_width(2).unwrap()).unwrap();
    let mut g = c.benchmark_group("audit");
    g.sample_size(10);
    g.bench_function("q4_L3_t2_z1", |b| b.iter(|| audit(black_box(&params), Scheme::Honest).unwrap()));
    g.finish();
}

criterion_group!(benches, field, codec, pipeline, auditor);
criterion_main!(benches);
