use std::fmt;
use std::fs;
use std::io;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use pfs::audit::{self as pfs_audit, Scheme};
use pfs::bounds::{capacity_frontier, compute_optima, user_optima, verify_achievement};
use pfs::protocol::tape_stream;
use pfs::simnet::{Collusion, Scenario, ScenarioUser, ServerState};
use pfs::wire::{decode_shares, KeyRecord};
use pfs::{
    keygen as make_keys, Error, ErrorKind, FieldSpec, FileRecord, KeyRing, PublicMessage, RandomTape, StorageParams,
    UserParams,
};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::{AuditArgs, BoundsArgs, DemoArgs, IngestArgs, KeygenArgs, ReconstructArgs, Sabotage, StoreArgs};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    File { path: PathBuf, source: io::Error },
    AuditFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Capacity => 3,
                ErrorKind::KeyReuse => 4,
                ErrorKind::Io => 6,
            },
            CliError::File { .. } => 6,
            CliError::AuditFailed => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::File { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::AuditFailed => f.write_str("audit failed: at least one verdict is FAIL"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::File {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    let wrap = |source| CliError::File {
        path: path.to_owned(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    fs::write(path, bytes).map_err(wrap)
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    match out {
        Some(path) => write(path, format!("{text}\n").as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn key_path(dir: &Path, user: u16, server: u16) -> PathBuf {
    dir.join(format!("key_u{user}_s{server}.bin"))
}

fn marker_path(key: &Path) -> PathBuf {
    let mut name = key.as_os_str().to_owned();
    name.push(".consumed");
    PathBuf::from(name)
}

fn message_path(dir: &Path, user: u16, server: u16) -> PathBuf {
    dir.join(format!("msg_u{user}_s{server}.bin"))
}

fn missing(path: PathBuf) -> CliError {
    CliError::File {
        path,
        source: io::Error::new(io::ErrorKind::NotFound, "not found"),
    }
}

/// Existing server state, or an empty server when `<root>/server_<id>` is
/// absent.
fn load_server(root: &Path, id: u16, field: FieldSpec, create: bool) -> Result<ServerState> {
    let dir = root.join(format!("server_{id}"));
    if !dir.exists() {
        return if create {
            Ok(ServerState::new(id, field))
        } else {
            Err(missing(dir))
        };
    }
    for name in ["keys.bin", "shares.bin"] {
        if !dir.join(name).exists() {
            return Err(missing(dir.join(name)));
        }
    }
    Ok(ServerState::restore(root, id, field)?)
}

pub fn keygen(a: KeygenArgs) -> Result<()> {
    let field = FieldSpec::with_width(a.m)?;
    let ring = make_keys(a.user, a.servers, a.n, field, a.seed)?;
    let mut files = Vec::new();
    for l in ring.servers() {
        let path = key_path(&a.out, a.user, l);
        if marker_path(&path).exists() {
            return Err(Error::KeyReuse { user: a.user, server: l }.into());
        }
        files.push(path);
    }
    for (l, path) in ring.servers().zip(&files) {
        let record = KeyRecord {
            field,
            user: a.user,
            server: l,
            material: ring.server_copy(l)?.to_vec(),
        };
        write(path, &record.encode()?)?;
    }
    if let Some(root) = &a.state {
        for l in ring.servers() {
            let mut server = load_server(root, l, field, true)?;
            server.install_key(a.user, ring.server_copy(l)?.to_vec())?;
            server.persist(root)?;
        }
    }
    emit(
        &json!({
            "user": a.user,
            "servers": a.servers,
            "n_symbols": a.n,
            "m": a.m,
            "key_bits": a.n as u64 * a.m as u64,
            "files": files,
        }),
        None,
    )
}

pub fn store(a: StoreArgs) -> Result<()> {
    // reject bad thresholds before reading anything
    StorageParams::single(a.servers, a.t, a.z, 1, FieldSpec::GF256)?;

    let mut keys = Vec::new();
    let mut field = None;
    let mut paths = Vec::new();
    for l in 1..=a.servers as u16 {
        let path = key_path(&a.keys, a.user, l);
        let record = KeyRecord::decode(&read(&path)?)?;
        if record.user != a.user || record.server != l {
            return Err(Error::Usage(format!(
                "{} holds the key of user {} for server {}",
                path.display(),
                record.user,
                record.server
            ))
            .into());
        }
        if *field.get_or_insert(record.field) != record.field {
            return Err(Error::Usage(format!("{} uses a different field", path.display())).into());
        }
        keys.push((l, record.material));
        paths.push(path);
    }
    let field = field.expect("at least one server");
    let mut ring = KeyRing::from_keys(a.user, field, keys)?;
    let params = StorageParams::new(
        a.servers,
        field,
        vec![UserParams {
            user: a.user,
            t: a.t,
            z: a.z,
            key_len: ring.key_len(),
        }],
    )?;
    for (l, path) in (1..).zip(&paths) {
        if marker_path(path).exists() {
            ring.mark_consumed(l)?;
        }
    }

    let data = read(&a.input)?;
    let file = FileRecord::from_bytes(a.user, &data, &params)?;
    let n_r = params.ramp(a.user)?.tape_len(params.capacity(a.user)?)?;
    let tape = match a.seed {
        Some(seed) => RandomTape::seeded(seed, tape_stream(a.user), n_r, field),
        None => RandomTape::from_entropy(n_r, field),
    };
    let (messages, report) = pfs::store(&file, &mut ring, &params, &tape)?;

    let mut written = Vec::new();
    for msg in &messages {
        let path = message_path(&a.messages, a.user, msg.server());
        write(&path, &msg.encode()?)?;
        written.push(path);
    }
    for path in &paths {
        write(&marker_path(path), b"")?;
    }

    let optima = compute_optima(&params);
    let checks = verify_achievement(&report, &optima)?;
    emit(
        &json!({
            "user": a.user,
            "servers": a.servers,
            "t": a.t,
            "z": a.z,
            "m": field.m(),
            "n_symbols": ring.key_len(),
            "padded": file.plaintext_bits() < file.stored_bits(),
            "messages": written,
            "measured": report,
            "optimal": optima,
            "checks": checks,
        }),
        a.out.as_deref(),
    )
}

pub fn ingest(a: IngestArgs) -> Result<()> {
    for path in &a.messages {
        let msg = PublicMessage::decode(&read(path)?)?;
        let id = msg.server();
        let mut server = load_server(&a.state, id, msg.header.field, false)?;
        server.ingest(&msg)?;
        server.persist(&a.state)?;
        println!(
            "server {id}: stored share of user {} ({} symbols)",
            msg.user(),
            msg.payload.len()
        );
    }
    Ok(())
}

fn server_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let wrap = |source| CliError::File {
        path: root.to_owned(),
        source,
    };
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(wrap)? {
        let entry = entry.map_err(wrap)?;
        let name = entry.file_name();
        if name.to_string_lossy().starts_with("server_") && entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    Ok(dirs)
}

pub fn reconstruct(a: ReconstructArgs) -> Result<()> {
    let mut shares = Vec::new();
    for path in &a.shares {
        shares.extend(decode_shares(&read(path)?)?);
    }
    if let Some(root) = &a.state {
        for dir in server_dirs(root)? {
            shares.extend(decode_shares(&read(&dir.join("shares.bin"))?)?);
        }
    }
    if let Some(user) = a.user {
        shares.retain(|s| s.user() == user);
    }
    let first = shares
        .first()
        .ok_or_else(|| Error::Usage("no shares given (use --share or --state)".into()))?;
    let h = first.header;
    let params = StorageParams::new(
        h.servers as usize,
        h.field,
        vec![UserParams {
            user: h.user,
            t: h.t as usize,
            z: h.z as usize,
            key_len: h.n_symbols as usize,
        }],
    )?;
    let record = pfs::reconstruct(&shares, &params)?;
    let bytes = record.to_bytes();
    if let Some(out) = &a.out {
        write(out, &bytes)?;
    }
    println!(
        "recovered {} bits of user {} from {} shares",
        record.plaintext_bits(),
        record.user(),
        shares.len()
    );
    println!("sha256 {}", hex::encode(Sha256::digest(&bytes)));
    Ok(())
}

fn parse_extra_user(spec: &str, user: u16) -> Result<UserParams> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Option<Vec<usize>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[t, z, n]) => Ok(UserParams { user, t, z, key_len: n }),
        _ => Err(Error::Usage(format!("--add-user expects t:z:n, got {spec:?}")).into()),
    }
}

pub fn audit(a: AuditArgs) -> Result<()> {
    let field = FieldSpec::with_width(a.m)?;
    let mut users = vec![UserParams {
        user: 1,
        t: a.t,
        z: a.z,
        key_len: a.n,
    }];
    for (i, spec) in a.add_user.iter().enumerate() {
        users.push(parse_extra_user(spec, i as u16 + 2)?);
    }
    let params = StorageParams::new(a.servers, field, users)?;
    let scheme = match a.sabotage {
        None => Scheme::Honest,
        Some(Sabotage::NoOtp) => Scheme::NoOtp,
        Some(Sabotage::Asymmetric) => Scheme::Asymmetric { server: a.break_server },
    };
    let report = pfs_audit::audit(&params, scheme)?;
    if a.json {
        emit(&report, None)?;
    } else {
        println!("{report}");
    }
    if let Some(out) = &a.out {
        emit(&report, Some(out))?;
    }
    if report.verdicts.pass {
        Ok(())
    } else {
        Err(CliError::AuditFailed)
    }
}

fn parse_range(s: &str, name: &str) -> Result<(RangeInclusive<usize>, bool)> {
    let bad = || CliError::from(Error::Usage(format!("--{name} expects a number or a range a..b, got {s:?}")));
    match s.split_once("..") {
        Some((lo, hi)) => {
            let lo: usize = lo.trim().parse().map_err(|_| bad())?;
            let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            Ok((lo..=hi, true))
        }
        None => {
            let v: usize = s.trim().parse().map_err(|_| bad())?;
            Ok((v..=v, false))
        }
    }
}

#[derive(Serialize)]
struct BoundsRow {
    key_bits: u64,
    t: usize,
    z: usize,
    file_bits: u64,
    randomness_bits: u64,
    message_bits_per_server: u64,
    message_sum_bits: u64,
    storage_bits_per_server: u64,
}

pub fn bounds(a: BoundsArgs) -> Result<()> {
    let (t_range, t_swept) = parse_range(&a.t, "t")?;
    let (z_range, z_swept) = parse_range(&a.z, "z")?;
    if a.n == 0 {
        return Err(Error::Parameter("key length n must be at least 1 bit".into()).into());
    }
    if a.servers == 0 {
        return Err(Error::Parameter("at least one server is required".into()).into());
    }
    if !t_swept && !z_swept {
        let (t, z) = (*t_range.start(), *z_range.start());
        if z == 0 || z >= t || t > a.servers {
            return Err(Error::Parameter(format!(
                "need 1 <= z < t <= L, got t = {t}, z = {z}, L = {}",
                a.servers
            ))
            .into());
        }
    }

    if a.frontier {
        let rows = capacity_frontier(a.n, a.servers, t_range, z_range);
        if rows.is_empty() {
            return Err(Error::Parameter("no valid (t, z) in the given ranges".into()).into());
        }
        if a.json {
            return emit(&rows, None);
        }
        println!("{:>6} {:>3} {:>3} {:>10} {:>12} {:>14}", "n", "t", "z", "capacity", "randomness", "communication");
        for r in rows {
            println!(
                "{:>6} {:>3} {:>3} {:>10} {:>12} {:>14}",
                r.key_bits, r.t, r.z, r.capacity_bits, r.randomness_bits, r.communication_bits
            );
        }
        return Ok(());
    }

    let mut rows = Vec::new();
    for t in t_range.filter(|&t| (1..=a.servers).contains(&t)) {
        for z in z_range.clone().filter(|&z| z >= 1 && z < t) {
            let o = user_optima(1, a.n, t, z, a.servers);
            rows.push(BoundsRow {
                key_bits: a.n,
                t,
                z,
                file_bits: o.file_bits,
                randomness_bits: o.randomness_bits,
                message_bits_per_server: o.message_bits_per_server,
                message_sum_bits: o.message_sum_bits,
                storage_bits_per_server: a.n,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::Parameter("no valid (t, z) in the given ranges".into()).into());
    }
    if a.json {
        return emit(&rows, None);
    }
    println!(
        "{:>6} {:>3} {:>3} {:>8} {:>8} {:>8} {:>10} {:>8}",
        "n", "t", "z", "r(F)", "r(R)", "r(M)_l", "sum r(M)", "r(S)_l"
    );
    for r in rows {
        println!(
            "{:>6} {:>3} {:>3} {:>8} {:>8} {:>8} {:>10} {:>8}",
            r.key_bits,
            r.t,
            r.z,
            r.file_bits,
            r.randomness_bits,
            r.message_bits_per_server,
            r.message_sum_bits,
            r.storage_bits_per_server
        );
    }
    Ok(())
}

fn builtin_scenario() -> Scenario {
    Scenario {
        m: 2,
        servers: 3,
        seed: Some(42),
        users: vec![
            ScenarioUser { user: 1, t: 2, z: 1, n: 1 },
            ScenarioUser { user: 2, t: 3, z: 2, n: 1 },
        ],
        collusions: vec![
            Collusion { user: 1, servers: vec![2] },
            Collusion { user: 1, servers: vec![1, 3] },
            Collusion { user: 2, servers: vec![1, 2] },
            Collusion { user: 2, servers: vec![1, 2, 3] },
        ],
    }
}

pub fn demo(a: DemoArgs) -> Result<()> {
    let scenario = match &a.scenario {
        Some(path) => serde_json::from_slice(&read(path)?).map_err(Error::from)?,
        None => builtin_scenario(),
    };
    let (sim, outcome) = scenario.run()?;
    if let Some(dir) = &a.persist {
        sim.persist(dir)?;
    }
    emit(&outcome, a.out.as_deref())
}
