//! In-memory deployment of `L` servers behind a broadcast channel.
//!
//! Users publish through a single append-only transcript; each server only
//! ever ingests the messages addressed to it, using its own keys. The
//! collusion analysis is the one place that looks across servers.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::audit::{self, Bits, Scheme};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::keys::{keygen, KeyRing};
use crate::protocol::{
    multi_user_store, reconstruct, server_ingest, tape_stream, FileRecord, PublicMessage, ResourceReport,
    StorageParams, StoredShare, UserParams,
};
use crate::ramp::RandomTape;
use crate::wire::{decode_keys, decode_shares, KeyRecord};

/// What one server holds: keys not yet used, and one share per user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerState {
    id: u16,
    field: FieldSpec,
    keys: BTreeMap<u16, Vec<u8>>,
    shares: BTreeMap<u16, StoredShare>,
}

impl ServerState {
    pub fn new(id: u16, field: FieldSpec) -> Self {
        ServerState {
            id,
            field,
            keys: BTreeMap::new(),
            shares: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> u16 {
        self.id
    }

    pub fn key(&self, user: u16) -> Option<&[u8]> {
        self.keys.get(&user).map(Vec::as_slice)
    }

    pub fn share(&self, user: u16) -> Option<&StoredShare> {
        self.shares.get(&user)
    }

    pub fn shares(&self) -> impl Iterator<Item = &StoredShare> {
        self.shares.values()
    }

    /// Bits currently held, keys and shares together.
    pub fn storage_bits(&self) -> u64 {
        let symbols: usize =
            self.keys.values().map(Vec::len).sum::<usize>() + self.shares.values().map(|s| s.payload.len()).sum::<usize>();
        symbols as u64 * self.field.m() as u64
    }

    /// Gives the server its copy of `user`'s key.
    pub fn install_key(&mut self, user: u16, key: Vec<u8>) -> Result<()> {
        if self.keys.contains_key(&user) || self.shares.contains_key(&user) {
            return Err(Error::Setup(format!("server {} already holds data for user {user}", self.id)));
        }
        self.keys.insert(user, key);
        Ok(())
    }

    /// `S_l = M_l ⊕ K_l`; the key is dropped once used.
    pub fn ingest(&mut self, msg: &PublicMessage) -> Result<()> {
        if msg.server() != self.id {
            return Err(Error::Protocol(format!(
                "server {} was handed a message for server {}",
                self.id,
                msg.server()
            )));
        }
        let user = msg.user();
        let key = self.keys.get(&user).ok_or_else(|| {
            if self.shares.contains_key(&user) {
                Error::KeyReuse { user, server: self.id }
            } else {
                Error::KeyNotFound { user, server: self.id }
            }
        })?;
        let share = server_ingest(msg, key)?;
        self.keys.remove(&user);
        self.shares.insert(user, share);
        Ok(())
    }

    /// Writes `server_<id>/keys.bin` and `server_<id>/shares.bin`.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        let root = dir.join(format!("server_{}", self.id));
        fs::create_dir_all(&root)?;
        let mut keys = Vec::new();
        for (&user, material) in &self.keys {
            let record = KeyRecord {
                field: self.field,
                user,
                server: self.id,
                material: material.clone(),
            };
            keys.extend(record.encode()?);
        }
        let mut shares = Vec::new();
        for share in self.shares.values() {
            shares.extend(share.encode()?);
        }
        fs::write(root.join("keys.bin"), keys)?;
        fs::write(root.join("shares.bin"), shares)?;
        Ok(())
    }

    pub fn restore(dir: &Path, id: u16, field: FieldSpec) -> Result<Self> {
        let root = dir.join(format!("server_{id}"));
        let mut state = ServerState::new(id, field);
        for record in decode_keys(&fs::read(root.join("keys.bin"))?)? {
            if record.server != id || record.field != field {
                return Err(Error::Setup(format!(
                    "{} holds a key for server {} in {}",
                    root.display(),
                    record.server,
                    record.field
                )));
            }
            state.install_key(record.user, record.material)?;
        }
        for share in decode_shares(&fs::read(root.join("shares.bin"))?)? {
            if share.server() != id || share.header.field != field {
                return Err(Error::Setup(format!(
                    "{} holds a share for server {}",
                    root.display(),
                    share.server()
                )));
            }
            if state.keys.contains_key(&share.user()) || state.shares.insert(share.user(), share.clone()).is_some() {
                return Err(Error::Setup(format!(
                    "{} holds two records for user {}",
                    root.display(),
                    share.user()
                )));
            }
        }
        Ok(state)
    }
}

/// The public channel: every message ever sent, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChannelTranscript {
    messages: Vec<PublicMessage>,
}

impl ChannelTranscript {
    fn append(&mut self, msg: PublicMessage) {
        self.messages.push(msg);
    }

    pub fn messages(&self) -> &[PublicMessage] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn for_user(&self, user: u16) -> impl Iterator<Item = &PublicMessage> {
        self.messages.iter().filter(move |m| m.user() == user)
    }
}

/// Servers, channel and the users' key rings.
#[derive(Clone, Debug)]
pub struct Simulation {
    params: StorageParams,
    servers: BTreeMap<u16, ServerState>,
    rings: BTreeMap<u16, KeyRing>,
    transcript: ChannelTranscript,
}

/// Brings up servers `1..=L`, each holding its key from every ring.
pub fn deploy(params: &StorageParams, rings: Vec<KeyRing>) -> Result<Simulation> {
    deploy_servers(params, &params.server_ids().collect::<Vec<_>>(), rings)
}

/// Like [`deploy`] with explicit server ids, which must be `1..=L` in some
/// order.
pub fn deploy_servers(params: &StorageParams, ids: &[u16], rings: Vec<KeyRing>) -> Result<Simulation> {
    let mut servers = BTreeMap::new();
    for &id in ids {
        if id == 0 || id as usize > params.servers() {
            return Err(Error::Setup(format!("server id {id} outside 1..={}", params.servers())));
        }
        if servers.insert(id, ServerState::new(id, params.field())).is_some() {
            return Err(Error::Setup(format!("duplicate server id {id}")));
        }
    }
    if servers.len() != params.servers() {
        return Err(Error::Setup(format!(
            "{} servers deployed, parameters need {}",
            servers.len(),
            params.servers()
        )));
    }
    let mut by_user = BTreeMap::new();
    for ring in rings {
        let user = ring.user();
        let u = params
            .user(user)
            .map_err(|_| Error::Setup(format!("key ring for unknown user {user}")))?;
        if ring.key_len() != u.key_len || ring.field() != params.field() {
            return Err(Error::Setup(format!("key ring of user {user} does not match the parameters")));
        }
        for (&id, server) in servers.iter_mut() {
            let key = ring
                .server_copy(id)
                .map_err(|_| Error::Setup(format!("user {user} has no key for server {id}")))?;
            server.install_key(user, key.to_vec())?;
        }
        if by_user.insert(user, ring).is_some() {
            return Err(Error::Setup(format!("two key rings for user {user}")));
        }
    }
    if let Some(u) = params.users().iter().find(|u| !by_user.contains_key(&u.user)) {
        return Err(Error::Setup(format!("no key ring for user {}", u.user)));
    }
    Ok(Simulation {
        params: params.clone(),
        servers,
        rings: by_user,
        transcript: ChannelTranscript::default(),
    })
}

impl Simulation {
    pub fn params(&self) -> &StorageParams {
        &self.params
    }

    pub fn server(&self, id: u16) -> Option<&ServerState> {
        self.servers.get(&id)
    }

    pub fn servers(&self) -> impl Iterator<Item = &ServerState> {
        self.servers.values()
    }

    pub fn transcript(&self) -> &ChannelTranscript {
        &self.transcript
    }

    pub fn ring(&self, user: u16) -> Option<&KeyRing> {
        self.rings.get(&user)
    }

    /// Every user stores its file; messages go out ordered by user then
    /// server, and each server ingests its own.
    pub fn run_store_scenario(
        &mut self,
        files: &[FileRecord],
        tapes: &BTreeMap<u16, RandomTape>,
    ) -> Result<ResourceReport> {
        let (batches, report) = multi_user_store(files, &mut self.rings, &self.params, tapes)?;
        let mut ordered: Vec<PublicMessage> = batches.into_values().flatten().collect();
        ordered.sort_by_key(|m| (m.user(), m.server()));
        for msg in &ordered {
            self.transcript.append(msg.clone());
        }
        self.replay(&ordered)?;
        Ok(report)
    }

    /// Feeds messages to their servers.
    pub fn replay(&mut self, messages: &[PublicMessage]) -> Result<()> {
        for msg in messages {
            let server = self
                .servers
                .get_mut(&msg.server())
                .ok_or_else(|| Error::Protocol(format!("no server {}", msg.server())))?;
            server.ingest(msg)?;
        }
        Ok(())
    }

    /// `user`'s file from the shares of `servers`.
    pub fn retrieve(&self, user: u16, servers: &[u16]) -> Result<FileRecord> {
        let mut shares = Vec::new();
        for id in servers {
            let server = self
                .servers
                .get(id)
                .ok_or_else(|| Error::Usage(format!("no server {id}")))?;
            let share = server
                .share(user)
                .ok_or_else(|| Error::Usage(format!("server {id} holds nothing for user {user}")))?;
            shares.push(share.clone());
        }
        reconstruct(&shares, &self.params)
    }

    /// What `colluders` learn about `user`'s file from the whole transcript
    /// plus their own keys and shares.
    pub fn collusion_attack(&self, colluders: &[u16], user: u16) -> Result<AttackSummary> {
        let u = *self.params.user(user)?;
        let set: BTreeSet<u16> = colluders.iter().copied().collect();
        if set.len() != colluders.len() {
            return Err(Error::Usage("colluding set lists a server twice".into()));
        }
        if let Some(bad) = set.iter().find(|&&l| l == 0 || l as usize > self.params.servers()) {
            return Err(Error::Usage(format!("no server {bad}")));
        }
        let ring = &self.rings[&user];
        let set: Vec<u16> = set.into_iter().collect();
        let m = self.params.field().m() as u64;

        let messages = self.transcript.len();
        let keys = set.len();
        let shares = set.iter().filter(|&&l| self.servers[&l].share(user).is_some()).count();
        let view_bits = self.transcript.messages().iter().map(|x| x.payload.len() as u64).sum::<u64>() * m
            + (keys + shares) as u64 * u.key_len as u64 * m;

        // the adversary strips the pads it knows
        let recovered = if set.len() >= u.t {
            let own: Result<Vec<StoredShare>> = self
                .transcript
                .for_user(user)
                .filter(|msg| set.contains(&msg.server()))
                .map(|msg| server_ingest(msg, ring.server_copy(msg.server())?))
                .collect();
            let own = own?;
            if own.len() >= u.t {
                Some(reconstruct(&own, &self.params)?)
            } else {
                None
            }
        } else {
            None
        };

        let exact = exact_residual(&self.params, u, &set)?;
        Ok(AttackSummary {
            user,
            colluders: set,
            messages,
            keys,
            shares,
            view_bits,
            file_bits: self.params.capacity(user)? as u64 * m,
            exact,
            recovered,
        })
    }

    /// Persists every server under `dir`.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        for server in self.servers.values() {
            server.persist(dir)?;
        }
        Ok(())
    }

    /// Servers read back from `dir`; the user side (rings, transcript) is
    /// not part of the persisted state and starts empty.
    pub fn restore(params: &StorageParams, dir: &Path) -> Result<Simulation> {
        let mut servers = BTreeMap::new();
        for id in params.server_ids() {
            servers.insert(id, ServerState::restore(dir, id, params.field())?);
        }
        Ok(Simulation {
            params: params.clone(),
            servers,
            rings: BTreeMap::new(),
            transcript: ChannelTranscript::default(),
        })
    }
}

/// Exact `H(F)` and `H(F | M, K_U, S_U)` for one user, when the single-user
/// state space is small enough to enumerate.
fn exact_residual(params: &StorageParams, u: UserParams, set: &[u16]) -> Result<Option<ExactLeakage>> {
    let single = StorageParams::new(params.servers(), params.field(), vec![u])?;
    if audit::atom_count(&single)? > audit::ATOM_LIMIT {
        return Ok(None);
    }
    let dist = audit::enumerate_strategy(&single, Scheme::Honest)?;
    let mut view: Vec<String> = single.server_ids().map(|l| audit::message_label(u.user, l)).collect();
    for &l in set {
        view.push(audit::key_label(u.user, l));
        view.push(audit::share_label(l, u.user));
    }
    let view: Vec<&str> = view.iter().map(String::as_str).collect();
    let f = audit::file_label(u.user);
    Ok(Some(ExactLeakage {
        file_entropy: dist.entropy(&[&f])?,
        residual: dist.conditional_entropy(&[&f], &view)?,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactLeakage {
    pub file_entropy: Bits,
    /// `H(F | view)`.
    pub residual: Bits,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttackSummary {
    pub user: u16,
    pub colluders: Vec<u16>,
    /// Size of the adversary view.
    pub messages: usize,
    pub keys: usize,
    pub shares: usize,
    pub view_bits: u64,
    pub file_bits: u64,
    /// Only at enumerable scale.
    pub exact: Option<ExactLeakage>,
    #[serde(skip)]
    pub recovered: Option<FileRecord>,
}

impl AttackSummary {
    pub fn recovered(&self) -> bool {
        self.recovered.is_some()
    }
}

/// A scenario file: field width, servers, users, seed and collusion sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub m: u8,
    pub servers: usize,
    pub users: Vec<ScenarioUser>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub collusions: Vec<Collusion>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioUser {
    pub user: u16,
    pub t: usize,
    pub z: usize,
    /// Key length in symbols.
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Collusion {
    pub user: u16,
    pub servers: Vec<u16>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioOutcome {
    pub transcript_messages: usize,
    pub report: ResourceReport,
    /// Per user: every server's share set decodes to the stored file.
    pub recovered: BTreeMap<u16, bool>,
    pub attacks: Vec<AttackSummary>,
}

impl Scenario {
    pub fn params(&self) -> Result<StorageParams> {
        let field = FieldSpec::with_width(self.m)?;
        let users = self
            .users
            .iter()
            .map(|u| UserParams {
                user: u.user,
                t: u.t,
                z: u.z,
                key_len: u.n,
            })
            .collect();
        StorageParams::new(self.servers, field, users)
    }

    /// Keys, tapes and files are drawn from the seed (or the OS when
    /// absent); files fill each user's capacity.
    pub fn run(&self) -> Result<(Simulation, ScenarioOutcome)> {
        let params = self.params()?;
        let field = params.field();
        let mut rings = Vec::new();
        let mut tapes = BTreeMap::new();
        let mut files = Vec::new();
        for u in params.users() {
            rings.push(keygen(u.user, params.servers(), u.key_len, field, self.seed)?);
            let n_s = params.capacity(u.user)?;
            let n_r = params.ramp(u.user)?.tape_len(n_s)?;
            let (tape, mut rng) = match self.seed {
                Some(seed) => {
                    let mut rng = ChaCha20Rng::seed_from_u64(seed);
                    rng.set_stream((2 << 32) | u.user as u64);
                    (RandomTape::seeded(seed, tape_stream(u.user), n_r, field), rng)
                }
                None => (RandomTape::from_entropy(n_r, field), ChaCha20Rng::from_os_rng()),
            };
            tapes.insert(u.user, tape);
            let mask = (field.order() - 1) as u8;
            let symbols = (0..n_s).map(|_| rng.random::<u8>() & mask).collect();
            files.push(FileRecord::from_symbols(u.user, symbols, &params)?);
        }
        let mut sim = deploy(&params, rings)?;
        let report = sim.run_store_scenario(&files, &tapes)?;
        let all: Vec<u16> = params.server_ids().collect();
        let mut recovered = BTreeMap::new();
        for f in &files {
            recovered.insert(f.user(), sim.retrieve(f.user(), &all)?.symbols() == f.symbols());
        }
        let mut attacks = Vec::new();
        for c in &self.collusions {
            attacks.push(sim.collusion_attack(&c.servers, c.user)?);
        }
        let outcome = ScenarioOutcome {
            transcript_messages: sim.transcript().len(),
            report,
            recovered,
            attacks,
        };
        Ok((sim, outcome))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf4() -> FieldSpec {
        FieldSpec::with_width(2).unwrap()
    }

    fn two_users() -> StorageParams {
        StorageParams::new(
            3,
            gf4(),
            vec![
                UserParams { user: 1, t: 2, z: 1, key_len: 1 },
                UserParams { user: 2, t: 3, z: 2, key_len: 2 },
            ],
        )
        .unwrap()
    }

    fn setup(params: &StorageParams, seed: u64) -> (Simulation, Vec<FileRecord>, BTreeMap<u16, RandomTape>) {
        let rings = params
            .users()
            .iter()
            .map(|u| keygen(u.user, params.servers(), u.key_len, params.field(), Some(seed)).unwrap())
            .collect();
        let sim = deploy(params, rings).unwrap();
        let mut files = Vec::new();
        let mut tapes = BTreeMap::new();
        for u in params.users() {
            let n_s = params.capacity(u.user).unwrap();
            let n_r = params.ramp(u.user).unwrap().tape_len(n_s).unwrap();
            tapes.insert(u.user, RandomTape::seeded(seed, tape_stream(u.user), n_r, params.field()));
            let symbols = (0..n_s).map(|i| (i as u8 + u.user as u8) % 4).collect();
            files.push(FileRecord::from_symbols(u.user, symbols, params).unwrap());
        }
        (sim, files, tapes)
    }

    #[test]
    fn deploy_installs_keys() {
        let p = two_users();
        let (sim, _, _) = setup(&p, 5);
        assert_eq!(sim.servers().count(), 3);
        for s in sim.servers() {
            assert!(s.key(1).is_some() && s.key(2).is_some());
            assert_eq!(s.storage_bits(), (1 + 2) * 2);
        }
        assert!(sim.transcript().is_empty());
    }

    #[test]
    fn deploy_errors() {
        let p = two_users();
        let r1 = keygen(1, 3, 1, gf4(), Some(1)).unwrap();
        let r2 = keygen(2, 3, 2, gf4(), Some(1)).unwrap();
        assert!(matches!(
            deploy_servers(&p, &[1, 2, 2], vec![r1.clone(), r2.clone()]),
            Err(Error::Setup(_))
        ));
        assert!(matches!(deploy(&p, vec![r1.clone()]), Err(Error::Setup(_))));
        let short = keygen(2, 2, 2, gf4(), Some(1)).unwrap();
        assert!(matches!(deploy(&p, vec![r1, short]), Err(Error::Setup(_))));
    }

    #[test]
    fn store_scenario() {
        let p = two_users();
        let (mut sim, files, tapes) = setup(&p, 9);
        let report = sim.run_store_scenario(&files, &tapes).unwrap();
        assert_eq!(sim.transcript().len(), 2 * 3);
        assert_eq!(report.storage_bits.values().copied().collect::<Vec<_>>(), vec![6, 6, 6]);
        for s in sim.servers() {
            assert_eq!(s.storage_bits(), 6);
            assert!(s.key(1).is_none());
        }
        for f in &files {
            assert_eq!(sim.retrieve(f.user(), &[1, 2, 3]).unwrap().symbols(), f.symbols());
        }
        // keys are gone, so a second store is refused
        assert!(matches!(sim.run_store_scenario(&files, &tapes), Err(Error::KeyReuse { .. })));
    }

    #[test]
    fn server_rejects_foreign_messages() {
        let p = two_users();
        let (mut sim, files, tapes) = setup(&p, 2);
        sim.run_store_scenario(&files, &tapes).unwrap();
        let msg = sim.transcript().messages()[0].clone();
        let other = if msg.server() == 1 { 2 } else { 1 };
        let server = sim.servers.get_mut(&other).unwrap();
        assert!(matches!(server.ingest(&msg), Err(Error::Protocol(_))));
        let own = sim.servers.get_mut(&msg.server()).unwrap();
        assert!(matches!(own.ingest(&msg), Err(Error::KeyReuse { .. })));
    }

    #[test]
    fn replay_is_deterministic() {
        let p = two_users();
        let (mut a, files, tapes) = setup(&p, 11);
        a.run_store_scenario(&files, &tapes).unwrap();
        let (mut b, _, _) = setup(&p, 11);
        b.replay(a.transcript().messages()).unwrap();
        let sa: Vec<_> = a.servers().cloned().collect();
        let sb: Vec<_> = b.servers().cloned().collect();
        assert_eq!(sa, sb);
    }

    #[test]
    fn collusion_profile() {
        let p = StorageParams::single(4, 3, 1, 1, gf4()).unwrap();
        let (mut sim, files, tapes) = setup(&p, 3);
        sim.run_store_scenario(&files, &tapes).unwrap();

        let one = sim.collusion_attack(&[2], 1).unwrap();
        let e = one.exact.as_ref().unwrap();
        assert_eq!(e.residual, e.file_entropy);
        assert!(!one.recovered());

        let two = sim.collusion_attack(&[1, 4], 1).unwrap();
        assert_eq!(two.exact.unwrap().residual, Bits::from_integer(2));

        let three = sim.collusion_attack(&[1, 3, 4], 1).unwrap();
        assert!(three.exact.unwrap().residual.is_zero());
        assert_eq!(three.recovered.unwrap().symbols(), files[0].symbols());

        assert!(matches!(sim.collusion_attack(&[5], 1), Err(Error::Usage(_))));
        assert!(matches!(sim.collusion_attack(&[1, 1], 1), Err(Error::Usage(_))));
    }

    #[test]
    fn production_scale_reports_structure_only() {
        let p = StorageParams::single(5, 3, 1, 64, FieldSpec::GF256).unwrap();
        let (mut sim, files, tapes) = setup(&p, 4);
        sim.run_store_scenario(&files, &tapes).unwrap();
        let a = sim.collusion_attack(&[1, 2], 1).unwrap();
        assert!(a.exact.is_none());
        assert_eq!(a.messages, 5);
        assert_eq!(a.view_bits, (5 + 2 + 2) * 64 * 8);
        assert!(sim.collusion_attack(&[1, 2, 5], 1).unwrap().recovered());
    }

    #[test]
    fn persist_restore_roundtrip() {
        let p = two_users();
        let (mut sim, files, tapes) = setup(&p, 6);
        sim.run_store_scenario(&files, &tapes).unwrap();
        let a = tempfile::tempdir().unwrap();
        sim.persist(a.path()).unwrap();
        let restored = Simulation::restore(&p, a.path()).unwrap();
        let b = tempfile::tempdir().unwrap();
        restored.persist(b.path()).unwrap();
        for l in 1..=3 {
            for name in ["keys.bin", "shares.bin"] {
                let x = fs::read(a.path().join(format!("server_{l}")).join(name)).unwrap();
                let y = fs::read(b.path().join(format!("server_{l}")).join(name)).unwrap();
                assert_eq!(x, y);
            }
            assert_eq!(restored.server(l), sim.server(l));
        }
    }

    #[test]
    fn restore_rejects_damage() {
        let p = two_users();
        let (sim, _, _) = setup(&p, 6);
        let dir = tempfile::tempdir().unwrap();
        sim.persist(dir.path()).unwrap();
        let keys = dir.path().join("server_2").join("keys.bin");
        let bytes = fs::read(&keys).unwrap();
        fs::write(&keys, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(Simulation::restore(&p, dir.path()), Err(Error::Format { .. })));
        let mut foreign = bytes.clone();
        foreign[0] = b'X';
        fs::write(&keys, foreign).unwrap();
        match Simulation::restore(&p, dir.path()) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn scenario_file() {
        let json = r#"{
            "m": 2, "servers": 3, "seed": 7,
            "users": [{"user": 1, "t": 2, "z": 1, "n": 1}, {"user": 2, "t": 3, "z": 2, "n": 1}],
            "collusions": [{"user": 1, "servers": [2]}, {"user": 1, "servers": [1, 3]}]
        }"#;
        let s: Scenario = serde_json::from_str(json).unwrap();
        let (_, out) = s.run().unwrap();
        assert_eq!(out.transcript_messages, 6);
        assert!(out.recovered.values().all(|&ok| ok));
        assert!(out.attacks[0].exact.as_ref().unwrap().residual == Bits::from_integer(2));
        assert!(out.attacks[1].recovered());
        let (_, again) = s.run().unwrap();
        assert_eq!(serde_json::to_string(&out).unwrap(), serde_json::to_string(&again).unwrap());
        assert!(serde_json::from_str::<Scenario>(r#"{"m": 2, "servers": 3, "users": [], "bogus": 1}"#).is_err());
    }
}
