use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfs")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn keygen_writes_one_file_per_server() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfs(&["keygen", "--servers", "3", "--n", "16", "--user", "1", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["key_u1_s1.bin", "key_u1_s2.bin", "key_u1_s3.bin"]);
}

#[test]
fn keygen_is_deterministic_under_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = pfs(&["keygen", "--servers", "3", "--n", "16", "--seed", "42", "--out", p(d.path())]);
        assert_eq!(code(&out), 0);
    }
    for l in 1..=3 {
        let name = format!("key_u1_s{l}.bin");
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
}

#[test]
fn keygen_rejects_empty_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfs(&["keygen", "--servers", "3", "--n", "0", "--out", p(dir.path())]);
    assert_eq!(code(&out), 2);
}

struct Deployment {
    root: tempfile::TempDir,
}

impl Deployment {
    /// Five servers, 4-byte keys, t = 3, z = 1: capacity 8 bytes.
    fn new(users: &[u16]) -> Self {
        let root = tempfile::tempdir().unwrap();
        for &u in users {
            let out = pfs(&[
                "keygen", "--servers", "5", "--n", "4", "--user", &u.to_string(), "--seed", "7",
                "--out", p(&root.path().join("keys")), "--state", p(&root.path().join("state")),
            ]);
            assert_eq!(code(&out), 0, "{}", stderr(&out));
        }
        Deployment { root }
    }

    fn path(&self, name: &str) -> String {
        p(&self.root.path().join(name)).to_owned()
    }

    fn store(&self, user: u16, data: &[u8]) -> Output {
        let input = self.root.path().join(format!("input_{user}"));
        fs::write(&input, data).unwrap();
        pfs(&[
            "store", "--input", p(&input), "--keys", &self.path("keys"), "--servers", "5", "--t", "3", "--z", "1",
            "--user", &user.to_string(), "--seed", "9", "--messages", &self.path("msgs"),
        ])
    }

    fn ingest(&self, user: u16) -> Output {
        let mut args = vec!["ingest".to_owned(), "--state".into(), self.path("state")];
        for l in 1..=5 {
            args.push(self.path(&format!("msgs/msg_u{user}_s{l}.bin")));
        }
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        pfs(&args)
    }
}

#[test]
fn store_ingest_reconstruct() {
    let d = Deployment::new(&[1]);
    let data = b"8 bytes!";
    let out = d.store(1, data);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["padded"], false);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == "Optimal"));
    assert_eq!(report["measured"]["users"][0]["file_bits"], 64);
    assert_eq!(report["optimal"]["storage_bits_per_server"], 32);

    let out = d.ingest(1);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for l in 1..=5 {
        let dir = d.root.path().join(format!("state/server_{l}"));
        assert!(dir.join("keys.bin").exists() && dir.join("shares.bin").exists());
    }

    let recovered = d.path("recovered");
    let out = pfs(&["reconstruct", "--state", &d.path("state"), "--out", &recovered]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(&recovered).unwrap(), data);
    assert!(stdout(&out).contains("sha256 "));

    // exactly t of the L shares
    let pick: Vec<String> = [2, 4, 5].iter().map(|l| d.path(&format!("state/server_{l}/shares.bin"))).collect();
    let out = pfs(&["reconstruct", "--share", &pick[0], "--share", &pick[1], "--share", &pick[2]]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    // t - 1 shares
    let out = pfs(&["reconstruct", "--share", &pick[0], "--share", &pick[1]]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("need 3") && stderr(&out).contains("1 more"), "{}", stderr(&out));

    // a second ingest of the same message finds the key already spent
    let out = d.ingest(1);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn padded_file_is_reported() {
    let d = Deployment::new(&[1]);
    let out = d.store(1, b"abc");
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["padded"], true);
    assert!(report["checks"].as_array().unwrap().iter().any(|c| c["verdict"] == "CapacityUnused"));
}

#[test]
fn store_refuses_oversized_files_and_key_reuse() {
    let d = Deployment::new(&[1]);
    let out = d.store(1, b"nine byte");
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("n(t-z) = 64 bits"), "{}", stderr(&out));
    // nothing was consumed by the failed attempt
    assert_eq!(code(&d.store(1, b"fits")), 0);
    let out = d.store(1, b"again");
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn store_names_missing_key_file() {
    let d = Deployment::new(&[1]);
    fs::remove_file(d.root.path().join("keys/key_u1_s4.bin")).unwrap();
    let out = d.store(1, b"data");
    assert_eq!(code(&out), 6);
    assert!(stderr(&out).contains("key_u1_s4.bin"), "{}", stderr(&out));
}

#[test]
fn store_validates_thresholds_first() {
    let d = Deployment::new(&[1]);
    let input = d.root.path().join("in");
    fs::write(&input, b"x").unwrap();
    let out = pfs(&[
        "store", "--input", p(&input), "--keys", &d.path("keys"), "--servers", "5", "--t", "2", "--z", "2",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn mixed_user_shares_are_refused() {
    let d = Deployment::new(&[1, 2]);
    for u in [1, 2] {
        assert_eq!(code(&d.store(u, b"payload")), 0);
        assert_eq!(code(&d.ingest(u)), 0);
    }
    let out = pfs(&["reconstruct", "--state", &d.path("state")]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("does not match"), "{}", stderr(&out));
    let out = pfs(&["reconstruct", "--state", &d.path("state"), "--user", "2", "--out", &d.path("two")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(d.path("two")).unwrap(), b"payload");
}

#[test]
fn truncated_message_is_a_format_error() {
    let d = Deployment::new(&[1]);
    assert_eq!(code(&d.store(1, b"data")), 0);
    let msg = d.path("msgs/msg_u1_s1.bin");
    let bytes = fs::read(&msg).unwrap();
    fs::write(&msg, &bytes[..10]).unwrap();
    let out = pfs(&["ingest", "--state", &d.path("state"), &msg]);
    assert_eq!(code(&out), 6);
    assert!(stderr(&out).contains("offset"), "{}", stderr(&out));
}

#[test]
fn audit_default_passes() {
    let out = pfs(&["audit"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("overall        PASS"));
}

#[test]
fn audit_flags_sabotage() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = pfs(&["audit", "--break", "no-otp", "--out", p(&report)]);
    assert_eq!(code(&out), 5);
    assert!(stdout(&out).contains("leak:"));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(json["verdicts"]["security"], false);

    let out = pfs(&["audit", "--servers", "4", "--t", "3", "--break", "asymmetric", "--json"]);
    assert_eq!(code(&out), 5);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["verdicts"]["symmetry"], false);
}

#[test]
fn audit_scale_error_has_no_output() {
    let out = pfs(&["audit", "--L", "10", "--m", "8"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).is_empty());
    assert!(stderr(&out).contains("exceeds the audit limit"));
}

#[test]
fn audit_multi_user() {
    let out = pfs(&["audit", "--servers", "2", "--add-user", "2:1:1", "--json"]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["users"].as_array().unwrap().len(), 2);
}

#[test]
fn bounds_row() {
    let out = pfs(&["bounds", "--n", "8", "--t", "3", "--z", "1", "--servers", "5", "--json"]);
    assert_eq!(code(&out), 0);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let r = &rows[0];
    let got: Vec<u64> = ["file_bits", "randomness_bits", "message_bits_per_server", "message_sum_bits", "storage_bits_per_server"]
        .iter()
        .map(|k| r[k].as_u64().unwrap())
        .collect();
    assert_eq!(got, [16, 8, 8, 40, 8]);
}

#[test]
fn bounds_sweep_is_monotone() {
    let out = pfs(&["bounds", "--n", "8", "--t", "2..5", "--z", "1", "--servers", "5", "--json"]);
    assert_eq!(code(&out), 0);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&stdout(&out)).unwrap();
    let caps: Vec<u64> = rows.iter().map(|r| r["file_bits"].as_u64().unwrap()).collect();
    assert_eq!(caps, [8, 16, 24, 32]);
    let text = stdout(&pfs(&["bounds", "--n", "8", "--t", "2..5", "--z", "1", "--L", "5", "--frontier"]));
    assert!(text.lines().count() > 4);
}

#[test]
fn bounds_rejects_z_at_least_t() {
    let out = pfs(&["bounds", "--n", "8", "--t", "3", "--z", "3", "--servers", "5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn demo_runs_and_persists() {
    let dir = tempfile::tempdir().unwrap();
    let out = pfs(&["demo", "--persist", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["transcript_messages"], 6);
    assert_eq!(json["recovered"]["1"], true);
    assert_eq!(json["attacks"][0]["exact"]["residual"], "2");
    for l in 1..=3 {
        assert!(dir.path().join(format!("server_{l}/shares.bin")).exists());
    }

    let scenario = dir.path().join("s.json");
    fs::write(&scenario, r#"{"m": 8, "servers": 4, "seed": 1, "users": [{"user": 1, "t": 3, "z": 1, "n": 32}]}"#).unwrap();
    let out = pfs(&["demo", "--scenario", p(&scenario)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}
