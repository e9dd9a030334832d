use std::path::Path;
use std::process::{Command, Output};

fn hlpuf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlpuf")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn missing_seed_is_a_config_error() {
    let o = hlpuf(&["attack-curve", "--q-grid", "10"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_flags_and_configs_exit_two() {
    assert_eq!(code(&hlpuf(&["bounds", "--seed", "1", "--scheme", "mub5"])), 2);
    assert_eq!(code(&hlpuf(&["bounds", "--seed", "1", "--p", "1.5"])), 2);
    assert_eq!(code(&hlpuf(&["no-such-command"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nunknown_field = 3\n").unwrap();
    assert_eq!(code(&hlpuf(&["bounds", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&hlpuf(&["bounds", "--config", "/nonexistent/x.toml"])), 2);
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&hlpuf(&["--help"])), 0);
    assert_eq!(code(&hlpuf(&["--version"])), 0);
}

#[test]
fn selfcheck_exit_codes() {
    let ok = hlpuf(&["selfcheck"]);
    assert_eq!(code(&ok), 0);
    assert!(String::from_utf8_lossy(&ok.stdout).contains("12/12 checks passed"));
    let bad = hlpuf(&["selfcheck", "--corrupt-mub"]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL mub-8"));
}

#[test]
fn bounds_file_is_reproducible_and_config_driven() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.toml");
    std::fs::write(&cfg, "seed = 3\nm = 2\nq_grid = [5, 50]\ntrials = 40\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = hlpuf(&["bounds", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = read(&a);
    assert_eq!(text, read(&b));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# hlpuf "));
    assert_eq!(lines.next().unwrap(), "curve,p,m,q,eps,k,zeta,value,raw");
    // A flag overrides the file and changes the hash.
    let c = dir.path().join("c.csv");
    hlpuf(&["bounds", "--config", cfg.to_str().unwrap(), "--m", "3", "--out", c.to_str().unwrap()]);
    assert_ne!(read(&c).lines().next(), text.lines().next());
}

#[test]
fn protocol_writes_report_and_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let o = hlpuf(&[
        "protocol", "--seed", "2", "--m", "2", "--rounds", "30", "--db-size", "20", "--adversary", "intercept-resend",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(report["session"]["adversary"], "intercept-resend");
    assert_eq!(report["seed"], 2);
    let transcript = read(&dir.path().join("run.json.jsonl"));
    assert!(transcript.lines().count() > 30);
    for line in transcript.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn model_export_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("m.txt");
    let f = file.to_str().unwrap();
    assert_eq!(code(&hlpuf(&["model", "export", "--seed", "4", "--n", "8", "--k", "2", "--out", f])), 0);
    let o = hlpuf(&["model", "eval", f, "01100110", "11111111"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("01100110 ") && lines[0].len() == 8 + 1 + 4);
    // Wrong challenge width is an input error.
    assert_eq!(code(&hlpuf(&["model", "eval", f, "0101"])), 2);
    std::fs::write(&file, "not a model\n").unwrap();
    assert_eq!(code(&hlpuf(&["model", "eval", f, "01100110"])), 2);
}

#[test]
fn attack_curve_ignores_thread_count() {
    let args = |t: &'static str| {
        vec![
            "attack-curve", "--seed", "6", "--n", "12", "--k", "1", "--q-grid", "0,200", "--test-size", "500",
            "--lr-epochs", "20", "--lr-restarts", "1", "--threads", t,
        ]
    };
    let a = hlpuf(&args("1"));
    let b = hlpuf(&args("3"));
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("seed,q,scheme,k,n,m,mode,accuracy"));
}
