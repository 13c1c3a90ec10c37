use std::path::Path;
use std::process::{Command, Output};

fn eth_lab(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eth-lab"))
        .args(args)
        .env("ETH_LAB_CACHE_DIR", cache)
        .output()
        .unwrap()
}

fn sidecar(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = dir.path().join("bad.json");
    for text in [r#"{"version": 1, "unknown": 3}"#, r#"{"version": 9}"#, r#"{"version": 1, "analysis": {"observable": "Q"}}"#, "{"] {
        std::fs::write(&cfg, text).unwrap();
        let o = eth_lab(&["levels", "--config", cfg.to_str().unwrap()], &cache);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let out = dir.path().join("out");
    let o = eth_lab(&["obc-sf", "--L", "6", "--out", out.to_str().unwrap()], &cache);
    assert_eq!(o.status.code(), Some(2));
    let o = eth_lab(&["quench", "--L", "6", "--M", "1", "--out", out.to_str().unwrap()], &cache);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = eth_lab(&["levels", "--bogus"], &cache);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runs_are_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out: &Path| {
        vec!["spectral".to_string(), "--L".into(), "7".into(), "--M".into(), "1".into(), "--observable".into(), "Z_NN".into(), "--out".into(), out.to_str().unwrap().to_string()]
    };
    let run = |out: &Path| {
        let v = args(out);
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        let o = eth_lab(&refs, &cache);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&a);
    let first = sidecar(&a.join("spectral_summary.json"));
    assert!(first["solve"]["diagonalizations"].as_u64().unwrap() > 0);
    run(&b);
    let second = sidecar(&b.join("spectral_summary.json"));
    assert_eq!(second["solve"]["diagonalizations"], 0);
    assert_eq!(second["solve"]["cache_hits"], first["solve"]["diagonalizations"]);
    for name in ["spectral_var.csv", "spectral_corr.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_eq!(second["config"]["sizes"][0], 7);
    assert_eq!(second["library_version"], "0.1.0");

    // corrupt one entry: recomputed with a warning, same numbers
    let entry = std::fs::read_dir(&cache).unwrap().next().unwrap().unwrap().path();
    let mut bytes = std::fs::read(&entry).unwrap();
    let k = bytes.len() / 2;
    bytes[k] ^= 1;
    std::fs::write(&entry, bytes).unwrap();
    let c = dir.path().join("c");
    let o = run(&c);
    assert!(String::from_utf8_lossy(&o.stderr).contains("recomputing"));
    let third = sidecar(&c.join("spectral_summary.json"));
    assert_eq!(third["solve"]["diagonalizations"], 1);
    assert_eq!(third["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(std::fs::read(a.join("spectral_var.csv")).unwrap(), std::fs::read(c.join("spectral_var.csv")).unwrap());
}

#[test]
fn every_subcommand_runs_at_small_size() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["levels", "--L", "8", "--M", "1", "--sectors", "nonreal"],
        vec!["dos", "--L", "6,7,8", "--M", "1"],
        vec!["page", "--L", "6", "--n-states", "20", "--haar-samples", "20"],
        vec!["eth-diag", "--L", "6,7,8", "--M", "1"],
        vec!["eth-offdiag", "--L", "7,8", "--M", "1", "--observable", "Z_NN"],
        vec!["spectral", "--L", "6", "--observable", "J_N"],
        vec!["momentum-sf", "--L", "6", "--M", "1", "--site", "2"],
        vec!["obc-sf", "--L", "6", "--M", "1", "--bc", "obc"],
        vec!["quench", "--L", "6", "--init", "neel", "--observable", "Z_NN", "--nt", "20", "--tmax", "10"],
        vec!["rmt", "--dim", "4", "--samples", "2000"],
    ];
    for case in cases {
        let mut args = case.clone();
        args.extend(["--out", o]);
        let r = eth_lab(&args, &cache);
        assert!(r.status.success(), "{case:?}: {}", String::from_utf8_lossy(&r.stderr));
        let summary = sidecar(&out.join(format!("{}_summary.json", case[0])));
        assert!(summary["wall_time_seconds"].as_f64().unwrap() >= 0.0);
        assert!(summary["errors"].as_array().unwrap().is_empty());
        assert!(String::from_utf8_lossy(&r.stdout).lines().any(|l| l.ends_with(".csv")), "{case:?}");
    }
    let q = sidecar(&out.join("quench_summary.json"));
    let s = &q["summary"]["sizes"][0];
    assert!(s["energy_drift"].as_f64().unwrap() < 1e-10);
    assert!(s["norm_drift"].as_f64().unwrap() < 1e-10);
}
