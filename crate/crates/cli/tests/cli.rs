use std::path::Path;
use std::process::{Command, Output};

fn beamlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamlab"))
        .current_dir(dir)
        .env_remove("BEAMLAB_SEED")
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn resolved(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("resolved_config.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn pipeline(dir: &Path, seed: &str) -> String {
    ok(&beamlab(
        dir,
        &[
            "--seed",
            seed,
            "--out-dir",
            "data",
            "make-corpus",
            "--speakers",
            "3",
            "--utterances",
            "2",
            "--noise-duration",
            "8",
        ],
    ));
    ok(&beamlab(
        dir,
        &[
            "--seed",
            seed,
            "--out-dir",
            "ds",
            "simulate",
            "-n",
            "2",
            "--corpus",
            "data/corpus",
            "--noise-dir",
            "data/noise",
            "--max-duration",
            "3.5",
        ],
    ));
    for m in ["oracle-mvdr", "estimated-mvdr"] {
        ok(&beamlab(
            dir,
            &[
                "--out-dir",
                "res",
                "beamform",
                "--dataset",
                "ds",
                "--method",
                m,
            ],
        ));
    }
    ok(&beamlab(
        dir,
        &["--out-dir", "res", "evaluate", "--dataset", "ds"],
    ));
    std::fs::read_to_string(dir.join("res/scores.csv")).unwrap()
}

#[test]
fn pipeline_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let csv = pipeline(a.path(), "11");
    assert_eq!(csv, pipeline(b.path(), "11"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scene_id,method,si_sdr_db,stoi");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(csv.contains(",OracleMvdr,") && csv.contains(",EstimatedMvdr,"));

    // Features of the same dataset.
    ok(&beamlab(
        a.path(),
        &[
            "--out-dir",
            "feat",
            "export-features",
            "--dataset",
            "ds",
            "--feature",
            "doa",
        ],
    ));
    assert!(a.path().join("feat/doa/scene_0000.json").is_file());

    // A missing output is skipped and reported through the exit code.
    std::fs::remove_file(a.path().join("res/OracleMvdr/scene_0001.wav")).unwrap();
    let out = beamlab(
        a.path(),
        &[
            "--out-dir",
            "res2",
            "evaluate",
            "--dataset",
            "ds",
            "--method-dir",
            "res/OracleMvdr",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(a.path().join("res2/scores.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 + 1);
}

#[test]
fn config_file_sits_below_flags_and_above_env() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("run.cfg"),
        "seed = 5\nanechoic = true\nmethod = oracle-mvdr\n",
    )
    .unwrap();
    let rir = ["rir", "--source", "1,1,1.5", "--t60", "0.3"];
    let with = |extra: &[&str], env: Option<&str>| {
        let mut args = vec!["--config", "run.cfg", "--out-dir", "o"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&rir);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_beamlab"));
        cmd.current_dir(d.path())
            .env("RUST_LOG", "warn")
            .env_remove("BEAMLAB_SEED")
            .args(&args);
        if let Some(s) = env {
            cmd.env("BEAMLAB_SEED", s);
        }
        let out = cmd.output().unwrap();
        ok(&out);
        resolved(&d.path().join("o"))
    };
    let r = with(&[], None);
    assert_eq!(r["seed"], 5);
    assert_eq!(r["command"]["rir"]["anechoic"], true);
    assert_eq!(with(&["--seed", "7"], None)["seed"], 7);
    assert_eq!(with(&[], Some("9"))["seed"], 5);

    let out = Command::new(env!("CARGO_BIN_EXE_beamlab"))
        .current_dir(d.path())
        .env("BEAMLAB_SEED", "9")
        .args(["--out-dir", "e"])
        .args(rir)
        .output()
        .unwrap();
    ok(&out);
    assert_eq!(resolved(&d.path().join("e"))["seed"], 9);
}

#[test]
fn configuration_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("bad.cfg"), "bogus = 1\n").unwrap();
    let cases: [&[&str]; 5] = [
        &["--config", "bad.cfg", "rir", "--source", "1,1,1"],
        &["--config", "missing.cfg", "rir", "--source", "1,1,1"],
        &["simulate", "--corpus", "nowhere"],
        &["rir", "--source", "1,1"],
        &["beamform", "--dataset", "ds", "--method", "delay-and-sum"],
    ];
    for args in cases {
        let out = beamlab(d.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn rir_writes_audio_and_sidecar() {
    let d = tempfile::tempdir().unwrap();
    ok(&beamlab(
        d.path(),
        &[
            "--out-dir",
            "o",
            "rir",
            "--source",
            "2,1.5,1.5",
            "--anechoic",
            "--name",
            "direct",
        ],
    ));
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("o/direct.json")).unwrap())
            .unwrap();
    assert_eq!(side["schema"], "beamlab.rir/1");
    assert_eq!(
        side["array"]["mic_positions_m"].as_array().unwrap().len(),
        4
    );
    assert!(d.path().join("o/direct.wav").is_file());
}
