use std::path::Path;
use std::process::{Command, Output};

fn attnscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attnscope")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = attnscope(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(attnscope(&["classify", "--bogus"]).status.code(), Some(2));
    assert_eq!(attnscope(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(attnscope(&["bench", "--length", "many"]).status.code(), Some(2));
}

#[test]
fn validation_errors_exit_one_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = attnscope(&["gen-synth", "--kind", "zigzag", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[validation]:"), "{err}");

    ok(&["gen-synth", "--kind", "d,v", "--length", "50", "--count", "2", "--out", s(dir.path())]);
    let report = dir.path().join("r.json");
    ok(&["classify", "--in", s(dir.path()), "--out", s(&report)]);
    let out = attnscope(&["plan", "--report", s(&report), "--strategy", "range:3-9", "--out", s(&dir.path().join("p.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let out = attnscope(&["plan", "--report", s(&report), "--strategy", "sideways", "--out", s(&dir.path().join("p.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outputs_are_hash_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(&["gen-synth", "--kind", "h,d,v+d", "--length", "60", "--count", "5", "--seed", "8", "--out", s(d)]);
        ok(&["classify", "--in", s(d), "--out", s(&d.join("report.json"))]);
        ok(&["plan", "--report", s(&d.join("report.json")), "--strategy", "all-but-first", "--radius", "7", "--out", s(&d.join("plan.json"))]);
        ok(&["render", "--in", s(&d.join("sample_0002.atn")), "--out", s(&d.join("img"))]);
    }
    for f in ["sample_0000.atn", "sample_0004.atn", "report.json", "plan.json", "img/block_01.pgm", "img/block_03.pgm"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let plan = std::fs::read_to_string(a.path().join("plan.json")).unwrap();
    assert!(plan.contains("\"L_B2-3\""), "{plan}");
}

#[test]
fn thresholds_from_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen-synth", "--kind", "d", "--length", "100", "--count", "3", "--out", s(d)]);
    let th = d.join("th.toml");
    std::fs::write(&th, "band_width = 2\n").unwrap();
    let report = d.join("r.json");
    ok(&["classify", "--in", s(d), "--thresholds", s(&th), "--out", s(&report)]);
    assert!(std::fs::read_to_string(&report).unwrap().contains("\"band_width\": 2"));

    std::fs::write(&th, "band_width = 3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_attnscope"))
        .args(["classify", "--in", s(d), "--out", s(&report)])
        .env("ATTNSCOPE_THRESHOLDS", &th)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&report).unwrap().contains("\"band_width\": 3"));

    std::fs::write(&th, "banned_width = 3\n").unwrap();
    let out = attnscope(&["classify", "--in", s(d), "--thresholds", s(&th), "--out", s(&report)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[config]"));
}

#[test]
fn render_identity_like_prototype() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen-synth", "--kind", "d,h", "--length", "50", "--count", "1", "--out", s(d)]);
    let out = ok(&["render", "--in", s(&d.join("sample_0000.atn")), "--block", "2", "--heads", "--out", s(&d.join("img"))]);
    assert!(out.contains("wrote 2 images"));
    let pgm = std::fs::read(d.join("img/block_02.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n50 50\n255\n"));
    assert_eq!(pgm.len(), 13 + 2500);
    assert_eq!(attnscope(&["render", "--in", s(&d.join("sample_0000.atn")), "--block", "3", "--out", s(d)]).status.code(), Some(1));
}

#[test]
fn short_training_extract_and_render_banded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("toy.toml");
    std::fs::write(
        &cfg,
        "[encoder]\nn_blocks = 2\nd_model = 8\nn_heads = 2\nd_ff = 16\nmax_len = 40\n\
         [train]\nsteps = 30\nbatch_size = 2\n\
         [corpus]\nsequences = 8\nlength = 40\nwidth = 8\n",
    )
    .unwrap();
    let plan = d.join("plan.json");
    std::fs::write(
        &plan,
        r#"{"n_blocks":2,"entries":[{"block":1,"kind":"global","radius":null},{"block":2,"kind":"local","radius":3}],"strategy":"range:2-2","name":"L_B2-2"}"#,
    )
    .unwrap();
    let ckpt = d.join("m.ckpt");
    let curves = d.join("c.csv");
    let out = ok(&["train-toy", "--config", s(&cfg), "--plan", s(&plan), "--out", s(&ckpt), "--curves", s(&curves)]);
    assert!(out.starts_with("steps 30"), "{out}");
    assert_eq!(std::fs::read_to_string(&curves).unwrap().lines().count(), 31);

    ok(&["gen-synth", "--kind", "corpus", "--length", "40", "--count", "3", "--width", "8", "--out", s(d)]);
    ok(&["extract", "--ckpt", s(&ckpt), "--input", s(&d.join("corpus.seq")), "--limit", "2", "--out", s(&d.join("dumps"))]);
    assert!(d.join("dumps/seq_0001.atn").exists() && !d.join("dumps/seq_0002.atn").exists());
    ok(&["render", "--in", s(&d.join("dumps/seq_0000.atn")), "--block", "2", "--out", s(&d.join("img"))]);
    let pgm = std::fs::read(d.join("img/block_02.pgm")).unwrap();
    let pixels = &pgm[b"P5\n40 40\n255\n".len()..];
    for q in 0..40usize {
        for k in 0..40usize {
            if q.abs_diff(k) > 3 {
                assert_eq!(pixels[q * 40 + k], 0, "pixel ({q}, {k})");
            }
        }
    }

    let narrow = d.join("narrow");
    ok(&["gen-synth", "--kind", "corpus", "--length", "40", "--count", "2", "--width", "4", "--out", s(&narrow)]);
    let out = attnscope(&["train-toy", "--config", s(&cfg), "--corpus", s(&narrow.join("corpus.seq")), "--out", s(&ckpt)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gradcheck_and_bench_report() {
    let out = ok(&["gradcheck", "--seeds", "2"]);
    assert_eq!(out.lines().filter(|l| l.ends_with(" ok")).count(), 5, "{out}");
    let out = ok(&["bench", "--length", "96", "--radius", "4", "--d-model", "16", "--heads", "2", "--repeats", "2", "--json"]);
    assert!(out.contains("\"ratio\""));
}
