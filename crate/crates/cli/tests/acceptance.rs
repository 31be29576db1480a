//! Acceptance: reruns of the runner on the shipped configs are
//! byte-identical.

use std::path::{Path, PathBuf};
use std::process::Command;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("piblab-acc-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_piblab"))
        .args(args)
        .status()
        .expect("runner starts");
    assert!(status.success(), "command {args:?} failed");
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn criterion_9_reruns_are_byte_identical() {
    let demo = configs_dir().join("demo.json");
    let coin = configs_dir().join("coin.json");
    let demo = demo.to_str().unwrap();
    let coin = coin.to_str().unwrap();

    let a = scratch("a");
    let b = scratch("b");
    for out in [&a, &b] {
        let out = out.to_str().unwrap();
        run(&["sweep", "--config", demo, "--out", out]);
        run(&["verify", "--config", demo, "--out", out]);
        run(&["estimate", "--config", coin, "--out", out]);
    }

    let mut identical = true;
    let mut detail = String::new();
    for name in [
        "sweep.csv",
        "kkt.json",
        "verify_report.json",
        "estimate.json",
    ] {
        let same = read(&a, name) == read(&b, name);
        identical &= same;
        detail.push_str(&format!(
            "{name}: {}; ",
            if same { "identical" } else { "DIFFERS" }
        ));
    }

    println!(
        "ACCEPTANCE 9 determinism: {} ({})",
        if identical { "PASS" } else { "FAIL" },
        detail.trim_end()
    );
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);
    assert!(identical, "outputs differ between reruns");
}
