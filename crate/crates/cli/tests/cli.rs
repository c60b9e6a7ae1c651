use std::path::PathBuf;
use std::process::Command;

fn altmin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_altmin"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("altmin-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn h_curve_runs_and_is_deterministic() {
    let dir = temp_dir("hcurve");
    let run = |out: &str| {
        let status = altmin()
            .args(["h-curve", "--seed", "3", "--out"])
            .arg(dir.join(out))
            .args(["-s", "table_points=17", "-s", "table_samples=20000"])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        std::fs::read(dir.join(out).join("h_table.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    assert!(dir.join("a/manifest.json").exists());
    assert!(dir.join("a/growth_condition.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_usage_exits_2() {
    let out = altmin().arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = altmin()
        .args(["h-curve", "--config", "/nonexistent/config.txt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = altmin().args(["h-curve", "-s", "bogus=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn invalid_value_names_the_field() {
    let out = altmin().args(["recovery", "-s", "recovery_trials=zero"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("recovery_trials"));
}
