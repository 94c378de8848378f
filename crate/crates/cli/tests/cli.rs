// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ptwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ptwave_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptwave"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const KDV: &str = r#"
name = "kdv"
[model]
kind = "fkdv"
mu = 2.0
p = 3
[wave]
speed = 1.0
a = 0.0
[grid]
l = 30.0
n = 256
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn constants_lists_both_quadratic_roots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &KDV.replace("a = 0.0", "a = 1.0"));
    let o = ptwave(&["constants", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("branch 0") && text.contains("branch 1"),
        "{text}"
    );

    let cfg = write(tmp.path(), "z.toml", KDV);
    let text = stdout(&ptwave(&["constants", "--config", &cfg]));
    assert!(text.contains("branch 0: 0.0000000000000000e0"), "{text}");

    let none = write(tmp.path(), "n.toml", &KDV.replace("a = 0.0", "a = -5.0"));
    let o = ptwave(&["constants", "--config", &none]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no real constant solutions"));
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "[model\nkind = ");
    assert_eq!(
        ptwave(&["constants", "--config", &cfg]).status.code(),
        Some(2)
    );
    assert_eq!(ptwave(&["solve"]).status.code(), Some(2));
    assert_eq!(
        ptwave(&["solve", "--preset", "nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn coarse_grid_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &KDV.replace("n = 256", "n = 10"));
    let out = tmp.path().join("out");
    let o = ptwave(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn solve_then_verify_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", KDV);
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = ptwave(&["solve", "--config", &cfg, "--out", out_s, "--mpe", "on"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    let listed: Vec<&str> = manifest
        .lines()
        .find(|l| l.starts_with("files"))
        .unwrap()
        .split('"')
        .skip(1)
        .step_by(2)
        .collect();
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    let mut listed_sorted: Vec<String> = listed.iter().map(|s| s.to_string()).collect();
    listed_sorted.sort();
    assert_eq!(on_disk, listed_sorted);

    assert_eq!(ptwave(&["verify", out_s]).status.code(), Some(0));
    let profile = out.join("profile.csv");
    assert_eq!(
        ptwave(&["verify", "--config", &cfg, profile.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );

    // 1e-3 perturbation of every sample
    let text = fs::read_to_string(&profile).unwrap();
    let mut lines = text.lines();
    let mut noisy = format!("{}\n", lines.next().unwrap());
    for (j, line) in lines.enumerate() {
        let (x, v) = line.split_once(',').unwrap();
        let v: f64 = v.parse().unwrap();
        let bump = if j % 3 == 0 { 1e-3 } else { -1e-3 };
        noisy.push_str(&format!("{x},{:.16e}\n", v + bump));
    }
    let bad = write(tmp.path(), "noisy.csv", &noisy);
    let o = ptwave(&["verify", "--config", &cfg, &bad]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn solve_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", KDV);
    for d in ["a", "b"] {
        let out = tmp.path().join(d);
        let o = ptwave(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["profile.csv", "portrait.csv", "trace.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn non_convergent_run_exits_3_with_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig3");
    let o = ptwave(&["solve", "--preset", "fig3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(!manifest.contains("outcome = \"converged\""));
    assert!(out.join("trace.csv").is_file());
}

#[test]
fn preset_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig1");
    let o = ptwave(&[
        "solve",
        "--preset",
        "fig1",
        "--mpe",
        "off",
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("mpe = false"), "{manifest}");
    assert!(matches!(o.status.code(), Some(0) | Some(3)));

    let o = ptwave(&[
        "solve",
        "--preset",
        "fig1",
        "--branch",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_runs_every_config() {
    let tmp = tempfile::tempdir().unwrap();
    let configs = tmp.path().join("configs");
    fs::create_dir(&configs).unwrap();
    write(&configs, "one.toml", KDV);
    write(&configs, "two.toml", &KDV.replace("l = 30.0", "l = 25.0"));
    let out = tmp.path().join("sweep");
    let args = [
        "sweep",
        configs.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let o = ptwave_env(&args, "PTWAVE_WORKERS", "2");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(out.join("one").join("manifest.toml").is_file());
    assert!(out.join("two").join("manifest.toml").is_file());

    write(&configs, "three.toml", &KDV.replace("n = 256", "n = 10"));
    assert_eq!(ptwave(&args).status.code(), Some(2));
    assert_eq!(
        ptwave_env(&args, "PTWAVE_WORKERS", "zero").status.code(),
        Some(2)
    );
}
