use std::path::Path;
use std::process::Command;

use sts_core::assemblage::Assemblage;
use sts_core::quantum::{trace, ComplexMatrix};

fn sts(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sts")).args(args).output().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn only_file(dir: &Path, suffix: &str) -> std::path::PathBuf {
    let mut hits: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    assert_eq!(hits.len(), 1, "{suffix}: {hits:?}");
    hits.pop().unwrap()
}

#[test]
fn presets_are_listed() {
    let out = sts(&["presets", "list"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "fig2\nfig4\nbell-fixture\n");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = sts_cli::presets::preset_text("bell-fixture").unwrap();
    std::fs::write(&bad, format!("{text}\nmystery = 3\n")).unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(sts(&["run", "--config", bad.to_str().unwrap(), "--out", out]).status.code(), Some(2));
    std::fs::write(&bad, text.replace("start = 0.0", "start = 0.5")).unwrap();
    assert_eq!(sts(&["run", "--config", bad.to_str().unwrap(), "--out", out]).status.code(), Some(2));
    std::fs::write(&bad, text.replace("targets = [2]", "targets = [5]")).unwrap();
    assert_eq!(sts(&["run", "--config", bad.to_str().unwrap(), "--out", out]).status.code(), Some(2));
    assert_eq!(sts(&["run", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(sts(&["run", "--preset", "fig9"]).status.code(), Some(2));
    assert_eq!(sts(&["run"]).status.code(), Some(2));
    assert_eq!(sts(&["run", "--preset", "fig2", "--workers", "0"]).status.code(), Some(2));
}

#[test]
fn bell_fixture_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = sts(&["run", "--preset", "bell-fixture", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for (measure, want) in [("weight", 1.0), ("robustness", 2.0 - 3f64.sqrt())] {
        let text = read(&dir.path().join(format!("bell-fixture_target-2_{measure}.csv")));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,value,solver_gap,status");
        assert_eq!(lines.len(), 2);
        let cols: Vec<&str> = lines[1].split(',').collect();
        let value: f64 = cols[1].parse().unwrap();
        assert!((value - want).abs() < 1e-7, "{measure}: {value}");
        assert_eq!(cols[3], "optimal");
    }
    let meta = read(&dir.path().join("bell-fixture.meta.toml"));
    assert!(meta.contains("vanishing = 0.001"));
    assert!(meta.contains("reporting = 0.0000001"));
    assert!(meta.contains("version = "));
}

#[test]
fn bell_export_has_six_normalized_members() {
    let dir = tempfile::tempdir().unwrap();
    let out = sts(&["export", "--preset", "bell-fixture", "--time", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let asm = Assemblage::from_text(&read(&only_file(dir.path(), ".asm"))).unwrap();
    assert_eq!(asm.members().len(), 6);
    for x in 0..3 {
        let total: f64 = (0..2).map(|a| trace(asm.member(x, a)).re).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(asm.member(x, 0).shape(), (2, 2));
    }
    only_file(dir.path(), "_weight.dat-s");
    only_file(dir.path(), "_robustness.dat-s");
}

#[test]
fn chain_export_at_zero_is_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chain.toml");
    let text = sts_cli::presets::preset_text("fig2")
        .unwrap()
        .replace("gamma = [0.01, 1.0, 20.0]", "gamma = [0.01]");
    std::fs::write(&cfg, text).unwrap();
    let out = sts(&["export", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let asm = Assemblage::from_text(&read(&only_file(dir.path(), ".asm"))).unwrap();
    for m in asm.members() {
        let p = trace(m).re;
        let mut ground = ComplexMatrix::zeros(2, 2);
        ground[(0, 0)] = sts_core::quantum::c(p, 0.0);
        assert!(sts_core::quantum::max_abs_diff(m, &ground) < 1e-12);
    }
}

#[test]
fn fmo_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = sts(&["export", "--preset", "fig4", "--time", "0.1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let mut n = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "asm") {
            let text = read(&path);
            assert_eq!(Assemblage::from_text(&text).unwrap().to_text(), text);
            n += 1;
        }
    }
    assert_eq!(n, 6);
}

#[test]
fn fig2_starts_unsteerable_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(sts(&["run", "--preset", "fig2", "--workers", "1", "--out", a.path().to_str().unwrap()]).status.success());
    assert!(sts(&["run", "--preset", "fig2", "--workers", "2", "--out", b.path().to_str().unwrap()]).status.success());
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for name in names {
        let text = read(&a.path().join(&name));
        assert_eq!(text, read(&b.path().join(&name)), "{name:?}");
        if name.to_string_lossy().ends_with(".csv") {
            let first: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
            assert!(first <= 1e-7);
            assert_eq!(text.lines().count(), 202);
        }
    }
}

#[test]
fn full_space_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let text = sts_cli::presets::preset_text("fig2")
        .unwrap()
        .replace("gamma = [0.01, 1.0, 20.0]", "gamma = [1.0]")
        .replace("stop = 10.0", "stop = 1.0")
        .replace("step = 0.05", "step = 0.5");
    std::fs::write(&cfg, &text).unwrap();
    let run = |flag: Option<&str>, sub: &str| {
        let out = dir.path().join(sub);
        let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend(flag);
        assert!(sts(&args).status.success());
        out
    };
    let reduced = run(None, "r");
    let full = run(Some("--full-space"), "f");
    assert!(read(&full.join("fig2.meta.toml")).contains("reduced_effective = false"));
    assert!(read(&reduced.join("fig2.meta.toml")).contains("reduced_effective = true"));
    let values = |dir: &Path| -> Vec<f64> {
        read(&dir.join("fig2_gamma-1_target-3_weight.csv"))
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    for (r, f) in values(&reduced).iter().zip(values(&full)) {
        assert!((r - f).abs() < 1e-7);
    }
}

#[test]
fn custom_network_with_temporal_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("net.toml");
    std::fs::write(
        &cfg,
        r#"
name = "net"
scenario = "custom"
measured = 1
targets = [4, 1]
measures = ["weight"]
[grid]
start = 0.0
stop = 1.0
step = 0.5
units = "1/J"
[custom]
sites = 4
couplings = [{ a = 1, b = 2, j = 1.0 }, { a = 2, b = 3, j = 0.5 }, { a = 3, b = 4, j = 1.0 }]
dephasing = [{ site = 2, rate = 0.1 }]
initial = [1, 0, 0, 0]
"#,
    )
    .unwrap();
    let out = sts(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for k in [1, 4] {
        let text = read(&dir.path().join(format!("net_target-{k}_weight.csv")));
        assert_eq!(text.lines().count(), 4);
    }
    // a measured excitation sits on site 1 at t = 0, so its temporal
    // assemblage starts out steerable while site 4 starts empty
    let first = |k: usize| -> f64 {
        read(&dir.path().join(format!("net_target-{k}_weight.csv")))
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(first(4), 0.0);
    assert!(read(&dir.path().join("net.meta.toml")).contains("reduced_effective = true"));
    assert!(first(1) > 0.5);
}
