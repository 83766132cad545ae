use std::path::Path;
use std::process::Command;

fn isumap(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_isumap")).args(args).output().unwrap()
}

fn run_into(dir: &Path) -> std::process::Output {
    isumap(&[
        "run", "--dataset", "torus", "--n", "250", "--k", "10", "--scheme", "mpi:2", "--seed", "4", "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn run_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let out = run_into(d);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "coords.csv"), read(&b, "coords.csv"));
    assert_eq!(read(&a, "plot.svg"), read(&b, "plot.svg"));
    let report: serde_json::Value = serde_json::from_slice(&read(&a, "report.json")).unwrap();
    assert_eq!(report["config"]["scheme"], "mpi:2");
    assert!(report["stress_history"].as_array().unwrap().len() >= 2);
}

#[test]
fn disconnected_graph_exits_with_census() {
    let tmp = tempfile::tempdir().unwrap();
    let out = isumap(&["run", "--dataset", "two_moons", "--n", "200", "--k", "15", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[100, 100]"), "{err}");
    assert!(!tmp.path().join("coords.csv").exists());

    let ok = isumap(&[
        "run", "--dataset", "two_moons", "--n", "200", "--k", "15", "--on-disconnect", "cap:3", "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(ok.status.success());
}

#[test]
fn invalid_configuration_fails() {
    let out = isumap(&["run", "--k", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k must be at least 1"));
    assert!(!isumap(&["run", "--scheme", "mz:1"]).status.success());
}

#[test]
fn csv_dataset_and_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("pts.csv");
    let mut text = String::from("x,y,param\n");
    for i in 0..40 {
        let a = i as f64 * 0.15;
        text.push_str(&format!("{},{},{a}\n", a.cos(), a.sin()));
    }
    std::fs::write(&csv, text).unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, format!("k = 4\nscheme = \"h\"\n[dataset]\nkind = \"csv\"\nn = 40\npath = {:?}\n", csv)).unwrap();
    let out_dir = tmp.path().join("out");
    let out = isumap(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let coords = std::fs::read_to_string(out_dir.join("coords.csv")).unwrap();
    assert_eq!(coords.lines().count(), 41);
    let svg = std::fs::read_to_string(out_dir.join("plot.svg")).unwrap();
    assert!(!svg.contains("#808080"));
}

#[test]
fn sweep_writes_gallery() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("sweep.toml");
    std::fs::write(&spec, "schemes = [\"mw\", \"mpi\"]\nparams = [2.0, 5.0, 10.0]\nworkers = 2\n").unwrap();
    let out = isumap(&[
        "sweep", "--sweep-spec", spec.to_str().unwrap(), "--dataset", "two_moons", "--n", "120", "--k", "8",
        "--on-disconnect", "cap", "--out", tmp.path().join("g").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let md = std::fs::read_to_string(tmp.path().join("g/gallery.md")).unwrap();
    assert_eq!(md.matches("plot.svg").count(), 6);
    assert!(md.starts_with("| scheme | 2 | 5 | 10 |"));
    for cell in ["mw_2", "mw_5", "mw_10", "mpi_2", "mpi_5", "mpi_10"] {
        assert!(tmp.path().join("g").join(cell).join("plot.svg").exists(), "{cell}");
    }
}
