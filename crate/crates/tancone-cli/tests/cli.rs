use std::path::Path;
use std::process::{Command, Output};

fn tancone(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tancone")).args(args).current_dir(dir).output().unwrap()
}

fn header(csv: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key} = ");
    csv.lines().find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
}

#[test]
fn density_sweep_writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = tancone(&["density-sweep", "--example", "flat-disk", "--seed", "5", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/density-sweep.csv")).unwrap();
    assert!(csv.starts_with("# tancone "));
    assert!(csv.lines().any(|l| l.starts_with("# timestamp ")));
    assert_eq!(header(&csv, "seed").as_deref(), Some("5"));
    assert_eq!(header(&csv, "status").as_deref(), Some("pass"));
    assert!(header(&csv, "h").is_some());
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "r,mass,theta,normalized,defect,hopf_mass");
    assert_eq!(body.len(), 1 + 8);
    for row in &body[1..] {
        let normalized: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((normalized - 1.0).abs() < 1e-9);
    }
}

#[test]
fn stdout_when_no_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = tancone(&["mass", "--example", "two-lines", "--levels", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(header(&text, "command").as_deref(), Some("mass"));
    // header, the full-mass row, then one row per scale
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2 + 4);
}

#[test]
fn generated_mesh_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = tancone(&["generate", "--example", "z2-graph", "--h", "0.05", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let mesh = dir.path().join("z2-graph.mesh");
    assert!(std::fs::read_to_string(&mesh).unwrap().starts_with("dim 4\n"));
    let a = tancone(&["mass", "--example", "z2-graph", "--h", "0.05"], dir.path());
    // mesh files carry no example defaults, so the ladder is given
    let b = tancone(&["mass", "--mesh", mesh.to_str().unwrap(), "--r-max", "0.8"], dir.path());
    assert_eq!(b.status.code(), Some(0), "{}", String::from_utf8_lossy(&b.stderr));
    let rows = |o: &Output| -> Vec<String> {
        String::from_utf8_lossy(&o.stdout).lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
    };
    // masses survive the text round trip to printed precision
    assert_eq!(rows(&a), rows(&b));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# sweep\nexample = cusp\nh = 0.04\nlevels = 5\nr_max = 0.3\n").unwrap();
    let out = tancone(&["density-sweep", "--config", "run.cfg", "--levels", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(header(&text, "example").as_deref(), Some("cusp"));
    assert_eq!(header(&text, "levels").as_deref(), Some("4"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // the non-holomorphic graph needs K > 0 in the mass estimate
    std::fs::write(dir.path().join("k0.cfg"), "example = nonholomorphic-graph\nfield = tubular\ntol_k = 0\n").unwrap();
    let out = tancone(&["hopf-mass", "--config", "k0.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(header(&text, "status").as_deref(), Some("fail"));
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["mass", "--example", "no-such-example"][..],
        &["mass", "--example", "cusp", "--ratio", "1.5"],
        &["mass", "--example", "cusp", "--levels", "2"],
        &["jholo-energy", "--example", "cusp"],
        &["mass", "--mesh", "missing.mesh"],
    ] {
        let out = tancone(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    std::fs::write(dir.path().join("bad.cfg"), "example = cusp\nwobble = 3\n").unwrap();
    assert_eq!(tancone(&["mass", "--config", "bad.cfg"], dir.path()).status.code(), Some(1));
}

#[test]
fn map_pipelines_report_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = tancone(&["jholo-rate", "--example", "z1z2", "--theta-hat", "0"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    let col = body[0].split(',').position(|c| c == "gamma").unwrap();
    let gamma: f64 = body[1].split(',').nth(col).unwrap().parse().unwrap();
    assert!((gamma - 4.0).abs() < 0.1, "{gamma}");
}
