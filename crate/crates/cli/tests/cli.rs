use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn augmetric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_augmetric"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pgm(path: &Path, w: usize, h: usize, px: &[u8]) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(px);
    fs::write(path, bytes).unwrap();
}

const PLAN: &str = "kind = fid\nincrements = 99\ndatasets = a, b, c, d\nsamples_per_point = 30\nseed = 1\n\
dataset.a.fid = 13\ndataset.b.fid = 40\ndataset.c.fid = 100\ndataset.d.fid = 260\n";

fn simulate(dir: &Path) -> std::path::PathBuf {
    let plan = dir.join("plan.cfg");
    fs::write(&plan, PLAN).unwrap();
    let samples = dir.join("samples.csv");
    let o = augmetric(&[
        "simulate", "--plan", s(&plan), "--family", "h", "--params", "A=0.057,mu=4.552,sigma=0.467",
        "--dsc0", "0.5", "--noise", "0.016", "--seed", "3", "--out", s(&samples),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    samples
}

#[test]
fn dsc_two_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let (p, t) = (dir.path().join("p.pgm"), dir.path().join("t.pgm"));
    pgm(&p, 2, 2, &[255, 255, 0, 0]);
    pgm(&t, 2, 2, &[255, 0, 0, 0]);
    let o = augmetric(&["dsc", "--pred", s(&p), "--truth", s(&t)]);
    assert!(o.status.success());
    let out = stdout(&o);
    let v: f64 = out.lines().next().unwrap().strip_prefix("avg_dsc=").unwrap().parse().unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn dsc_all_empty_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (p, t) = (dir.path().join("p.pgm"), dir.path().join("t.pgm"));
    pgm(&p, 2, 1, &[0, 0]);
    pgm(&t, 2, 1, &[0, 0]);
    let o = augmetric(&["dsc", "--pred", s(&p), "--truth", s(&t)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn pack_unpack_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    pgm(&d.join("scan.pgm"), 3, 1, &[10, 200, 30]);
    pgm(&d.join("mask.pgm"), 3, 1, &[0, 255, 255]);
    let o = augmetric(&[
        "pack", "--scan", s(&d.join("scan.pgm")), "--mask", s(&d.join("mask.pgm")), "--out", s(&d.join("p.ppm")),
    ]);
    assert!(o.status.success());
    let ppm = fs::read(d.join("p.ppm")).unwrap();
    assert_eq!(&ppm[ppm.len() - 9..], &[10, 0, 0, 200, 128, 0, 30, 128, 0]);
    let o = augmetric(&[
        "unpack", "--in", s(&d.join("p.ppm")), "--scan", s(&d.join("s2.pgm")), "--mask", s(&d.join("m2.pgm")),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(d.join("scan.pgm")).unwrap(), fs::read(d.join("s2.pgm")).unwrap());
    assert_eq!(fs::read(d.join("mask.pgm")).unwrap(), fs::read(d.join("m2.pgm")).unwrap());
}

#[test]
fn augment_then_fid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut manifest = String::from("augmetric-manifest v1\n# id: src\n");
    for i in 0..6u8 {
        let px: Vec<u8> = (0..64u32).map(|k| ((k * 7 + u32::from(i) * 31) % 256) as u8).collect();
        pgm(&d.join(format!("s{i}.pgm")), 8, 8, &px);
        pgm(&d.join(format!("m{i}.pgm")), 8, 8, &[255; 64]);
        manifest.push_str(&format!("s{i}.pgm\tm{i}.pgm\n"));
    }
    fs::write(d.join("src.txt"), manifest).unwrap();
    let out = d.join("blurred");
    let o = augmetric(&["augment", "--in", s(&d.join("src.txt")), "--spec", "blur:1,2", "--seed", "5", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.txt").exists());
    let o = augmetric(&[
        "fid", "--a", s(&d.join("src.txt")), "--b", s(&out.join("manifest.txt")), "--dim", "4", "--seed", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let fid: f64 = text.lines().next().unwrap().strip_prefix("fid=").unwrap().parse().unwrap();
    assert!(fid > 0.0);
    let same = augmetric(&["fid", "--a", s(&d.join("src.txt")), "--b", s(&d.join("src.txt")), "--dim", "4"]);
    let zero: f64 = stdout(&same).lines().next().unwrap()[4..].parse().unwrap();
    assert!(zero.abs() < 1e-6);
}

#[test]
fn inference_commands() {
    let dir = tempfile::tempdir().unwrap();
    let samples = simulate(dir.path());
    let text = fs::read_to_string(&samples).unwrap();
    assert_eq!(text.lines().count(), 121);
    assert!(text.starts_with("dataset_id,fid,run,avg_dsc\n"));

    let o = augmetric(&["compare", "--samples", s(&samples), "--dsc0", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.starts_with("function,log10_evidence,highlight\n"));
    assert_eq!(table.lines().count(), 5);

    let o = augmetric(&["evidence", "--samples", s(&samples), "--dsc0", "0.5", "--family", "f"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("f,"));

    let o = augmetric(&["fit", "--samples", s(&samples), "--dsc0", "0.5", "--family", "h"]);
    assert!(o.status.success());
    let fit = stdout(&o);
    assert!(fit.starts_with("Curve,A,mu,sigma,log_likelihood\nall,"), "{fit}");

    let out = dir.path().join("report");
    let o = augmetric(&["report", "--samples", s(&samples), "--dsc0", "0.5", "--out", s(&out), "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["comparison_+99.csv", "points_+99.csv", "best_fit.csv", "plot_+99.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let samples = simulate(dir.path());
    // bad flag
    assert_eq!(augmetric(&["compare", "--nope"]).status.code(), Some(2));
    // baseline out of range
    assert_eq!(augmetric(&["compare", "--samples", s(&samples), "--dsc0", "1.5"]).status.code(), Some(2));
    // missing file
    let missing = dir.path().join("none.csv");
    assert_eq!(augmetric(&["compare", "--samples", s(&missing), "--dsc0", "0.5"]).status.code(), Some(3));
    // malformed record
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "dataset_id,fid,run,avg_dsc\na,10,0,1.2\n").unwrap();
    let o = augmetric(&["compare", "--samples", s(&bad), "--dsc0", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    // zero spread with the floor disabled
    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "dataset_id,fid,run,avg_dsc\na,10,0,0.5\na,10,1,0.5\n").unwrap();
    let o = augmetric(&["compare", "--samples", s(&flat), "--dsc0", "0.5", "--jitter-floor", "0"]);
    assert_eq!(o.status.code(), Some(4));
    // bad plan line
    let plan = dir.path().join("bad.cfg");
    fs::write(&plan, "kind = fid\nincrements = 50, 25\ndatasets = a\n").unwrap();
    let o = augmetric(&[
        "simulate", "--plan", s(&plan), "--family", "f", "--params", "c=0.1", "--dsc0", "0.5", "--noise", "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn simulate_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.cfg");
    fs::write(&plan, PLAN).unwrap();
    let run = |w: &str| {
        stdout(&augmetric(&[
            "--workers", w, "simulate", "--plan", s(&plan), "--family", "h", "--params",
            "h(A=0.057,mu=4.552,sigma=0.467)", "--dsc0", "0.5", "--noise", "0.016", "--seed", "8",
        ]))
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
}
