use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

fn rdlz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdlz"))
        .args(args)
        .env_remove("RDLZ_WORKERS")
        .output()
        .expect("spawn rdlz")
}

fn ok(args: &[&str]) -> String {
    let out = rdlz(args);
    assert!(
        out.status.success(),
        "rdlz {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn keys(stdout: &str) -> HashMap<String, String> {
    stdout
        .split_whitespace()
        .filter_map(|t| t.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn h(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn curve_rows(csv: &str) -> Vec<(f64, f64)> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("d,rate,slope"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect()
}

#[test]
fn rd_curve_rows_decrease() {
    let rows = curve_rows(&ok(&[
        "rd-curve", "--source", "bern:0.4", "--dist", "hamming", "--points", "50",
    ]));
    assert_eq!(rows.len(), 50);
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn rd_curve_endpoints_and_closed_form() {
    let rows = curve_rows(&ok(&[
        "rd-curve",
        "--source",
        "uniform:4",
        "--points",
        "200",
    ]));
    let (d0, r0) = rows[0];
    let (d1, r1) = rows[rows.len() - 1];
    assert!(r0 > 1.9 && r0 < 2.0, "{d0} {r0}");
    assert!(r1 < 1e-3 && (0.75 - d1) < 0.01, "{d1} {r1}");

    let rows = curve_rows(&ok(&["rd-curve", "--source", "bern:0.4", "--points", "3"]));
    let (d, r) = rows[0];
    assert_eq!(d, 0.1);
    assert!((r - (h(0.4) - h(0.1))).abs() < 1e-6);
}

#[test]
fn rd_curve_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.csv");
    let k = keys(&ok(&[
        "rd-curve",
        "--points",
        "5",
        "--out",
        p.to_str().unwrap(),
    ]));
    assert_eq!(k["points"], "5");
    assert_eq!(k["d_max"], "0.4");
    assert_eq!(curve_rows(&std::fs::read_to_string(&p).unwrap()).len(), 5);
}

#[test]
fn encode_hyb_headline_rate() {
    let k = keys(&ok(&[
        "encode",
        "--codec",
        "hyb",
        "--source",
        "bern:0.4",
        "--D",
        "0.05",
        "--n",
        "1050",
        "--heuristic",
    ]));
    assert_eq!(k["rate"], "0.700952");
    assert_eq!(k["ell"], "33");
    assert_eq!(k["total_bits"], "736");
}

fn write_message(path: &Path, n: usize) -> Vec<u8> {
    // Deterministic Bern(0.4)-ish pattern without a library dependency.
    let x: Vec<u8> = (0..n).map(|i| ((i * 7919 + i / 3) % 5 < 2) as u8).collect();
    let text: String = x.iter().map(|s| format!("{s}\n")).collect();
    std::fs::write(path, text).unwrap();
    x
}

#[test]
fn encode_decode_roundtrip_all_codecs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.txt");
    let x = write_message(&input, 1050);
    for codec in ["gvw", "llz", "hyb"] {
        let c = dir.path().join(format!("{codec}.rdc"));
        let y = dir.path().join(format!("{codec}.txt"));
        let enc = keys(&ok(&[
            "encode",
            "--codec",
            codec,
            "--D",
            "0.2",
            "--ell",
            "14",
            "--input",
            input.to_str().unwrap(),
            "--output",
            c.to_str().unwrap(),
        ]));
        let dec = keys(&ok(&[
            "decode",
            "--input",
            c.to_str().unwrap(),
            "--output",
            y.to_str().unwrap(),
            "--original",
            input.to_str().unwrap(),
        ]));
        assert_eq!(enc["distortion"], dec["distortion"], "{codec}");
        assert_eq!(enc["total_bits"], dec["total_bits"], "{codec}");
        let yv: Vec<u8> = std::fs::read_to_string(&y)
            .unwrap()
            .lines()
            .map(|l| l.parse().unwrap())
            .collect();
        let mism = x.iter().zip(&yv).filter(|(a, b)| a != b).count();
        let external = format!("{:.6}", mism as f64 / x.len() as f64);
        assert_eq!(enc["distortion"], external, "{codec}");
    }
}

#[test]
fn packed_symbol_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.bin");
    std::fs::write(&input, [0b1011_0001u8, 0b0110_1110, 0b1100_0000]).unwrap();
    let c = dir.path().join("c.rdc");
    let y = dir.path().join("y.bin");
    let enc = keys(&ok(&[
        "encode",
        "--codec",
        "llz",
        "--D",
        "0.2",
        "--ell",
        "8",
        "--packed",
        "--n",
        "20",
        "--input",
        input.to_str().unwrap(),
        "--output",
        c.to_str().unwrap(),
    ]));
    assert_eq!(enc["n"], "20");
    ok(&[
        "decode",
        "--input",
        c.to_str().unwrap(),
        "--output",
        y.to_str().unwrap(),
        "--packed",
    ]);
    assert_eq!(std::fs::read(&y).unwrap().len(), 3);
}

#[test]
fn wrong_seed_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.rdc");
    ok(&[
        "encode",
        "--codec",
        "hyb",
        "--D",
        "0.2",
        "--ell",
        "12",
        "--n",
        "100",
        "--seed",
        "9",
        "--output",
        c.to_str().unwrap(),
    ]);
    let out = rdlz(&["decode", "--input", c.to_str().unwrap(), "--seed", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match stored"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk");
    std::fs::write(&junk, b"RDC1 nonsense").unwrap();
    assert_eq!(
        rdlz(&["decode", "--input", junk.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let missing = dir.path().join("missing");
    assert_eq!(
        rdlz(&["decode", "--input", missing.to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        rdlz(&["encode", "--codec", "gvw", "--D", "0.1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(rdlz(&["bogus"]).status.code(), Some(2));
    assert_eq!(
        rdlz(&["rd-curve", "--source", "bern:2"]).status.code(),
        Some(2)
    );
}

#[test]
fn params_gvw_report() {
    let k = keys(&ok(&[
        "params", "--codec", "gvw", "--source", "bern:0.4", "--D", "0.05",
    ]));
    assert_eq!(k["ell"], "33");
    assert_eq!(k["B"], "23");
    let w: u64 = k["W"].parse().unwrap();
    assert_eq!(k["memory_symbols"], (33 * w).to_string());
}

#[test]
fn params_bound_constants() {
    let k = keys(&ok(&[
        "params",
        "--theorem2",
        "--D",
        "0.2",
        "--gamma",
        "0.01",
        "--eps",
        "0.001",
    ]));
    for key in ["t2_k", "t2_c", "t2_gamma_hat", "t2_eps_hat", "t2_ell"] {
        assert!(k.contains_key(key), "{key}");
    }
    let k = keys(&ok(&[
        "params",
        "--theorem3",
        "--D",
        "0.2",
        "--g",
        "1e6",
        "--c",
        "0.01",
    ]));
    assert!(k["t3_ell"].parse::<u64>().unwrap() >= 1);
}

#[test]
fn params_rejects_d_at_dmax() {
    let out = rdlz(&["params", "--codec", "hyb", "--D", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0.4"));
}

#[test]
fn bench_empty_grid_is_usage_error() {
    assert_eq!(rdlz(&["bench", "--codecs", "hyb"]).status.code(), Some(2));
    assert_eq!(rdlz(&["bench"]).status.code(), Some(2));
    assert_eq!(
        rdlz(&["bench", "--scenario", "table9"]).status.code(),
        Some(2)
    );
}

#[test]
fn bench_custom_grid_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    let plot = dir.path().join("g.dat");
    let k = keys(&ok(&[
        "bench",
        "--codecs",
        "gvw,llz,hyb",
        "--targets",
        "0.2,0.3",
        "--ell",
        "12",
        "--n",
        "120",
        "--seeds",
        "3",
        "--csv",
        csv.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
        "--curve-points",
        "10",
        "--workers",
        "1",
    ]));
    assert_eq!(k["records"], "6");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("codec,d_target,d_bar,ell,seeds,"));
    assert_eq!(text.lines().count(), 7);
    let plot = std::fs::read_to_string(&plot).unwrap();
    assert!(plot.starts_with("# curve\n"));
    assert!(plot.contains("\n# scatter\n"));

    // Same flags, same bytes (timing columns aside).
    let again = ok(&[
        "bench",
        "--codecs",
        "gvw,llz,hyb",
        "--targets",
        "0.2,0.3",
        "--ell",
        "12",
        "--n",
        "120",
        "--seeds",
        "3",
    ]);
    let strip = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&again), strip(&text));
}
