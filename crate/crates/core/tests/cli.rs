use std::path::Path;
use std::process::{Command, Output};

fn gdarb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdarb")).args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn column(csv: &str, row: usize, name: &str) -> String {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().nth(row).unwrap().unwrap()[idx].to_string()
}

#[test]
fn analyze_reflected_black_scholes_without_stickiness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gdarb(&[
        "analyze",
        "--example",
        "black-scholes-reflected",
        "--param",
        "r=0",
        "--param",
        "m1=0",
        "--out",
        out,
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read(dir.path(), "verdicts.csv");
    assert_eq!(column(&v, 0, "nip"), "false");
    assert_eq!(column(&v, 0, "qvip"), "false");
    assert_eq!(column(&v, 0, "rp"), "true");
    let nu = read(dir.path(), "nu_report.csv");
    assert_eq!(column(&nu, 0, "component"), "atom");
    assert_eq!(column(&nu, 0, "mass").parse::<f64>().unwrap(), 0.5);
}

#[test]
fn demo_skew_passes() {
    let o = gdarb(&["demo", "bachelier-skew", "--kappa", "0.75", "--paths", "400", "--h", "0.02", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["backtest", "--example", "bachelier-skew", "--paths", "0", "--out", out],
        vec!["analyze", "--example", "no-such-model", "--out", out],
        vec!["analyze", "--example", "bachelier-skew", "--param", "kappa=1.5", "--out", out],
        vec!["frobnicate"],
        vec!["analyze", "--model", "/nonexistent/model.toml", "--out", out],
    ] {
        assert_eq!(gdarb(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let run = |dir: &Path| {
        let out = dir.to_str().unwrap();
        let o = gdarb(&[
            "backtest",
            "--example",
            "bachelier-sticky",
            "--paths",
            "200",
            "--h",
            "0.02",
            "--seed",
            "9",
            "--out",
            out,
            "--quiet",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let o = gdarb(&[
            "simulate",
            "--example",
            "bachelier-sticky",
            "--paths",
            "3",
            "--h",
            "0.05",
            "--seed",
            "9",
            "--out",
            out,
            "--quiet",
        ]);
        assert_eq!(o.status.code(), Some(0));
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    for name in ["ip_report.csv", "value_series.csv", "paths.csv"] {
        let text = read(a.path(), name);
        assert_eq!(text, read(b.path(), name), "{name}");
        assert!(text.lines().next().unwrap().chars().all(|c| !c.is_ascii_digit() || c == '_'), "{name} lacks a header");
    }
    assert_eq!(column(&read(a.path(), "ip_report.csv"), 0, "verdict"), "increasing_profit");
    assert_eq!(read(a.path(), "value_series.csv").lines().next().unwrap(), "path_id,strategy,t,value,route");
    assert_eq!(read(a.path(), "paths.csv").lines().next().unwrap(), "path_id,t,u,absorbed");
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("sticky.toml");
    std::fs::write(
        &model,
        r#"
[parameters]
xi = 2.0
rho = 3.0

[state_space]
left = "-inf"
right = "inf"

[scale]
segments = [{ from = "-inf", to = "inf", kind = "affine", slope = 1 }]

[speed]
density = [{ from = "-inf", to = "inf", kind = "constant", value = 1 }]
atoms = [{ at = "xi", mass = "rho" }]

[market]
start = 1.5
rate = 0.05
"#,
    )
    .unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gdarb(&["analyze", "--model", model.to_str().unwrap(), "--out", out, "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let nu = read(dir.path(), "nu_report.csv");
    assert!((column(&nu, 0, "mass").parse::<f64>().unwrap() + 0.3).abs() < 1e-15);
    assert_eq!(column(&nu, 0, "lo").parse::<f64>().unwrap(), 2.0);

    std::fs::write(&model, std::fs::read_to_string(&model).unwrap().replace("rho = 3.0", "rho = -3.0")).unwrap();
    let o = gdarb(&["analyze", "--model", model.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sticky.toml:15:") && err.contains("rho"), "{err}");
}

#[test]
fn shipped_models_analyze() {
    let models = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models");
    let expect = [
        ("brownian.toml", "true", None),
        ("sticky.toml", "false", Some(-0.3)),
        ("skew.toml", "false", Some(4.0 / 3.0)),
    ];
    for (file, nip, atom) in expect {
        let dir = tempfile::tempdir().unwrap();
        let o = gdarb(&[
            "analyze",
            "--model",
            models.join(file).to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(o.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(column(&read(dir.path(), "verdicts.csv"), 0, "nip"), nip, "{file}");
        if let Some(mass) = atom {
            let got: f64 = column(&read(dir.path(), "nu_report.csv"), 0, "mass").parse().unwrap();
            assert!((got - mass).abs() < 1e-12, "{file}: {got}");
        }
    }
}
