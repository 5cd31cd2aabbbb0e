use std::path::Path;
use std::process::{Command, Output};

fn dicke(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke")).args(args).env("DICKE_THREADS", threads).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn small_scan(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("scan.toml");
    std::fs::write(
        &cfg,
        "[model]\nzeeman = \"K3\"\n[drive]\nratio = 0.4\n[scan]\nx_range = [0.5, 1.6]\nnx = 14\nnu_range = [0.8, 2.4]\nny = 16\n",
    )
    .unwrap();
    cfg
}

#[test]
fn scan_writes_headed_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_scan(dir.path());
    let out = dir.path().join("out");
    let run = dicke(&["scan", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()], "1");
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(header(&out.join("phase_map.csv")), "x,nu,phase,xi,energy");
    assert_eq!(header(&out.join("boundaries.csv")), "x,nu,kind,order");
    let text = std::fs::read_to_string(out.join("phase_map.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 14 * 16);
    assert!(!text.contains('\r'));
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_scan(dir.path());
    let mut files = Vec::new();
    for threads in ["1", "2", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let run = dicke(&["scan", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()], threads);
        assert_eq!(code(&run), 0);
        files.push((std::fs::read(out.join("phase_map.csv")).unwrap(), std::fs::read(out.join("boundaries.csv")).unwrap()));
    }
    assert!(files.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn qcp_for_three_cavities() {
    let dir = tempfile::tempdir().unwrap();
    let run = dicke(&["qcp", "--zeeman", "-1,0,1", "--output", dir.path().to_str().unwrap()], "1");
    assert_eq!(code(&run), 0);
    let text = std::fs::read_to_string(dir.path().join("critical.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "kind,x,nu,uncertainty,residuals");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("QCP,0.7153"));
}

#[test]
fn fit_reads_a_curve() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("xi_curve.csv");
    let mut text = String::from("nu,xi\n");
    for i in 0..60 {
        let t = 10f64.powf(-6.0 + 4.0 * i as f64 / 59.0);
        text.push_str(&format!("{:?},{:?}\n", 2.0 + t, 0.8 * t.sqrt()));
    }
    std::fs::write(&input, text).unwrap();
    let out = dir.path().to_str().unwrap();
    let run = dicke(&["fit", "--input", input.to_str().unwrap(), "--nu-c-hint", "2.0", "--output", out], "1");
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(dir.path().join("fit.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gamma,gamma_err,nu_c,r2"));
    let gamma: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((gamma - 0.5).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&dicke(&["--help"], "1")), 0);
    assert_eq!(code(&dicke(&["--version"], "1")), 0);
    assert_eq!(code(&dicke(&[], "1")), 2);
    assert_eq!(code(&dicke(&["frobnicate"], "1")), 2);
    assert_eq!(code(&dicke(&["scan", "--nx", "many"], "1")), 2);
    assert_eq!(code(&dicke(&["scan", "--nx", "1", "--output", out], "1")), 2);
    assert_eq!(code(&dicke(&["qcp", "--zeeman", "K9", "--output", out], "1")), 2);
    assert_eq!(code(&dicke(&["texture", "--delta", "-1", "--output", out], "1")), 2);
    assert_eq!(code(&dicke(&["scan", "--config", "/nonexistent.toml"], "1")), 2);
    assert_eq!(code(&dicke(&["scan", "--nx", "4", "--ny", "4", "--output", out], "zero")), 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scan]\nwidth = 3\n").unwrap();
    assert_eq!(code(&dicke(&["scan", "--config", bad.to_str().unwrap()], "1")), 2);
    // a valid request the computation cannot satisfy
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "nu,xi\n2.1,0.3\n2.2,0.4\n").unwrap();
    let run = dicke(&["fit", "--input", short.to_str().unwrap(), "--nu-c-hint", "2", "--output", out], "1");
    assert_eq!(code(&run), 1);
    assert!(!run.stderr.is_empty());
}

#[test]
fn texture_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = dicke(&["texture", "--zeeman", "K3", "--delta", "1", "--nu", "0.5", "--output", out], "1");
    assert_eq!(code(&run), 0);
    let text = std::fs::read_to_string(dir.path().join("texture.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "delta,nu,ratio,xi,m_1,m_2,m_3,order");
    assert!(rows[1].ends_with(",AFM"));
}
