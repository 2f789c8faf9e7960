use std::path::PathBuf;
use std::process::{Command, Output};

fn fracwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracwave")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fracwave-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn summary(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("one JSON line on stdout")
}

#[test]
fn check_reports_admissible_reference_states() {
    let out = fracwave(&["check", "--phi-minus", "1", "--phi-plus", "-0.6"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    let flags = s["admissibility"].as_object().unwrap();
    assert_eq!(flags.len(), 4);
    assert!(flags.values().all(|v| v == true), "{s}");
}

#[test]
fn exit_codes() {
    assert_eq!(fracwave(&["solve", "--alpha", "0.9"]).status.code(), Some(2));
    assert_eq!(fracwave(&["solve", "--alpha", "0.9", "--tau", "-1"]).status.code(), Some(2));
    assert_eq!(fracwave(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(fracwave(&["shoot", "--alpha", "0.9", "--phi-minus", "1", "--phi-plus", "-1"]).status.code(), Some(3));
    assert_eq!(fracwave(&["--help"]).status.code(), Some(0));
}

#[test]
fn kernel_table_has_requested_rows() {
    let dir = scratch("kernel");
    let path = dir.join("k.csv");
    let out = fracwave(&[
        "kernel", "--tau", "0.01", "--a", "1", "--alpha", "0.5", "--eta-max", "10", "--points", "100", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("eta,v,v_prime,v_second"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.len() == 4));
    assert_eq!(rows[0], vec![0.0, 1.0, 0.0, -100.0]);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn roots_summary_fields() {
    let out = fracwave(&["roots", "--tau", "1e-6", "--a", "0.28", "--b", "1", "--alpha", "0.9"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert!(s["lambda"].as_f64().unwrap() > 0.0);
    assert!(s["s1_re"].as_f64().unwrap() < 0.0);
    assert!(s["s1_im"].as_f64().unwrap() > 0.0);
    assert!(s["residuals"]["right"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn solve_output_is_byte_identical_across_runs() {
    let dir = scratch("solve");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "alpha=0.9\nphi-minus=1\nphi-plus=-0.6\ntau=0.1\nxi-max=40\nflux=modified\n").unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let path = dir.join(format!("t{i}.csv"));
        let out = fracwave(&["solve", "--config", cfg.to_str().unwrap(), "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let s = summary(&out);
        assert_eq!(s["termination"]["kind"], "ReachedXiMax");
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.pop().unwrap()).unwrap();
    for key in ["# alpha=0.9", "# tau=0.1", "# dx=0.01", "# epsilon=0.0001", "# flux=modified", "# cap-a=1", "# cap-b=-10"] {
        assert!(text.lines().any(|l| l == key), "missing {key}");
    }
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "xi,phi,psi,dalpha,h,energy_residual");
    std::fs::remove_dir_all(dir).unwrap();
}
