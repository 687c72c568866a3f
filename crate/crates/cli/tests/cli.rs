use std::path::Path;
use std::process::{Command, Output};

fn rnp(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnp"))
        .args(args)
        .env("RNP_OUT_DIR", out_root)
        .output()
        .expect("spawn rnp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn deblur_writes_one_csv_per_sketch_size() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rnp(
        &["deblur", "--kernel", "uniform9", "--p", "1", "--q", "1", "--K", "0,100", "--seed", "1", "--n", "32", "--max-iter", "3"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("deblur");
    assert!(dir.join("lam1e-3-k0-s1.csv").exists());
    assert!(dir.join("lam1e-3-k100-s1.csv").exists());
    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(stdout(&o).contains("best_lambda"));
}

#[test]
fn sr_and_ct_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rnp(&["sr", "--factor", "2", "--p", "0.5", "--n", "32", "--K", "0", "--max-iter", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = rnp(
        &["ct", "--reg", "tv", "--K", "0,20", "--n", "32", "--views", "16", "--max-iter", "5"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("ct/lam1e-2-k20-s0.csv").exists());
}

#[test]
fn output_is_reproducible() {
    let run = || {
        let tmp = tempfile::tempdir().unwrap();
        let o = rnp(&["deblur", "--n", "32", "--K", "8", "--seed", "4", "--max-iter", "2"], tmp.path());
        assert_eq!(o.status.code(), Some(0));
        // drop the wall-clock columns
        std::fs::read_to_string(tmp.path().join("deblur/lam1e-3-k8-s4.csv"))
            .unwrap()
            .lines()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{},{}", f[0], f[2], f[3], f[4])
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn bad_arguments_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(rnp(&["deblur", "--kernel", "nope"], tmp.path()).status.code(), Some(2));
    assert_eq!(rnp(&["ct", "--sqrt-tail", "maybe"], tmp.path()).status.code(), Some(2));
    assert_eq!(rnp(&["sr", "--n", "33", "--K", "0"], tmp.path()).status.code(), Some(2));
    assert_eq!(rnp(&["deblur", "--lambda-grid", "-1"], tmp.path()).status.code(), Some(2));
    assert_eq!(rnp(&["frobnicate"], tmp.path()).status.code(), Some(2));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nn = 32\nK = 0\nmax_iter = 2\nname = fromfile\nseed = 9\n").unwrap();
    let o = rnp(&["deblur", "--config", cfg.to_str().unwrap(), "--seed", "3"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("fromfile/lam1e-3-k0-s3.csv").exists());
    assert!(!tmp.path().join("fromfile/lam1e-3-k0-s9.csv").exists());

    std::fs::write(&cfg, "views = 10\n").unwrap();
    let o = rnp(&["deblur", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
}

#[test]
fn diag_prints_kappa_and_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let a = rnp(&["diag", "--seed", "5"], tmp.path());
    assert_eq!(a.status.code(), Some(0));
    let text = stdout(&a);
    assert!(text.contains("median kappa") && text.contains("threshold 28"), "{text}");
    let b = rnp(&["diag", "--seed", "5"], tmp.path());
    assert_eq!(text, stdout(&b));
    let fine = rnp(&["diag", "--identity-grid", "fine"], tmp.path());
    assert!(stdout(&fine).contains("400 radii"));
}

#[test]
fn help_lists_flags_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let text = stdout(&rnp(&["deblur", "--help"], tmp.path()));
    for flag in ["--n", "--p", "--q", "--lambda", "--lambda-grid", "--K", "--seed", "--jobs", "--out", "--tol", "--max-iter", "--sqrt-tail", "--kernel"] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert!(text.contains("[default: 0,100]"));
    assert!(stdout(&rnp(&["ct", "--help"], tmp.path())).contains("--phi"));
}
