use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn relaxo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaxo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RELAXO_SEED")
        .output()
        .expect("spawn relaxo")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

const SMALL_GRID: &str = "[experiment]\nlambda_min = 1e-6\nlambda_max = 1\nlambda_count = 12\n";

#[test]
fn simulate_is_byte_identical_across_runs() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for d in [&a, &b] {
        let o = relaxo(&["simulate", "--set", "B-LN", "--noise", "0.01", "--seed", "9"], d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["spectrum.csv", "nyquist.csv"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    assert_eq!(read(&a, "spectrum.csv").lines().count(), 82);
    let m = read(&a, "manifest.txt");
    assert!(!m.contains("time"));
    assert!(m.contains("artifact.spectrum.csv = written\n"), "{m}");
    assert!(m.contains("artifact.nyquist.csv = written\n"), "{m}");
    assert!(m.contains("status = ok\n"), "{m}");
}

#[test]
fn table_does_not_depend_on_thread_count() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.ini");
    fs::write(&cfg, SMALL_GRID).unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut dirs = Vec::new();
    for jobs in ["1", "4"] {
        let d = t.path().join(format!("j{jobs}"));
        let o = relaxo(
            &[
                "table", "--config", cfg, "--jobs", jobs, "--set", "A-RQ,C-LN", "--L", "I,L2", "--noise",
                "0.01,0.05", "--realizations", "4", "--matrix", "A3", "--seed", "17",
            ],
            &d,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        dirs.push(d);
    }
    for f in ["stats.csv", "table.txt", "config_echo.ini"] {
        assert_eq!(read(&dirs[0], f), read(&dirs[1], f), "{f}");
    }
    let strip = |d: &Path| read(d, "manifest.txt").lines().filter(|l| !l.starts_with("output_dir")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&dirs[0]), strip(&dirs[1]));
    let stats = read(&dirs[0], "stats.csv");
    assert!(stats.starts_with(
        "simulation,family,resolution,method,regularizer,criterion,noise,mean,std,n_kept,n_failed\n"
    ));
    assert_eq!(stats.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn seed_env_is_used_and_flag_wins() {
    let t = tempfile::tempdir().unwrap();
    let run = |dir: &str, env: Option<&str>, flag: Option<&str>| {
        let d = t.path().join(dir);
        let mut c = Command::new(env!("CARGO_BIN_EXE_relaxo"));
        c.args(["simulate", "--set", "A-RQ", "--noise", "0.01", "--out"]).arg(&d);
        c.env_remove("RELAXO_SEED");
        if let Some(e) = env {
            c.env("RELAXO_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        assert!(c.output().unwrap().status.success());
        read(&d, "spectrum.csv")
    };
    let env7 = run("e7", Some("7"), None);
    let flag7 = run("f7", None, Some("7"));
    let env8_flag7 = run("e8f7", Some("8"), Some("7"));
    let env8 = run("e8", Some("8"), None);
    assert_eq!(env7, flag7);
    assert_eq!(env8_flag7, flag7);
    assert_ne!(env8, env7);
}

#[test]
fn flags_override_config_file() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("run.ini");
    fs::write(&cfg, format!("{SMALL_GRID}seed = 3\nrows = nnls-as:L1\n\n[model]\nprocess = rq 0.1 0.72 1\n")).unwrap();
    let d = t.path().join("o");
    let o = relaxo(
        &["invert", "--config", cfg.to_str().unwrap(), "--noise", "0.001", "--L", "L2", "--matrix", "A3"],
        &d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read(&d, "manifest.txt");
    assert!(m.contains("regularizer = L2\n"), "{m}");
    assert!(m.contains("seed = 3\n"), "{m}");
    assert!(m.contains("lambda_grid = 12 values\n"), "{m}");
    assert_eq!(fs::read(&cfg).unwrap(), fs::read(d.join("config_echo.ini")).unwrap());
    assert!(m.contains("artifact.config_echo.ini = written\n"), "{m}");
    assert_eq!(read(&d, "sweep.csv").lines().count(), 13);
    assert_eq!(read(&d, "solution.csv").lines().count(), 1 + 101);
}

#[test]
fn invert_reads_a_written_spectrum() {
    let t = tempfile::tempdir().unwrap();
    let s = t.path().join("s");
    assert!(relaxo(&["simulate", "--set", "A-LN", "--noise", "0.001", "--seed", "1"], &s).status.success());
    let spec = s.join("spectrum.csv");
    let i = t.path().join("i");
    let o = relaxo(&["invert", spec.to_str().unwrap(), "--criterion", "ncp", "--matrix", "A3"], &i);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sel = read(&i, "selection.csv");
    assert!(sel.starts_with("criterion,lambda,"));
    assert!(sel.lines().nth(1).unwrap().starts_with("ncp,"));
    let f = t.path().join("f");
    let o = relaxo(&["invert", spec.to_str().unwrap(), "--lambda", "1e-3", "--matrix", "A3"], &f);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&f, "sweep.csv").lines().count(), 2);
    assert!(read(&f, "selection.csv").lines().nth(1).unwrap().starts_with("fixed,1.0000000000000000e-3,"));
    let p = t.path().join("p");
    assert!(relaxo(&["peaks", spec.to_str().unwrap()], &p).status.success());
    assert_eq!(read(&p, "peaks.csv").lines().count(), 2);
}

#[test]
fn peaks_and_fit() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path().join("p");
    assert!(relaxo(&["peaks", "--set", "C-RQ"], &p).status.success());
    assert_eq!(read(&p, "peaks.csv").lines().next(), Some("omega,t_star"));
    let f = t.path().join("f");
    let o = relaxo(&["fit", "--process", "rq 0.1 0.72 1", "--realizations", "3"], &f);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = read(&f, "fit_report.csv");
    assert!(rep.starts_with("family,noise_log10,param_name,true,mean_fit,std_fit,n\n"));
    assert_eq!(rep.lines().count(), 1 + 5 * 3);
}

#[test]
fn usage_and_config_errors_exit_with_2() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path().join("x");
    assert_eq!(relaxo(&["invert", "--set", "Z-RQ"], &d).status.code(), Some(2));
    assert_eq!(relaxo(&["invert", "--bogus"], &d).status.code(), Some(2));
    assert_eq!(relaxo(&["table", "--preset", "nope"], &d).status.code(), Some(2));
    assert_eq!(relaxo(&["invert"], &d).status.code(), Some(2));
    let bad = t.path().join("bad.ini");
    fs::write(&bad, "[experiment]\nunknown = 1\n").unwrap();
    assert_eq!(relaxo(&["simulate", "--set", "A-RQ", "--config", bad.to_str().unwrap()], &d).status.code(), Some(2));
    fs::write(t.path().join("spec.csv"), "omega,z1,z2\n1,1,0\n").unwrap();
    let spec = t.path().join("spec.csv");
    assert_eq!(
        relaxo(&["invert", "--input", spec.to_str().unwrap(), "--criterion", "opt"], &d).status.code(),
        Some(2)
    );
}

#[test]
fn missing_peak_exits_with_3() {
    let t = tempfile::tempdir().unwrap();
    let spec = t.path().join("mono.csv");
    let rows: String = (0..20).map(|k| format!("{},{},{}\n", 10f64.powi(k - 10), 1.0, k as f64)).collect();
    fs::write(&spec, format!("omega,z1,z2\n{rows}")).unwrap();
    let o = relaxo(&["fit", "--input", spec.to_str().unwrap(), "--family", "rq"], &t.path().join("o"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
