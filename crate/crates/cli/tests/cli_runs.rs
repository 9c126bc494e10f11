use std::path::Path;
use std::process::Command;

use codedlab_cli::{parse_config, run, write_csv};

fn codedlab(dir: &Path, command: &str, config: &str, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join(format!("{command}.cfg"));
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_codedlab"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .env("CODEDLAB_THREADS", "2")
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn brs_sweep_has_one_exact_row_per_set() {
    let cfg = parse_config("[gc]\nscheme = brs\nn = 8\nk = 4\ns = 2\nseed = 1\n").unwrap();
    let rows = run(&cfg).unwrap();
    assert_eq!(rows.len(), 28);
    assert!(rows.iter().all(|r| r.metric == "error" && r.value <= 1e-8));
}

#[test]
fn sketch_median_error_decreases() {
    let cfg = parse_config("[sketch]\nq = 16, 64, 256\ntrials = 100\nseed = 4\n").unwrap();
    let rows = run(&cfg).unwrap();
    let medians: Vec<f64> = rows.iter().filter(|r| r.metric == "median_error").map(|r| r.value).collect();
    assert_eq!(medians.len(), 3);
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn every_command_runs() {
    let configs = [
        "[gc]\nscheme = expander\ns = 1\nsweep = rounds\nrounds = 5\n",
        "[gc]\nscheme = bibd\ns = 2\n",
        "[gc]\nscheme = bernoulli\nn = 6\nk = 6\ns = 1\n",
        "[cmm]\nscheme = matdot\nn = 9\nk = 4\n",
        "[cmm]\nscheme = polynomial\nn = 5\nk = 2\n",
        "[cmm]\nscheme = entangled\nn = 5\n",
        "[cmm]\nscheme = setwise\nn = 5\nk = 4\nr = 2\nsweep = rounds\nrounds = 3\n",
        "[cmm]\nscheme = weighted\nn = 5\nk = 4\nr = 2\n",
        "[cmm]\nscheme = independent\nn = 4\nk = 4\nr = 2\npoints = real\n",
        "[cmm]\nscheme = oversketch\nn = 16\nq = 16\nblock = 4\ne = 1\n",
        "[sketch]\nmethod = srht\nq = 32\ntrials = 5\nepsilon = 0.5\n",
        "[sketch]\nmethod = countsketch\nq = 32\ntrials = 5\n",
        "[descend]\nscheme = sketching\nk = 4\nn = 8\ns = 2\niterations = 20\n",
        "[descend]\nscheme = centralized\niterations = 5\n",
        "[report]\nscheme = expander\ns = 2\n",
    ];
    for text in configs {
        let cfg = parse_config(text).unwrap_or_else(|e| panic!("{text}: {e:?}"));
        let rows = run(&cfg).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert!(!rows.is_empty());
        let mut buf = Vec::new();
        write_csv(&rows, &cfg, &mut buf).unwrap();
    }
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[descend]\nscheme = brs\nn = 8\nk = 4\ns = 2\nrows = 64\niterations = 30\n";
    for format in ["csv", "jsonl"] {
        let a = dir.path().join(format!("a.{format}"));
        let b = dir.path().join(format!("b.{format}"));
        for out in [&a, &b] {
            let (code, err) = codedlab(
                dir.path(),
                "descend",
                config,
                &["--seed", "9", "--format", format, "--out", out.to_str().unwrap()],
            );
            assert_eq!(code, 0, "{err}");
        }
        let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(x, y);
        assert!(String::from_utf8(x).unwrap().contains("seed"));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let out = out.to_str().unwrap();

    let (code, err) = codedlab(dir.path(), "gc", "[gc]\nscheme = brs\nn = 8\nk = 4\ns = 2\nfoo = 1\n", &["--out", out]);
    assert_eq!(code, 2);
    assert!(err.contains("line 6") && err.contains("foo"), "{err}");

    let (code, _) = codedlab(dir.path(), "cmm", "[gc]\nscheme = brs\nn = 8\nk = 4\ns = 2\n", &["--out", out]);
    assert_eq!(code, 2);

    let (code, _) = codedlab(
        dir.path(),
        "gc",
        "[gc]\nscheme = frc\nn = 4\ns = 1\nsweep = rounds\nrounds = 2\npolicy = fixed\nstragglers = 0,1\n",
        &["--out", out],
    );
    assert_eq!(code, 3);
    assert!(std::fs::read_to_string(out).unwrap().contains("unrecoverable"));

    let missing = dir.path().join("no/such/dir/out.csv");
    let (code, err) = codedlab(dir.path(), "gc", "[gc]\nscheme = brs\nn = 8\nk = 4\ns = 2\n", &["--out", missing.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert!(err.contains("no/such/dir"), "{err}");

    let (code, _) = codedlab(dir.path(), "gc", "[gc]\nscheme = brs\nn = 8\nk = 4\ns = 2\n", &["--out", out]);
    assert_eq!(code, 0);
}
