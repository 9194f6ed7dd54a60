use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use vortlab_cli::preset;

fn vortlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortlab"))
        .args(args)
        .env("VORTLAB_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

/// Smoke preset with `key = value` lines replaced or appended.
fn smoke_with(overrides: &[(&str, &str)]) -> String {
    let mut lines: Vec<String> = preset("smoke").unwrap().lines().map(str::to_string).collect();
    for (k, v) in overrides {
        let line = format!("{k} = {v}");
        match lines.iter_mut().find(|l| l.split('=').next().map(str::trim) == Some(*k)) {
            Some(l) => *l = line,
            None => lines.push(line),
        }
    }
    lines.join("\n") + "\n"
}

fn run_config(text: &str, dir: &Path) -> Output {
    let cfg = dir.join("exp.cfg");
    fs::write(&cfg, text).unwrap();
    vortlab(&["run", cfg.to_str().unwrap()], &dir.join("out"))
}

#[test]
fn smoke_preset_single_thread_passes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = run_config(&smoke_with(&[("threads", "1")]), dir.path());
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&o.stderr));
    assert!(elapsed < Duration::from_secs(60), "{elapsed:?}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
    for f in ["config.txt", "fingerprint.txt", "norms.csv", "summary.txt", "contraction.csv", "manufactured.csv"] {
        assert!(dir.path().join("out").join(f).is_file(), "missing {f}");
    }
}

#[test]
fn even_node_count_is_a_parse_error_naming_n() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&smoke_with(&[("n", "16")]), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`n`"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_and_duplicate_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("n = 17\nsmoothness = 3\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smoothness"));
    let o = run_config("n = 17\nn = 33\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = vortlab(&["run", "preset:nope"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flipped_sign_fails_the_manufactured_contract() {
    let dir = tempfile::tempdir().unwrap();
    let text = "R = 4\nn = 17\nnu = 0.1\nT = 0.5\nn_steps = 4\nk_max = 4\nprofile = smooth\n\
                contraction = false\ndecay = false\nincompressibility = false\nblowup = false\n\
                manufactured = true\nflip_burgers = true\n";
    let o = run_config(text, dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("FAIL manufactured_solution"), "{stdout}");
}

#[test]
fn artifacts_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    assert_eq!(run_config(&smoke_with(&[("threads", "1")]), &a).status.code(), Some(0));
    assert_eq!(run_config(&smoke_with(&[("threads", "3")]), &b).status.code(), Some(0));
    let mut names: Vec<_> = fs::read_dir(a.join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 8);
    for name in names {
        let x = fs::read(a.join("out").join(&name)).unwrap();
        let y = fs::read(b.join("out").join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn csv_files_carry_fingerprint_and_units() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_config(&smoke_with(&[]), dir.path()).status.code(), Some(0));
    let out = dir.path().join("out");
    let fp = fs::read_to_string(out.join("fingerprint.txt")).unwrap();
    let fp = fp.trim();
    assert_eq!(fp.len(), 64);
    for e in fs::read_dir(&out).unwrap() {
        let p = e.unwrap().path();
        if p.extension().and_then(|x| x.to_str()) != Some("csv") {
            continue;
        }
        let text = fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(format!("# fingerprint={fp}").as_str()), "{p:?}");
        assert!(lines.next().unwrap().starts_with("# units:"), "{p:?}");
        let header = lines.next().unwrap();
        let cols = header.split(',').count();
        for row in lines {
            assert_eq!(row.split(',').count(), cols, "{p:?}");
            if !p.ends_with("norms.csv") {
                assert!(row.split(',').all(|v| v.trim().parse::<f64>().is_ok()), "{p:?}: {row}");
            }
        }
    }
}

#[test]
fn fingerprint_ignores_output_location_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    run_config(&smoke_with(&[("threads", "1"), ("blowup", "false")]), &a);
    run_config(&smoke_with(&[("threads", "2"), ("blowup", "false"), ("output_dir", "elsewhere")]), &b);
    let fa = fs::read_to_string(a.join("out/fingerprint.txt")).unwrap();
    let fb = fs::read_to_string(b.join("out/fingerprint.txt")).unwrap();
    assert_eq!(fa, fb);
    let c = dir.path().join("c");
    fs::create_dir_all(&c).unwrap();
    run_config(&smoke_with(&[("blowup", "false"), ("nu", "0.05")]), &c);
    assert_ne!(fa, fs::read_to_string(c.join("out/fingerprint.txt")).unwrap());
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let text = smoke_with(&[("output_dir", "never-used"), ("moment", "false"), ("blowup", "false")]);
    let o = run_config(&text, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("out/summary.txt").is_file());
    assert!(!Path::new("never-used").exists());
}

#[test]
fn presets_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let o = vortlab(&["presets"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let list = String::from_utf8_lossy(&o.stdout);
    for name in ["smoke", "singular-default", "kink-k2", "nu-sweep", "moment-audit"] {
        assert!(list.contains(name), "{list}");
    }
    let o = vortlab(&["presets", "kink-k2"], dir.path());
    assert!(String::from_utf8_lossy(&o.stdout).contains("beta0"));
    let o = vortlab(&["version"], dir.path());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("vortlab "));
}
