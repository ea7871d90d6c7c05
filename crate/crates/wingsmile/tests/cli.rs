use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[model]
s0 = 0.05
sigma = 0.2
rho = 0.6
t = 1.2

[grid]
k_min = -6.0
k_max = -2.0
n_points = 3
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wingsmile")).args(args).output().unwrap()
}

fn with_config<F: FnOnce(&str)>(text: &str, f: F) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, text).unwrap();
    f(path.to_str().unwrap());
}

#[test]
fn mass_csv_has_header_and_one_row() {
    with_config(CONFIG, |c| {
        let out = run(&["mass", "--config", c]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().next().unwrap(), "s0,sigma,rho,T,gamma_a,gamma_y,m_T");
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\r\n"));
    });
}

#[test]
fn dotted_overrides_change_the_run() {
    with_config(CONFIG, |c| {
        let base = run(&["mass", "--config", c]).stdout;
        let a = run(&["mass", "--config", c, "--model.sigma", "0.3"]).stdout;
        let b = run(&["mass", "--config", c, "--model.sigma=0.3"]).stdout;
        let d = run(&["mass", "--config", c, "--set", "model.sigma=0.3"]).stdout;
        assert_ne!(base, a);
        assert_eq!(a, b);
        assert_eq!(a, d);
    });
}

#[test]
fn out_flag_writes_file() {
    with_config(CONFIG, |c| {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("smile.svg");
        let out = run(&["smile", "--config", c, "--format", "svg", "--out", target.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
        assert!(std::fs::read_to_string(&target).unwrap().starts_with("<?xml"));
    });
}

#[test]
fn configuration_problems_exit_with_2() {
    assert_eq!(run(&["smile", "--config", "/nonexistent/c.toml"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    with_config(CONFIG, |c| {
        for extra in [
            &["--model.rho=1.5"][..],
            &["--grid.k_max=1"],
            &["--format", "png"],
            &["--model.colour=1"],
            &["--model.sigma"],
        ] {
            let mut args = vec!["smile", "--config", c];
            args.extend_from_slice(extra);
            let out = run(&args);
            assert_eq!(out.status.code(), Some(2), "{extra:?}");
            assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
        }
        assert_eq!(run(&["mass", "--config", c, "--format", "svg"]).status.code(), Some(2));
        assert_eq!(run(&["mc", "--config", c]).status.code(), Some(2));
    });
    with_config("[model]\nkind = \"atom\"\nmass = 0.1\nt = 1.0\n[grid]\nk_min = -6.0\nk_max = -2.0\nn_points = 3\n", |c| {
        assert_eq!(run(&["compare", "--config", c]).status.code(), Some(2));
        assert_eq!(run(&["smile", "--config", c]).status.code(), Some(0));
    });
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert!(Path::new(env!("CARGO_BIN_EXE_wingsmile")).exists());
}
