use std::path::Path;
use std::process::{Command, Output};

use finform::config::parse_config;
use finform::report::{parse_report, run_report};
use finform::sim::simulate;
use finform::trace::Trace;

fn finform(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_finform"));
    cmd.args(args).env_remove("FINFORM_OUT");
    if let Some(p) = env_out {
        cmd.env("FINFORM_OUT", p);
    }
    cmd.output().expect("spawn finform")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FILES: [&str; 4] = ["trace.csv", "report.txt", "psi.svg", "theta.svg"];

#[test]
fn simulate_builtin_writes_four_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = finform(
        &["simulate", "--scenario", "gauss1d", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in FILES {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let trace = Trace::parse_str(&std::fs::read_to_string(out.join("trace.csv")).unwrap()).unwrap();
    assert_eq!(trace.rows.len(), 200_001);
    let svg = std::fs::read_to_string(out.join("psi.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    let rep = parse_report(&std::fs::read_to_string(out.join("report.txt")).unwrap()).unwrap();
    assert_eq!(rep["status"], "completed");
    assert_eq!(rep["exits_after_first_entry"], "0");
}

#[test]
fn config_run_report_matches_in_memory_diagnostics() {
    let text = "[plant]\nbuiltin = gauss1d_noise\n\n[sim]\nt_end = 25\n";
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = finform(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let on_disk = parse_report(&std::fs::read_to_string(out.join("report.txt")).unwrap()).unwrap();

    let sc = parse_config(text).unwrap();
    let run = simulate(&sc.closed_loop).unwrap();
    let d = &run.diagnostics;
    let num = |k: &str| on_disk[k].parse::<f64>().unwrap();
    assert_eq!(num("sup_u"), d.sup_u);
    assert_eq!(num("sup_x"), d.sup_x);
    assert_eq!(num("sup_abs_theta0"), d.sup_abs_theta0);
    assert_eq!(num("max_event_jump"), d.max_event_jump);
    assert_eq!(num("max_error_model_gap"), d.max_error_model_gap);
    assert_eq!(num("goal_radius"), d.goal_radius);
    assert_eq!(Some(num("t_enter")), d.t_enter);
    assert_eq!(on_disk["event_count"].parse::<usize>().unwrap(), d.event_count);
    assert_eq!(on_disk["steps"].parse::<usize>().unwrap(), d.steps);
    let in_memory: Vec<(String, String)> = run_report(&sc, &run).entries;
    assert_eq!(in_memory.len(), on_disk.len());
    for (k, v) in in_memory {
        assert_eq!(on_disk[&k], v, "key {k}");
    }
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("env");
    let flag_dir = dir.path().join("flag");
    let args = ["simulate", "--scenario", "sincos2d", "--t-end", "5"];
    assert_eq!(code(&finform(&args, Some(&env_dir))), 0);
    assert!(env_dir.join("trace.csv").is_file());
    let mut with_flag = args.to_vec();
    with_flag.extend(["--out", flag_dir.to_str().unwrap()]);
    assert_eq!(code(&finform(&with_flag, Some(&env_dir.join("unused")))), 0);
    assert!(flag_dir.join("report.txt").is_file());
    assert!(!env_dir.join("unused").exists());
}

#[test]
fn simulate_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[plant]\nbuiltin = gauss1d\n[sim]\ndt = 1e-3\nspeed = 4\n").unwrap();
    let o = finform(&["simulate", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));

    let o = finform(
        &["simulate", "--scenario", "gauss1d", "--dt", "0.1", "--t-end", "0.05"],
        None,
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("shorter than one step"));

    assert_eq!(code(&finform(&["simulate"], None)), 1);
    assert_eq!(code(&finform(&["simulate", "--scenario", "nope"], None)), 1);
}

#[test]
fn never_entered_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("short");
    let o = finform(
        &[
            "simulate",
            "--scenario",
            "gauss1d",
            "--t-end",
            "1",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 2);
    for f in FILES {
        assert!(out.join(f).is_file());
    }
    let rep = parse_report(&std::fs::read_to_string(out.join("report.txt")).unwrap()).unwrap();
    assert_eq!(rep["t_enter"], "none");
}

#[test]
fn verify_exit_codes() {
    assert_eq!(code(&finform(&["verify", "--scenario", "nope"], None)), 1);
    let o = finform(&["verify", "--scenario", "gauss1d"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = finform(&["verify", "--scenario", "gauss1d", "--mutate", "flip-theta-p"], None);
    assert_ne!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL finite form matches rate law"), "{stdout}");
}

#[test]
fn verify_all_passes() {
    let o = finform(&["verify", "--all"], None);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert_eq!(stdout.matches("== ").count(), 5);
}

#[test]
fn sweep_table_and_errors() {
    let o = finform(
        &[
            "sweep",
            "--scenario",
            "gauss1d",
            "--param",
            "gamma",
            "--values",
            "0.5,1,2",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("param,value,reached"));
    for l in &lines[1..] {
        assert_eq!(l.split(',').nth(2), Some("true"), "{l}");
    }
    assert_eq!(
        code(&finform(
            &["sweep", "--scenario", "gauss1d", "--param", "k", "--values"],
            None
        )),
        1
    );
    assert_eq!(
        code(&finform(
            &["sweep", "--scenario", "gauss1d", "--param", "zeta", "--values", "1"],
            None
        )),
        1
    );
}

#[test]
fn check_pe_exit_codes() {
    let o = finform(&["check-pe", "--scenario", "gauss1d_pe"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict = satisfied"));
    assert_eq!(
        code(&finform(&["check-pe", "--scenario", "gauss1d_pe", "--M", "1e9"], None)),
        2
    );
    assert_eq!(code(&finform(&["check-pe"], None)), 1);
    assert_eq!(code(&finform(&["check-pe", "--scenario", "gauss1d"], None)), 1);
}
