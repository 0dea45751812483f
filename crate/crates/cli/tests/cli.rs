use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use superres::io::{to_json, LowPassFile, MultiLowPassFile};
use superres::model::{forward_measure, forward_multi, MultiSpikeTrain, ProblemConfig, SpikeTrain, C64};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_superres"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn superres")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn truth() -> SpikeTrain {
    SpikeTrain::new(
        vec![0.1, 0.45, 0.8],
        vec![C64::new(1.0, 0.0), C64::new(0.0, -1.5), C64::new(-0.7, 0.7)],
    )
    .unwrap()
}

fn write_single(dir: &Path, y: &superres::model::LowPassData) -> PathBuf {
    let p = dir.join("y.json");
    std::fs::write(&p, to_json(&LowPassFile::from(y)).unwrap()).unwrap();
    p
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn help_exits_zero_and_bad_flags_exit_64() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["phase", "--help"])), 0);
    assert_eq!(code(&run(&["recover", "--no-such-flag", "x.json"])), 64);
    assert_eq!(code(&run(&["no-such-command"])), 64);
    assert_eq!(code(&run(&["kernel-dump", "--step", "abc"])), 64);
}

#[test]
fn recover_reports_the_true_support() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ProblemConfig::new(10).unwrap();
    let input = write_single(dir.path(), &forward_measure(&truth(), cfg));
    let o = run(&["recover", input.to_str().unwrap(), "--fc", "10", "--oracle", "--oracle-grid", "840"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["command"], "recover");
    assert_close(&floats(&v["estimate"]["support"]), truth().support(), 1e-6);
    assert_close(&floats(&v["estimate"]["amp_re"]), &[1.0, 0.0, -0.7], 1e-5);
    assert!(v["data_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["certificate"]["pass"], true, "{}", v["certificate"]);
    // Grid points 84, 378 and 672 of 840 carry the spikes.
    assert_eq!(v["oracle"]["support_agrees"], true, "{}", v["oracle"]);
}

#[test]
fn fc_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_single(dir.path(), &forward_measure(&truth(), ProblemConfig::new(10).unwrap()));
    assert_eq!(code(&run(&["recover", input.to_str().unwrap(), "--fc", "12"])), 64);
}

#[test]
fn refuses_to_overwrite_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_single(dir.path(), &forward_measure(&truth(), ProblemConfig::new(10).unwrap()));
    let before = std::fs::read(&input).unwrap();
    let p = input.to_str().unwrap();
    let o = run(&["recover", p, "--out", p]);
    assert_eq!(code(&o), 64);
    assert_eq!(std::fs::read(&input).unwrap(), before);
}

#[test]
fn output_and_trace_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_single(dir.path(), &forward_measure(&truth(), ProblemConfig::new(10).unwrap()));
    let out = dir.path().join("est.json");
    let trace = dir.path().join("trace.csv");
    let o = run(&[
        "recover",
        input.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["estimate"]["support"].as_array().unwrap().len(), 3);
    let t = std::fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("iter,primal_res,dual_res,objective\n"));
    assert!(t.lines().count() > 2);
}

#[test]
fn demix_separates_corruptions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ProblemConfig::new(10).unwrap();
    let mut y = forward_measure(&truth(), cfg);
    let mut coeffs = y.coeffs().to_vec();
    coeffs[3] += C64::new(2.0, 0.0);
    coeffs[15] += C64::new(0.0, -1.0);
    y = superres::model::LowPassData::new(cfg, coeffs).unwrap();
    let input = write_single(dir.path(), &y);
    let eta = format!("{}", 1.0 / 21f64.sqrt());
    let o = run(&["demix", input.to_str().unwrap(), "--eta", &eta]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert_eq!(v["command"], "demix");
    assert_close(&floats(&v["spectra"]["support"]), truth().support(), 1e-6);
    let spikes: Vec<u64> = v["spike_support"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    assert_eq!(spikes, vec![3, 15]);
    assert!((v["spikes_re"][3].as_f64().unwrap() - 2.0).abs() < 1e-5);
    assert!((v["spikes_im"][15].as_f64().unwrap() + 1.0).abs() < 1e-5);
}

#[test]
fn joint_recovers_a_shared_support() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ProblemConfig::new(10).unwrap();
    let amps = nalgebra::DMatrix::from_row_slice(
        3,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.5),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.3, -0.2),
            C64::new(0.8, 0.1),
        ],
    );
    let x = MultiSpikeTrain::new(vec![0.1, 0.45, 0.8], amps).unwrap();
    let y = forward_multi(&x, cfg);
    let input = dir.path().join("multi.json");
    std::fs::write(&input, to_json(&MultiLowPassFile::from(&y)).unwrap()).unwrap();
    let o = run(&["joint", input.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert_eq!(v["command"], "joint");
    assert_close(&floats(&v["estimate"]["support"]), x.support(), 1e-6);
}

#[test]
fn kernel_dump_writes_csv() {
    let o = run(&["kernel-dump", "--tau-max", "0.5", "--step", "0.1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# format_version=1"));
    assert_eq!(lines.next().unwrap(), "order,tau,lower,upper,value,tail");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(r.len(), 6);
        let lower: f64 = r[2].parse().unwrap();
        let upper: f64 = r[3].parse().unwrap();
        let value: f64 = r[4].parse().unwrap();
        assert!(lower <= value + 1e-15 && value <= upper + 1e-15, "{r:?}");
    }
}

#[test]
fn phase_writes_a_small_table() {
    let o = run(&[
        "phase", "--fc", "6", "--deltas", "1.5,2.0", "--trials", "2", "--spikes", "2", "--seed", "7",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config="));
    let header = lines.iter().position(|l| l.starts_with("kind,")).unwrap();
    assert_eq!(lines[header], "kind,fc,delta_over_lambda,m,nT,nS,fraction,mean_iters,mean_gap");
    assert_eq!(lines.len() - header - 1, 2);
    for row in &lines[header + 1..] {
        let fraction: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&fraction));
    }
}

#[test]
fn phase_is_reproducible_for_a_seed() {
    let args = ["phase", "--fc", "5", "--deltas", "1.0", "--trials", "3", "--spikes", "2", "--seed", "3"];
    let a = run(&args);
    let b = run(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(code(&a), 0);
    let body = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .filter(|l| !l.starts_with("# config="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&a), body(&b));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\nfc = 5\ntrials = 1\nspikes = 1\ndeltas = 1.0\nseed = 11\n").unwrap();
    let o = run(&["phase", "--config", cfg.to_str().unwrap(), "--trials", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let config: Value = serde_json::from_str(text.lines().next().unwrap().trim_start_matches("# config=")).unwrap();
    assert_eq!(config["fc"], 5);
    assert_eq!(config["trials"], 2);
    assert_eq!(config["seed"], 11);

    std::fs::write(&cfg, "bogus line\n").unwrap();
    assert_eq!(code(&run(&["phase", "--config", cfg.to_str().unwrap()])), 64);
}

#[test]
fn certify_exit_code_follows_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    for (eps, expected, verdict) in [("1e-3", 2, "Fail"), ("1e-4", 3, "Inconclusive")] {
        let report = dir.path().join(format!("cert-{eps}.json"));
        let o = run(&["certify", "--eps", eps, "--report", report.to_str().unwrap()]);
        assert_eq!(code(&o), expected, "eps {eps}");
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains(&format!("verdict: {verdict}")), "{stdout}");
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(v["verdict"], verdict.to_uppercase());
    }
}
