use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eel")).args(args).env_remove("EEL_WORKERS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_unstable_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = eel(&["simulate", "--alpha", "0.3", "--k", "0.166667", "--epsilon", "0.25", "--n", "256", "--out", dir_arg(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out.join("verdict.json"));
    assert_eq!(v["classification"]["verdict"], "unstable");
    assert!(v["classification"]["t_star"].as_f64().unwrap() > 1.0);
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("t,H0_v,H1_v,H2_v,H3_v,H4_v,H0_L,"));
    assert!(fs::read_to_string(out.join("h4_ratio.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn simulate_zero_amplitude_is_undecided() {
    let dir = tempfile::tempdir().unwrap();
    let o = eel(&["simulate", "--epsilon", "0", "--n", "32", "--t-max", "100", "--out", dir_arg(dir.path())]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("verdict.json"))["classification"]["verdict"], "undecided");
}

#[test]
fn simulate_stable_regime_runs_to_t_max() {
    let dir = tempfile::tempdir().unwrap();
    let o = eel(&["simulate", "--alpha", "0.8", "--k", "0.166667", "--epsilon", "0.05", "--out", dir_arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let v = json(&dir.path().join("verdict.json"));
    // whether the stability threshold is reached is checked by the acceptance suite
    assert_ne!(v["classification"]["verdict"], "unstable");
    assert_eq!(v["outcome"]["kind"], "completed");
    assert_eq!(v["t_final"].as_f64().unwrap(), 1e6);
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(code(&eel(&["simulate", "--bogus"])), 1);
    assert_eq!(code(&eel(&["simulate", "--alpha", "1.5"])), 1);
    assert_eq!(code(&eel(&["simulate", "--n", "100"])), 1);
    assert_eq!(code(&eel(&["frobnicate"])), 1);
    assert_eq!(code(&eel(&["--help"])), 0);
}

const SWEEP_CFG: &str = "\
alpha_list = 0.3, 0.4, 0.5
epsilon_list = 1.0, 0.5, 0.25
n_grid = 64
";

#[test]
fn sweep_fit_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(&cfg, SWEEP_CFG).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = eel(&["sweep", "--config", dir_arg(&cfg), "--workers", "2", "--out", dir_arg(&a)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = Command::new(env!("CARGO_BIN_EXE_eel"))
        .args(["sweep", "--config", dir_arg(&cfg), "--workers", "1", "--out", dir_arg(&b)])
        .env("EEL_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("with 3 workers"));
    let table = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(table, fs::read(b.join("sweep.csv")).unwrap(), "sweeps must be byte-identical");
    let text = String::from_utf8(table).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.starts_with("alpha,K,epsilon,verdict,t_star\n"));

    let fit_dir = dir.path().join("fit");
    let o = eel(&["fit", "--in", dir_arg(&a.join("sweep.csv")), "--out", dir_arg(&fit_dir)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fits = json(&fit_dir.join("fits.json"));
    assert_eq!(fits["scaling"].as_array().unwrap().len(), 3);
    for f in fits["scaling"].as_array().unwrap() {
        assert!(f["A"].as_f64().unwrap() < 0.0);
    }
    assert!(fits["critical"][0]["alpha_crit"].as_f64().unwrap() > 0.5);
    for name in ["scaling.svg", "critical.svg"] {
        assert!(fs::read_to_string(fit_dir.join(name)).unwrap().contains("<circle"));
    }
    for kind in ["scaling", "critical"] {
        let svg = dir.path().join(format!("{kind}.svg"));
        let o = eel(&["plot", "--in", dir_arg(&a.join("sweep.csv")), "--kind", kind, "--out", dir_arg(&svg)]);
        assert_eq!(code(&o), 0);
        assert!(svg.exists());
    }
    // a sweep table is not a series table
    let o = eel(&["plot", "--in", dir_arg(&a.join("sweep.csv")), "--kind", "norms", "--out", dir_arg(&dir.path().join("x.svg"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_with_empty_grid_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    fs::write(&cfg, "alpha_list = 0.3\n").unwrap();
    assert_eq!(code(&eel(&["sweep", "--config", dir_arg(&cfg), "--out", dir_arg(dir.path())])), 1);
    fs::write(&cfg, "alpha_list = 0.3\nwat = 1\n").unwrap();
    assert_eq!(code(&eel(&["sweep", "--config", dir_arg(&cfg)])), 1);
    assert_eq!(code(&eel(&["sweep", "--config", dir_arg(&dir.path().join("missing.cfg"))])), 1);
}

#[test]
fn fit_with_one_alpha_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    fs::write(
        &csv,
        "alpha,K,epsilon,verdict,t_star\n0.3,0.1,0.5,unstable,5\n0.3,0.1,0.25,unstable,15\n0.3,0.1,0.125,unstable,45\n",
    )
    .unwrap();
    let o = eel(&["fit", "--in", dir_arg(&csv), "--out", dir_arg(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.3"));
}

#[test]
fn fit_recovers_planted_law() {
    // A(alpha) = (2/3)/(alpha - 2/3), B = 0.7
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let mut text = String::from("alpha,K,epsilon,verdict,t_star\n");
    for alpha in [0.3f64, 0.4, 0.5] {
        let a = (2.0 / 3.0) / (alpha - 2.0 / 3.0);
        for eps in [0.5f64, 0.25, 0.125, 0.0625] {
            let t = (0.7 + a * eps.ln()).exp();
            text.push_str(&format!("{alpha},0.16666666666666666,{eps},unstable,{}\n", eel::table::fmt_f64(t)));
        }
    }
    fs::write(&csv, text).unwrap();
    let o = eel(&["fit", "--in", dir_arg(&csv), "--out", dir_arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let fits = json(&dir.path().join("fits.json"));
    let c = &fits["critical"][0];
    assert!((c["C"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
    assert!((c["alpha_crit"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn characteristics_report_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let burgers = dir.path().join("burgers");
    let o = eel(&["characteristics", "--alpha", "0", "--k", "0", "--epsilon", "0.1", "--t-max", "12", "--family", "plus", "--out", dir_arg(&burgers)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = json(&burgers.join("crossing.json"))[0]["t_cross"].as_f64().unwrap();
    assert!((t / 11.0 - 1.0).abs() < 0.02, "{t}");
    let csv = fs::read_to_string(burgers.join("chars.csv")).unwrap();
    assert!(csv.starts_with("family,seed,t,x_unwrapped,R,u\n"));
    let svg = dir.path().join("replot.svg");
    let o = eel(&["plot", "--in", dir_arg(&burgers.join("chars.csv")), "--kind", "chars", "--out", dir_arg(&svg)]);
    assert_eq!(code(&o), 0);

    let calm = dir.path().join("calm");
    let o = eel(&["characteristics", "--alpha", "0.8", "--epsilon", "0.25", "--n", "128", "--seeds", "16", "--out", dir_arg(&calm)]);
    assert_eq!(code(&o), 0);
    let doc = json(&calm.join("crossing.json"));
    assert_eq!(doc.as_array().unwrap().len(), 2);
    assert!(doc[0]["t_cross"].is_null() && doc[1]["t_cross"].is_null());
}

#[test]
fn slow_expansion_crosses_before_fast_expansion() {
    let dir = tempfile::tempdir().unwrap();
    let mut times = Vec::new();
    for alpha in ["0.3", "0.8"] {
        let out = dir.path().join(alpha);
        let o = eel(&["characteristics", "--alpha", alpha, "--epsilon", "1", "--n", "512", "--t-max", "30", "--family", "plus", "--out", dir_arg(&out)]);
        assert_eq!(code(&o), 0);
        times.push(json(&out.join("crossing.json"))[0]["t_cross"].as_f64());
    }
    let fast = times[0].expect("alpha = 0.3, eps = 1 crosses");
    assert!(times[1].map_or(true, |slow| slow > 2.0 * fast), "{times:?}");
}
