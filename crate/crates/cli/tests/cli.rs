use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bcpp(args: &[&str]) -> Output {
    bcpp_env(args, &[])
}

fn bcpp_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bcpp"));
    cmd.args(args).env_remove("BCPP_CONFIG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/danish_like_losses.csv")
}

fn toml_f64(path: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
        .parse()
        .unwrap()
}

const SMALL_MODEL: &str = "copula = \"clayton\"\ndelta = 1.0\nlambda1 = 200\nmargin1 = \"exponential\"\ntheta1 = 1.0\nlambda2 = 150\nmargin2 = \"exponential\"\ntheta2 = 2.0\n";

#[test]
fn simulate_is_deterministic_and_sized() {
    let d = TempDir::new().unwrap();
    let (a, b) = (p(&d, "a.csv"), p(&d, "b.csv"));
    for out in [&a, &b] {
        ok(&bcpp(&["simulate", "--intervals", "100", "--horizon", "1", "--seed", "7", "--out-panel", s(out)]));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let rows = String::from_utf8(text).unwrap().lines().count();
    assert_eq!(rows, 101, "header plus 100 intervals");
}

#[test]
fn simulated_panel_refits_near_truth() {
    let d = TempDir::new().unwrap();
    let (panel, events, fit, boot) = (p(&d, "panel.csv"), p(&d, "events.csv"), p(&d, "fit.toml"), p(&d, "boot.csv"));
    ok(&bcpp(&["simulate", "--seed", "11", "--out-panel", s(&panel), "--out-events", s(&events)]));
    ok(&bcpp(&["fit", "--panel", s(&panel), "--events", s(&events), "--out", s(&fit)]));
    ok(&bcpp(&["bootstrap", "--replicates", "20", "--seed", "12", "--out", s(&boot)]));
    let delta = toml_f64(&fit, "delta");
    let sd_row = fs::read_to_string(&boot).unwrap();
    let sd: f64 = sd_row.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    // a single estimate lies within one SD only about 68% of the time
    assert!((delta - 1.0).abs() <= 2.0 * sd, "delta {delta}, bootstrap SD {sd}");
}

#[test]
fn estimation_ignores_origin_labels() {
    let d = TempDir::new().unwrap();
    let model = p(&d, "m.toml");
    fs::write(&model, SMALL_MODEL).unwrap();
    let (panel, plain, labelled) = (p(&d, "panel.csv"), p(&d, "plain.csv"), p(&d, "labelled.csv"));
    ok(&bcpp(&["simulate", "--model", s(&model), "--seed", "3", "--out-panel", s(&panel), "--out-events", s(&plain)]));
    ok(&bcpp(&["simulate", "--model", s(&model), "--seed", "3", "--out-events", s(&labelled), "--keep-origins"]));
    assert!(fs::read_to_string(&labelled).unwrap().starts_with("time,amount1,amount2,origin"));
    let (f1, f2) = (p(&d, "f1.toml"), p(&d, "f2.toml"));
    ok(&bcpp(&["fit", "--panel", s(&panel), "--events", s(&plain), "--out", s(&f1)]));
    ok(&bcpp(&["fit", "--panel", s(&panel), "--events", s(&labelled), "--out", s(&f2)]));
    assert_eq!(fs::read(&f1).unwrap(), fs::read(&f2).unwrap());
}

#[test]
fn flags_override_config_and_env_selects_config() {
    let d = TempDir::new().unwrap();
    let cfg = p(&d, "run.toml");
    let panel = p(&d, "panel.csv");
    fs::write(&cfg, format!("intervals = 20\nseed = 5\nout_panel = \"{}\"\n{SMALL_MODEL}", s(&panel))).unwrap();
    ok(&bcpp_env(&["simulate"], &[("BCPP_CONFIG", s(&cfg))]));
    assert_eq!(fs::read_to_string(&panel).unwrap().lines().count(), 21);
    ok(&bcpp(&["simulate", "--config", s(&cfg), "--intervals", "30"]));
    assert_eq!(fs::read_to_string(&panel).unwrap().lines().count(), 31);
}

#[test]
fn sidecar_replays_the_run() {
    let d = TempDir::new().unwrap();
    let panel = p(&d, "panel.csv");
    ok(&bcpp(&["simulate", "--intervals", "40", "--seed", "9", "--out-panel", s(&panel)]));
    let first = fs::read(&panel).unwrap();
    fs::remove_file(&panel).unwrap();
    let meta = p(&d, "panel.csv.meta");
    ok(&bcpp(&["simulate", "--config", s(&meta)]));
    assert_eq!(fs::read(&panel).unwrap(), first);
}

#[test]
fn exit_codes_classify_failures() {
    let d = TempDir::new().unwrap();
    let out = p(&d, "x.csv");
    let code = |o: Output| o.status.code().unwrap();

    assert_eq!(code(bcpp(&["simulate", "--horizon", "-1", "--out-panel", s(&out)])), 2);
    assert_eq!(code(bcpp(&["simulate"])), 2, "no output requested");
    assert_eq!(code(bcpp(&["simulate", "--bogus"])), 2);
    let cfg = p(&d, "bad.toml");
    fs::write(&cfg, "intervalz = 3\n").unwrap();
    assert_eq!(code(bcpp(&["simulate", "--config", s(&cfg), "--out-panel", s(&out)])), 2);

    assert_eq!(code(bcpp(&["fit", "--panel", s(&p(&d, "missing.csv")), "--events", s(&out)])), 4);
    assert_eq!(code(bcpp(&["simulate", "--out-panel", s(&p(&d, "no/such/dir.csv"))])), 4);

    // an iteration budget of one cannot converge
    let (panel, events) = (p(&d, "panel.csv"), p(&d, "events.csv"));
    ok(&bcpp(&["simulate", "--out-panel", s(&panel), "--out-events", s(&events)]));
    let tight = p(&d, "tight.toml");
    fs::write(&tight, "max_iter = 1\n").unwrap();
    let fit_out = p(&d, "fit.toml");
    let o = bcpp(&["fit", "--config", s(&tight), "--panel", s(&panel), "--events", s(&events), "--out", s(&fit_out)]);
    assert_eq!(code(o), 3);
    assert!(fs::read_to_string(&fit_out).unwrap().contains("converged = false"));
}

#[test]
fn fit_rejects_mismatched_jump_files() {
    let d = TempDir::new().unwrap();
    let (panel, other) = (p(&d, "panel.csv"), p(&d, "other.csv"));
    ok(&bcpp(&["simulate", "--seed", "1", "--out-panel", s(&panel)]));
    ok(&bcpp(&["simulate", "--seed", "2", "--out-events", s(&other)]));
    let o = bcpp(&["fit", "--panel", s(&panel), "--events", s(&other)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("do not match"));
}

#[test]
fn ingest_refuses_transformed_input() {
    let d = TempDir::new().unwrap();
    let raw = p(&d, "losses.csv");
    fs::copy(fixture(), &raw).unwrap();
    fs::write(p(&d, "losses.csv.meta"), "provenance = \"transformed\"\n").unwrap();
    let o = bcpp(&["ingest", "--input", s(&raw), "--out-panel", s(&p(&d, "panel.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing"));
}

#[test]
fn loss_data_workflow_flags_common_shock_misfit() {
    let d = TempDir::new().unwrap();
    let (panel, j1, j2) = (p(&d, "panel.csv"), p(&d, "s1.csv"), p(&d, "s2.csv"));
    let text = ok(&bcpp(&[
        "ingest", "--input", s(&fixture()), "--out-panel", s(&panel), "--out-jumps1", s(&j1), "--out-jumps2", s(&j2),
    ]));
    assert!(text.contains("panel 132 x 2"), "{text}");

    let fit = |copula: &str, out: &Path| {
        ok(&bcpp(&[
            "fit", "--panel", s(&panel), "--jumps1", s(&j1), "--jumps2", s(&j2), "--margin1", "weibull",
            "--margin2", "weibull", "--copula", copula, "--out", s(out),
        ]))
    };
    let (clayton, pcs) = (p(&d, "clayton.toml"), p(&d, "pcs.toml"));
    fit("clayton", &clayton);
    fit("pure-common-shock", &pcs);
    assert!((toml_f64(&clayton, "delta") - 0.5494).abs() < 0.005);

    let gof_pcs = ok(&bcpp(&["gof", "--model", s(&pcs), "--panel", s(&panel), "--out", s(&p(&d, "gof.csv"))]));
    assert!(gof_pcs.contains("rho12: p = "), "{gof_pcs}");
    assert!(gof_pcs.lines().any(|l| l.starts_with("rho12") && l.contains("1% level")));
    let gof_clayton = ok(&bcpp(&["gof", "--model", s(&clayton), "--panel", s(&panel)]));
    assert!(!gof_clayton.lines().any(|l| l.starts_with("rho12:")));

    let csv = fs::read_to_string(p(&d, "gof.csv")).unwrap();
    assert!(csv.starts_with("copula,row,JB1,JB2,mu1,mu2,sigma1,sigma2,rho1,rho2,rho12\npure-common-shock,statistic,"));
}

#[test]
fn report_renders_three_row_bootstrap_table() {
    let d = TempDir::new().unwrap();
    let model = p(&d, "m.toml");
    fs::write(&model, SMALL_MODEL).unwrap();
    let boot = p(&d, "boot.csv");
    ok(&bcpp(&["bootstrap", "--model", s(&model), "--replicates", "5", "--intervals", "20", "--out", s(&boot)]));
    let csv = fs::read_to_string(&boot).unwrap();
    let first_col: Vec<&str> = csv.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(first_col, ["row", "value", "bootstrap mean", "bootstrap standard deviation"]);
    let text = ok(&bcpp(&["report", s(&boot)]));
    for label in ["value", "bootstrap mean", "bootstrap standard deviation"] {
        assert!(text.lines().any(|l| l.starts_with(label)), "{text}");
    }
    assert!(text.contains("lambda1") && text.contains("delta"));
}

#[test]
fn gof_needs_a_model() {
    let d = TempDir::new().unwrap();
    let panel = p(&d, "panel.csv");
    ok(&bcpp(&["simulate", "--out-panel", s(&panel)]));
    assert_eq!(bcpp(&["gof", "--panel", s(&panel)]).status.code(), Some(2));
}
